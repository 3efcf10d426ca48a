//! Property tests for the parser, transform, and crafter invariants.

use proptest::prelude::*;

use stegoprobe_core::carrier::{white_bmp_1x1, white_gif_1x1, white_jpeg_1x1, white_png_1x1};
use stegoprobe_core::container::{extract_region, parse_container, reassemble};
use stegoprobe_core::craft::{craft_append, split_at_marker};
use stegoprobe_core::transform::{
    apply, find_base64_runs, inverse_views, TransformChain, TransformStep,
};

fn carriers() -> Vec<Vec<u8>> {
    vec![
        white_jpeg_1x1(),
        white_png_1x1(),
        white_gif_1x1(),
        white_bmp_1x1(),
    ]
}

/// Strategy for invertible forward chains of length <= 2.
fn invertible_chain() -> impl Strategy<Value = TransformChain> {
    let step = prop_oneof![
        Just(TransformStep::Reverse),
        Just(TransformStep::Base64Encode),
    ];
    proptest::collection::vec(step, 0..=2).prop_map(TransformChain::new)
}

proptest! {
    /// Parsing never aborts, regions always cover the input exactly, and
    /// reassembly is the identity. This holds for arbitrary garbage.
    #[test]
    fn parse_roundtrip_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..2048)) {
        let parsed = parse_container(&bytes);
        let mut cursor = 0usize;
        for region in &parsed.regions {
            prop_assert_eq!(region.offset, cursor);
            cursor += region.length;
        }
        prop_assert_eq!(cursor, bytes.len());
        prop_assert_eq!(reassemble(&parsed, &bytes).unwrap(), bytes);
    }

    /// Same properties for a valid carrier damaged at one position: flip,
    /// truncate, or insert.
    #[test]
    fn parse_roundtrip_damaged_carriers(
        which in 0usize..4,
        op in 0usize..3,
        at in any::<usize>(),
        value in any::<u8>(),
    ) {
        let mut bytes = carriers()[which].clone();
        match op {
            0 => {
                let at = at % bytes.len();
                bytes[at] ^= value | 1;
            }
            1 => bytes.truncate(at % (bytes.len() + 1)),
            _ => bytes.insert(at % (bytes.len() + 1), value),
        }
        let parsed = parse_container(&bytes);
        prop_assert_eq!(reassemble(&parsed, &bytes).unwrap(), bytes);
    }

    /// Appending any non-empty payload to a clean carrier yields a trailer
    /// whose bytes equal the payload, for every supported format.
    #[test]
    fn trailer_equals_payload(
        which in 0usize..4,
        payload in proptest::collection::vec(any::<u8>(), 1..512),
    ) {
        let carrier = &carriers()[which];
        let crafted = craft_append(carrier, &payload).unwrap();
        let parsed = parse_container(&crafted);
        let trailer = parsed.trailer().expect("trailer region");
        prop_assert_eq!(extract_region(&crafted, trailer).unwrap(), &payload[..]);
    }

    /// Re-parsing the reassembled bytes produces identical regions.
    #[test]
    fn parse_is_idempotent(bytes in proptest::collection::vec(any::<u8>(), 0..1024)) {
        let parsed = parse_container(&bytes);
        let rebuilt = reassemble(&parsed, &bytes).unwrap();
        let reparsed = parse_container(&rebuilt);
        prop_assert_eq!(parsed.regions, reparsed.regions);
        prop_assert_eq!(parsed.well_formed, reparsed.well_formed);
    }

    /// For every invertible chain c with length <= 2, the inverse search of
    /// apply(c, payload) at depth 2 contains a view equal to the payload.
    #[test]
    fn inverse_search_is_sound(
        chain in invertible_chain(),
        payload in proptest::collection::vec(any::<u8>(), 32..128),
    ) {
        let obfuscated = apply(&chain, &payload).unwrap();
        let search = inverse_views(&obfuscated, 2);
        prop_assert!(
            search.views.iter().any(|v| v.bytes == payload),
            "no view recovered the payload for chain {}",
            chain
        );
    }

    /// Identical inputs yield identical ordered view lists.
    #[test]
    fn inverse_search_is_deterministic(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let a = inverse_views(&bytes, 2);
        let b = inverse_views(&bytes, 2);
        prop_assert_eq!(a.views, b.views);
        prop_assert_eq!(a.truncated, b.truncated);
    }

    /// part1 ++ part2 always reproduces the input.
    #[test]
    fn split_concatenation_identity(
        input in proptest::collection::vec(any::<u8>(), 0..512),
        marker in proptest::collection::vec(any::<u8>(), 1..8),
    ) {
        let split = split_at_marker(&input, &marker).unwrap();
        prop_assert_eq!([split.part1, split.part2].concat(), input);
    }

    /// Reported base64 runs stay in bounds and hold only alphabet bytes,
    /// pads, or interior line breaks.
    #[test]
    fn base64_runs_are_well_formed(bytes in proptest::collection::vec(any::<u8>(), 0..1024)) {
        for (offset, length) in find_base64_runs(&bytes, 4) {
            prop_assert!(offset + length <= bytes.len());
            let run = &bytes[offset..offset + length];
            prop_assert!(run.iter().all(|b| b.is_ascii_alphanumeric()
                || matches!(b, b'+' | b'/' | b'=' | b'\r' | b'\n')));
            // Runs start on an alphabet byte, never padding or a break.
            prop_assert!(run[0].is_ascii_alphanumeric() || matches!(run[0], b'+' | b'/'));
        }
    }

    /// Entropy stays within [0, 8] bits/byte.
    #[test]
    fn entropy_bounds(bytes in proptest::collection::vec(any::<u8>(), 0..2048)) {
        let h = stegoprobe_core::scan::shannon_entropy(&bytes);
        prop_assert!((0.0..=8.0).contains(&h));
    }

    /// Applying a chain then its formal inverse is the identity.
    #[test]
    fn chain_inverse_roundtrip(
        chain in invertible_chain(),
        payload in proptest::collection::vec(any::<u8>(), 0..256),
    ) {
        let forward = apply(&chain, &payload).unwrap();
        let inverse = chain.inverse().expect("invertible chain");
        prop_assert_eq!(apply(&inverse, &forward).unwrap(), payload);
    }
}
