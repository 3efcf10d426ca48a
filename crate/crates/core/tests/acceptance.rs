//! Acceptance suite: one test per release criterion, each printing a
//! PASS line and enforcing its runtime budget.
//!
//! Golden digests were computed once with independent tools (md5sum,
//! sha1sum, python hashlib) and are frozen here.

use std::time::{Duration, Instant};

use stegoprobe_core::carrier::{
    jpeg_progressive_layout, jpeg_with_byte_stuffing, white_jpeg_1x1, white_jpeg_exif,
    white_jpeg_restart,
};
use stegoprobe_core::container::{parse_container, reassemble, RegionKind};
use stegoprobe_core::corpus::{default_manifest, generate_corpus, verify_corpus};
use stegoprobe_core::craft::{
    craft_append, craft_base64_wrap, craft_obfuscated, mutate_variant, split_at_marker, Mutation,
};
use stegoprobe_core::payload::{eicar_bytes, EICAR_MD5};
use stegoprobe_core::report::{render_report, Media};
use stegoprobe_core::scan::{builtin_signatures, compute_digests, scan, RegionRef};
use stegoprobe_core::transform::{apply, TransformChain, TransformStep};

/// MD5 of payload + one trailing space, frozen from an independent digest
/// tool (md5sum).
const TRAILING_SPACE_MD5: &str = "62b97e1a78f740a95997f4b24f59ffd3";

fn assert_budget(name: &str, elapsed: Duration, budget: Duration) {
    assert!(
        elapsed <= budget,
        "{name} took {elapsed:?}, budget {budget:?}"
    );
}

#[test]
fn criterion_1_canonical_digest() {
    let start = Instant::now();
    let digests = compute_digests(&eicar_bytes());
    let elapsed = start.elapsed();

    assert_eq!(digests.md5, EICAR_MD5);
    assert_eq!(digests.md5, "44d88612fea8a8f36de82e1278abb02f");
    assert_budget("criterion 1", elapsed, Duration::from_millis(1));
    println!("ACCEPTANCE 1 (canonical digest): PASS [{elapsed:?}]");
}

#[test]
fn criterion_2_append_protocol() {
    let carrier = white_jpeg_1x1();
    let payload = eicar_bytes();

    let start = Instant::now();
    let crafted = craft_append(&carrier, &payload).expect("craft");
    let parsed = parse_container(&crafted);
    let elapsed = start.elapsed();

    let trailer = parsed.trailer().expect("post-EOF trailer");
    assert_eq!(trailer.length, 68);
    assert_eq!(&crafted[trailer.offset..], &payload[..]);

    // Image regions are byte-identical to the clean carrier: same region
    // structure, same bytes.
    let clean = parse_container(&carrier);
    let image_regions: Vec<_> = parsed
        .regions
        .iter()
        .filter(|r| r.kind != RegionKind::PostEofTrailer)
        .cloned()
        .collect();
    assert_eq!(image_regions, clean.regions);
    assert_eq!(&crafted[..carrier.len()], &carrier[..]);

    assert_budget("criterion 2", elapsed, Duration::from_millis(10));
    println!("ACCEPTANCE 2 (append protocol): PASS [{elapsed:?}]");
}

#[test]
fn criterion_3_split_protocol() {
    let carrier = craft_append(&white_jpeg_1x1(), &eicar_bytes()).expect("craft");

    let start = Instant::now();
    let split = split_at_marker(&carrier, b"X5O!").expect("split");
    let elapsed = start.elapsed();

    assert!(split.found);
    assert_eq!(split.part2, eicar_bytes());
    assert_eq!([split.part1.clone(), split.part2.clone()].concat(), carrier);

    assert_budget("criterion 3", elapsed, Duration::from_millis(10));
    println!("ACCEPTANCE 3 (split protocol): PASS [{elapsed:?}]");
}

#[test]
fn criterion_4_obfuscation_protocols_and_corpus() {
    let signatures = builtin_signatures();
    let carrier = white_jpeg_1x1();
    let payload = eicar_bytes();
    let start = Instant::now();

    // Reverse variant: depth 2 finds it via [reverse], depth 0 misses.
    let reverse_chain = TransformChain::new(vec![TransformStep::Reverse]);
    let reversed = craft_obfuscated(&carrier, &payload, &reverse_chain).expect("craft");
    let deep = scan(&reversed, &signatures, 2);
    assert!(
        deep.findings
            .iter()
            .any(|f| f.chain.steps == [TransformStep::Reverse]),
        "reverse variant not recovered"
    );
    assert!(scan(&reversed, &signatures, 0).findings.is_empty());

    // base64_wrap variant: [base64_decode] at depth >= 1.
    let wrapped = craft_base64_wrap(&craft_append(&carrier, &payload).expect("craft"));
    let deep = scan(&wrapped, &signatures, 2);
    assert!(
        deep.findings
            .iter()
            .any(|f| f.chain.steps == [TransformStep::Base64Decode]),
        "wrapped variant not recovered"
    );
    assert!(scan(&wrapped, &signatures, 0).findings.is_empty());

    // base64-of-reverse: [base64_decode, reverse] at depth 2.
    let composed = TransformChain::new(vec![TransformStep::Reverse, TransformStep::Base64Encode]);
    let double = craft_obfuscated(&carrier, &payload, &composed).expect("craft");
    let deep = scan(&double, &signatures, 2);
    assert!(
        deep.findings
            .iter()
            .any(|f| f.chain.steps == [TransformStep::Base64Decode, TransformStep::Reverse]),
        "base64-of-reverse variant not recovered"
    );
    assert!(scan(&double, &signatures, 0).findings.is_empty());

    // Full corpus: 100% detection on attack entries, zero false positives
    // on the clean controls.
    let dir = tempfile::tempdir().expect("tempdir");
    let index = generate_corpus(&default_manifest(), dir.path(), false).expect("generate");
    let controls = index.entries.iter().filter(|e| !e.expected.detect).count();
    assert!(controls >= 10, "need at least 10 clean controls");

    let result = verify_corpus(&dir.path().join("index.json"), 2).expect("verify");
    for entry in &result.entries {
        assert!(entry.passed, "{}: {}", entry.id, entry.detail);
    }
    assert_eq!(result.detection_rate(), 1.0);
    assert_eq!(result.control_false_positives, 0);

    let elapsed = start.elapsed();
    assert_budget("criterion 4", elapsed, Duration::from_secs(10));
    println!(
        "ACCEPTANCE 4 (obfuscation protocols + corpus {}): PASS [{elapsed:?}]",
        result.summary_line()
    );
}

#[test]
fn criterion_5_trailing_space_hash() {
    let payload = eicar_bytes();
    let mutated = mutate_variant(&payload, Mutation::AppendTrailingSpace).expect("mutate");
    let digests = compute_digests(&mutated);

    assert_ne!(digests.md5, EICAR_MD5);
    assert_eq!(digests.md5, TRAILING_SPACE_MD5);
    println!("ACCEPTANCE 5 (trailing-space hash divergence): PASS");
}

/// Deterministic pseudo-random stream for fixture mutation.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

#[test]
fn criterion_6_parser_roundtrip() {
    let fixtures: Vec<Vec<u8>> = vec![
        white_jpeg_1x1(),
        jpeg_progressive_layout(),
        white_jpeg_exif(),
        white_jpeg_restart(),
        jpeg_with_byte_stuffing(),
    ];
    assert!(fixtures.len() >= 5);

    let start = Instant::now();
    for fixture in &fixtures {
        let parsed = parse_container(fixture);
        assert!(parsed.well_formed, "{:?}", parsed.diagnostics);
        assert_eq!(&reassemble(&parsed, fixture).expect("reassemble"), fixture);
    }

    let mut rng = SplitMix64(0x5EED_CAFE);
    for i in 0..1000 {
        let base = &fixtures[i % fixtures.len()];
        let mut mutated = base.clone();
        match rng.next() % 3 {
            0 => {
                // Flip a byte.
                let at = (rng.next() as usize) % mutated.len();
                mutated[at] ^= (rng.next() as u8) | 1;
            }
            1 => {
                // Truncate.
                let keep = (rng.next() as usize) % (mutated.len() + 1);
                mutated.truncate(keep);
            }
            _ => {
                // Insert a random byte.
                let at = (rng.next() as usize) % (mutated.len() + 1);
                mutated.insert(at, rng.next() as u8);
            }
        }
        // Parse must not abort, and regions must still cover the input.
        let parsed = parse_container(&mutated);
        let rebuilt = reassemble(&parsed, &mutated).expect("region cover");
        assert_eq!(rebuilt, mutated, "roundtrip failed on derivative {i}");
    }
    let elapsed = start.elapsed();

    assert_budget("criterion 6", elapsed, Duration::from_secs(5));
    println!("ACCEPTANCE 6 (parser roundtrip, 1000 derivatives): PASS [{elapsed:?}]");
}

/// The independent oracle: a naive substring scanner over raw bytes.
fn brute_force_offsets(haystack: &[u8], needle: &[u8]) -> Vec<usize> {
    let mut hits = Vec::new();
    if needle.is_empty() || haystack.len() < needle.len() {
        return hits;
    }
    for i in 0..=haystack.len() - needle.len() {
        if &haystack[i..i + needle.len()] == needle {
            hits.push(i);
        }
    }
    hits
}

#[test]
fn criterion_7_oracle_equivalence() {
    let signatures = builtin_signatures();
    let pattern = signatures[0].pattern().to_vec();

    let dir = tempfile::tempdir().expect("tempdir");
    let index = generate_corpus(&default_manifest(), dir.path(), false).expect("generate");

    let start = Instant::now();
    for entry in &index.entries {
        let bytes = std::fs::read(dir.path().join(&entry.path)).expect("read corpus file");
        let oracle = brute_force_offsets(&bytes, &pattern);

        let report = scan(&bytes, &signatures, 2);
        let mut identity_offsets: Vec<usize> = report
            .findings
            .iter()
            .filter(|f| f.chain.is_empty())
            .map(|f| match &f.region {
                RegionRef::WholeFile(_) => f.match_offset,
                RegionRef::Region(r) => r.offset + f.match_offset,
            })
            .collect();
        identity_offsets.sort_unstable();
        identity_offsets.dedup();

        assert_eq!(
            identity_offsets, oracle,
            "identity findings diverge from oracle on {}",
            entry.id
        );
    }
    let elapsed = start.elapsed();

    assert_budget("criterion 7", elapsed, Duration::from_secs(2));
    println!("ACCEPTANCE 7 (oracle equivalence): PASS [{elapsed:?}]");
}

#[test]
fn criterion_8_defang_closure() {
    let signatures = builtin_signatures();
    let dir = tempfile::tempdir().expect("tempdir");
    let index = generate_corpus(&default_manifest(), dir.path(), false).expect("generate");

    let start = Instant::now();
    for entry in &index.entries {
        let bytes = std::fs::read(dir.path().join(&entry.path)).expect("read corpus file");
        let report = scan(&bytes, &signatures, 2);
        let rendered = render_report(&report, Media::Json);
        let rescan = scan(&rendered.bytes, &signatures, 2);
        assert!(
            rescan.findings.is_empty(),
            "rendered report of {} still triggers findings",
            entry.id
        );
    }
    let elapsed = start.elapsed();

    assert_budget("criterion 8", elapsed, Duration::from_secs(1));
    println!("ACCEPTANCE 8 (defang closure): PASS [{elapsed:?}]");
}

#[test]
fn criterion_9_transform_properties() {
    let start = Instant::now();
    let mut rng = SplitMix64(0xDE7EC7);

    let reverse_twice = TransformChain::new(vec![TransformStep::Reverse, TransformStep::Reverse]);
    let base64_roundtrip = TransformChain::new(vec![
        TransformStep::Base64Encode,
        TransformStep::Base64Decode,
    ]);

    for _ in 0..10_000 {
        let len = (rng.next() as usize) % 256;
        let data: Vec<u8> = (0..len).map(|_| rng.next() as u8).collect();
        assert_eq!(apply(&reverse_twice, &data).expect("reverse"), data);
        assert_eq!(apply(&base64_roundtrip, &data).expect("base64"), data);
    }
    let elapsed = start.elapsed();

    assert_budget("criterion 9", elapsed, Duration::from_secs(5));
    println!("ACCEPTANCE 9 (transform properties, 10000 sequences): PASS [{elapsed:?}]");
}
