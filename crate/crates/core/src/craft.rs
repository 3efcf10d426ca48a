//! Carrier construction: the offensive half of the toolkit. Each protocol
//! builds a carrier file with a payload hidden in a different spot (post-EOF
//! trailer, metadata segment, obfuscated trailer, whole-file base64 wrap),
//! producing corpus entries the scanner must catch.

use serde::{Deserialize, Serialize};

use crate::bytesearch::find_first;
use crate::container::{parse_container, FormatKind, ParsedContainer, RegionKind};
use crate::error::{Error, Result};
use crate::payload::{eicar_bytes, PayloadSpec};
use crate::transform::{apply, TransformChain};

/// Largest payload a single COM segment can hold: the 2-byte length field
/// counts itself, and two bytes are reserved for labeling headroom.
pub const MAX_COM_PAYLOAD: usize = 65_531;

/// Wrap width for base64 output, per MIME convention.
const WRAP_COLUMNS: usize = 76;

/// Byte index (within the signature) after which the linebreak mutation
/// splits it. Fixed for reproducibility.
const LINEBREAK_SPLIT_AT: usize = 34;

/// The four attack protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    AppendPostEof,
    MetadataEmbed,
    ObfuscatedAppend,
    Base64Wrap,
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "append" | "append_post_eof" => Ok(Protocol::AppendPostEof),
            "metadata" | "metadata_embed" => Ok(Protocol::MetadataEmbed),
            "obfuscated" | "obfuscated_append" => Ok(Protocol::ObfuscatedAppend),
            "base64-wrap" | "base64_wrap" => Ok(Protocol::Base64Wrap),
            other => Err(format!("unknown protocol: {other}")),
        }
    }
}

/// Hash-evasion tweaks applied after the protocol builds its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    InsertLinebreakMidSignature,
    AppendTrailingSpace,
}

impl std::str::FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linebreak" | "insert_linebreak_mid_signature" => {
                Ok(Mutation::InsertLinebreakMidSignature)
            }
            "trailing-space" | "append_trailing_space" => Ok(Mutation::AppendTrailingSpace),
            other => Err(format!("unknown mutation: {other}")),
        }
    }
}

/// One attack protocol instance, ready to build.
#[derive(Debug, Clone)]
pub struct CraftRecipe {
    pub protocol: Protocol,
    pub carrier: Vec<u8>,
    pub payload: PayloadSpec,
    /// Forward obfuscation chain; identity for protocols that do not
    /// obfuscate. Ignored by base64_wrap, whose wrap is the obfuscation.
    pub chain: TransformChain,
    pub mutations: Vec<Mutation>,
}

impl CraftRecipe {
    pub fn build(&self) -> Result<Vec<u8>> {
        let mut out = match self.protocol {
            Protocol::AppendPostEof => craft_append(&self.carrier, &self.payload.bytes)?,
            Protocol::MetadataEmbed => craft_metadata(&self.carrier, &self.payload.bytes)?,
            Protocol::ObfuscatedAppend => {
                craft_obfuscated(&self.carrier, &self.payload.bytes, &self.chain)?
            }
            Protocol::Base64Wrap => {
                let appended = craft_append(&self.carrier, &self.payload.bytes)?;
                craft_base64_wrap(&appended)
            }
        };
        for mutation in &self.mutations {
            out = mutate_variant(&out, *mutation)?;
        }
        Ok(out)
    }
}

/// Validate that a carrier is a clean, well-formed image we can build an
/// unambiguous corpus entry from.
fn validated_carrier(carrier: &[u8]) -> Result<ParsedContainer> {
    let parsed = parse_container(carrier);
    if parsed.format.kind == FormatKind::Unknown {
        return Err(Error::UnsupportedFormat(
            "carrier does not match any known image magic".into(),
        ));
    }
    if !parsed.well_formed {
        return Err(Error::CarrierNotWellFormed(
            parsed.diagnostics.first().cloned().unwrap_or_default(),
        ));
    }
    if parsed.trailer().is_some() {
        return Err(Error::CarrierNotWellFormed(
            "carrier already has a post-EOF trailer".into(),
        ));
    }
    Ok(parsed)
}

/// Protocol 1: append the payload after the container's end marker. The
/// image portion is untouched; the payload becomes the post-EOF trailer.
pub fn craft_append(carrier: &[u8], payload: &[u8]) -> Result<Vec<u8>> {
    validated_carrier(carrier)?;
    let mut out = Vec::with_capacity(carrier.len() + payload.len());
    out.extend_from_slice(carrier);
    out.extend_from_slice(payload);
    Ok(out)
}

/// Mask the payload in image metadata: insert a JPEG COM segment directly
/// after the last APPn segment (or after SOI if there is none). Rendered
/// pixels are unchanged.
pub fn craft_metadata(carrier: &[u8], payload: &[u8]) -> Result<Vec<u8>> {
    let parsed = validated_carrier(carrier)?;
    if parsed.format.kind != FormatKind::Jpeg {
        return Err(Error::UnsupportedFormat(format!(
            "metadata embedding targets JPEG carriers, got {}",
            parsed.format.kind
        )));
    }
    if payload.len() > MAX_COM_PAYLOAD {
        return Err(Error::PayloadTooLarge {
            actual: payload.len(),
            max: MAX_COM_PAYLOAD,
        });
    }

    let insert_at = parsed
        .regions
        .iter()
        .rfind(|r| r.kind == RegionKind::Metadata && r.label.starts_with("APP"))
        .map(|r| r.end())
        .unwrap_or(2); // directly after SOI

    let mut out = Vec::with_capacity(carrier.len() + payload.len() + 4);
    out.extend_from_slice(&carrier[..insert_at]);
    out.push(0xFF);
    out.push(0xFE);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&carrier[insert_at..]);
    Ok(out)
}

/// Protocol 3: append an obfuscated payload. The chain must be invertible so
/// the corpus stays detectable by construction.
pub fn craft_obfuscated(carrier: &[u8], payload: &[u8], chain: &TransformChain) -> Result<Vec<u8>> {
    if let Some(step) = chain.steps.iter().find(|s| s.inverse().is_none()) {
        return Err(Error::NonInvertibleStep(step.name().into()));
    }
    validated_carrier(carrier)?;
    let obfuscated = apply(chain, payload)?;
    let mut out = Vec::with_capacity(carrier.len() + obfuscated.len());
    out.extend_from_slice(carrier);
    out.extend_from_slice(&obfuscated);
    Ok(out)
}

/// Protocol 4: the whole input as base64 text, wrapped at 76 columns with LF
/// line ends and no trailing newline. Decoding recovers the input exactly.
pub fn craft_base64_wrap(input: &[u8]) -> Vec<u8> {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;

    let encoded = STANDARD.encode(input);
    let mut out = Vec::with_capacity(encoded.len() + encoded.len() / WRAP_COLUMNS + 1);
    for (i, chunk) in encoded.as_bytes().chunks(WRAP_COLUMNS).enumerate() {
        if i > 0 {
            out.push(b'\n');
        }
        out.extend_from_slice(chunk);
    }
    out
}

/// Result of splitting a file at a marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub part1: Vec<u8>,
    /// The marker and everything after it; empty when the marker is absent.
    pub part2: Vec<u8>,
    pub found: bool,
}

/// Split at the first occurrence of `marker`: part1 holds the bytes before
/// it, part2 starts at the marker. When the marker is absent, part1 is the
/// whole input.
pub fn split_at_marker(input: &[u8], marker: &[u8]) -> Result<SplitResult> {
    if marker.is_empty() {
        return Err(Error::EmptyMarker);
    }
    match find_first(input, marker) {
        Some(at) => Ok(SplitResult {
            part1: input[..at].to_vec(),
            part2: input[at..].to_vec(),
            found: true,
        }),
        None => Ok(SplitResult {
            part1: input.to_vec(),
            part2: Vec::new(),
            found: false,
        }),
    }
}

/// Apply one hash-evasion mutation.
pub fn mutate_variant(input: &[u8], mutation: Mutation) -> Result<Vec<u8>> {
    match mutation {
        Mutation::AppendTrailingSpace => {
            let mut out = input.to_vec();
            out.push(b' ');
            Ok(out)
        }
        Mutation::InsertLinebreakMidSignature => {
            let signature = eicar_bytes();
            let at = find_first(input, &signature).ok_or_else(|| {
                Error::MutationNotApplicable("input does not contain the built-in signature".into())
            })?;
            let split = at + LINEBREAK_SPLIT_AT;
            let mut out = Vec::with_capacity(input.len() + 1);
            out.extend_from_slice(&input[..split]);
            out.push(b'\n');
            out.extend_from_slice(&input[split..]);
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::{white_gif_1x1, white_jpeg_1x1, white_png_1x1};
    use crate::container::extract_region;
    use crate::payload::eicar_bytes;
    use crate::transform::TransformStep;

    #[test]
    fn append_produces_trailer_equal_to_payload() {
        let carrier = white_jpeg_1x1();
        let payload = eicar_bytes();
        let crafted = craft_append(&carrier, &payload).unwrap();
        assert_eq!(crafted.len(), carrier.len() + 68);

        let parsed = parse_container(&crafted);
        let trailer = parsed.trailer().expect("trailer");
        assert_eq!(trailer.length, 68);
        assert_eq!(extract_region(&crafted, trailer).unwrap(), &payload[..]);
    }

    #[test]
    fn append_empty_payload_is_identity() {
        let carrier = white_jpeg_1x1();
        assert_eq!(craft_append(&carrier, &[]).unwrap(), carrier);
    }

    #[test]
    fn append_works_for_png() {
        let crafted = craft_append(&white_png_1x1(), &eicar_bytes()).unwrap();
        let parsed = parse_container(&crafted);
        let trailer = parsed.trailer().expect("trailer");
        assert_eq!(extract_region(&crafted, trailer).unwrap(), eicar_bytes());
    }

    #[test]
    fn append_refuses_malformed_carrier() {
        let truncated = &white_jpeg_1x1()[..40];
        assert!(matches!(
            craft_append(truncated, b"p"),
            Err(Error::CarrierNotWellFormed(_))
        ));
    }

    #[test]
    fn append_refuses_unknown_format() {
        assert!(matches!(
            craft_append(b"plain text", b"p"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn metadata_com_length_field() {
        let crafted = craft_metadata(&white_jpeg_1x1(), b"hello").unwrap();
        let at = find_first(&crafted, &[0xFF, 0xFE]).expect("COM marker");
        let declared = u16::from_be_bytes([crafted[at + 2], crafted[at + 3]]);
        assert_eq!(declared, 7); // payload + the length field itself
        assert_eq!(&crafted[at + 4..at + 9], b"hello");
    }

    #[test]
    fn metadata_region_carries_payload() {
        let payload = eicar_bytes();
        let crafted = craft_metadata(&white_jpeg_1x1(), &payload).unwrap();
        let parsed = parse_container(&crafted);
        assert!(parsed.well_formed, "{:?}", parsed.diagnostics);
        assert!(parsed.trailer().is_none());
        let com = parsed
            .regions
            .iter()
            .find(|r| r.label == "COM")
            .expect("COM region");
        let bytes = extract_region(&crafted, com).unwrap();
        assert!(bytes.windows(payload.len()).any(|w| w == payload));
    }

    #[test]
    fn metadata_oversize_payload_is_rejected() {
        let big = vec![0u8; MAX_COM_PAYLOAD + 1];
        assert!(matches!(
            craft_metadata(&white_jpeg_1x1(), &big),
            Err(Error::PayloadTooLarge { .. })
        ));
        // Boundary: the maximum itself fits.
        assert!(craft_metadata(&white_jpeg_1x1(), &vec![0u8; MAX_COM_PAYLOAD]).is_ok());
    }

    #[test]
    fn metadata_refuses_non_jpeg() {
        assert!(matches!(
            craft_metadata(&white_gif_1x1(), b"x"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn obfuscated_reverse_trailer_prefix() {
        let chain = TransformChain::new(vec![TransformStep::Reverse]);
        let crafted = craft_obfuscated(&white_jpeg_1x1(), &eicar_bytes(), &chain).unwrap();
        let parsed = parse_container(&crafted);
        let trailer = parsed.trailer().expect("trailer");
        let bytes = extract_region(&crafted, trailer).unwrap();
        assert!(bytes.starts_with(b"*H+H$"));
    }

    #[test]
    fn obfuscated_empty_chain_equals_append() {
        let chain = TransformChain::identity();
        let payload = eicar_bytes();
        assert_eq!(
            craft_obfuscated(&white_jpeg_1x1(), &payload, &chain).unwrap(),
            craft_append(&white_jpeg_1x1(), &payload).unwrap()
        );
    }

    #[test]
    fn obfuscated_rejects_lossy_chain() {
        let chain = TransformChain::new(vec![TransformStep::StripLinebreaks]);
        assert!(matches!(
            craft_obfuscated(&white_jpeg_1x1(), b"p", &chain),
            Err(Error::NonInvertibleStep(_))
        ));
    }

    #[test]
    fn base64_wrap_textbook_block() {
        assert_eq!(craft_base64_wrap(b"abc"), b"YWJj");
        assert_eq!(craft_base64_wrap(b""), b"");
    }

    #[test]
    fn base64_wrap_roundtrips_exactly() {
        use base64::engine::general_purpose::STANDARD;
        use base64::Engine;
        let input = craft_append(&white_jpeg_1x1(), &eicar_bytes()).unwrap();
        let wrapped = craft_base64_wrap(&input);
        // All lines at most 76 columns.
        assert!(wrapped.split(|b| *b == b'\n').all(|l| l.len() <= 76));
        assert!(!wrapped.ends_with(b"\n"));
        let joined: Vec<u8> = wrapped.iter().copied().filter(|b| *b != b'\n').collect();
        assert_eq!(STANDARD.decode(&joined).unwrap(), input);
    }

    #[test]
    fn split_at_marker_recovers_payload() {
        let crafted = craft_append(&white_jpeg_1x1(), &eicar_bytes()).unwrap();
        let split = split_at_marker(&crafted, b"X5O!").unwrap();
        assert!(split.found);
        assert_eq!(split.part2, eicar_bytes());
        let rejoined = [split.part1.clone(), split.part2.clone()].concat();
        assert_eq!(rejoined, crafted);
    }

    #[test]
    fn split_marker_absent() {
        let split = split_at_marker(b"no marker here", b"X5O!").unwrap();
        assert!(!split.found);
        assert_eq!(split.part1, b"no marker here");
        assert!(split.part2.is_empty());
    }

    #[test]
    fn split_rejects_empty_marker() {
        assert!(matches!(
            split_at_marker(b"input", b""),
            Err(Error::EmptyMarker)
        ));
    }

    #[test]
    fn trailing_space_changes_digest() {
        let payload = eicar_bytes();
        let mutated = mutate_variant(&payload, Mutation::AppendTrailingSpace).unwrap();
        assert_eq!(mutated.len(), 69);
        assert_eq!(mutated.last(), Some(&b' '));
        // Digest divergence is asserted against golden values in scan tests.
        assert_ne!(mutated, payload);
    }

    #[test]
    fn trailing_space_on_empty_input() {
        assert_eq!(
            mutate_variant(&[], Mutation::AppendTrailingSpace).unwrap(),
            b" "
        );
    }

    #[test]
    fn linebreak_mutation_splits_signature() {
        let crafted = craft_append(&white_jpeg_1x1(), &eicar_bytes()).unwrap();
        let mutated = mutate_variant(&crafted, Mutation::InsertLinebreakMidSignature).unwrap();
        assert_eq!(mutated.len(), crafted.len() + 1);
        // The contiguous signature is gone...
        assert!(find_first(&mutated, &eicar_bytes()).is_none());
        // ...but stripping linebreaks restores it.
        let stripped: Vec<u8> = mutated.iter().copied().filter(|b| *b != b'\n').collect();
        assert!(find_first(&stripped, &eicar_bytes()).is_some());
    }

    #[test]
    fn linebreak_mutation_needs_signature() {
        assert!(matches!(
            mutate_variant(b"clean bytes", Mutation::InsertLinebreakMidSignature),
            Err(Error::MutationNotApplicable(_))
        ));
    }
}
