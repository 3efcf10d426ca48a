//! Report serialization. Matched payload bytes are represented only by
//! digests, length, and an elided excerpt, so a rendered report never
//! carries a live signature — scanning a report yields nothing.

use serde::{Deserialize, Serialize};

use crate::container::FormatId;
use crate::scan::{DigestSet, Finding, RegionEntropy, RegionRef, ScanReport, StringHit, Verdict};
use crate::transform::TransformChain;

/// Output media for a rendered report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Media {
    Json,
    Text,
}

/// A serialized report plus the media it was rendered as.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedReport {
    pub media: Media,
    pub bytes: Vec<u8>,
}

/// Stable JSON schema. Field order is fixed by declaration; the timestamp is
/// omitted entirely in deterministic mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub target: JsonTarget,
    pub format: FormatId,
    pub well_formed: bool,
    pub findings: Vec<JsonFinding>,
    pub entropy: JsonEntropy,
    pub strings: Vec<StringHit>,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonTarget {
    pub path: String,
    pub digests: DigestSet,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonFinding {
    pub signature_id: String,
    pub region: RegionRef,
    pub chain: TransformChain,
    pub match_offset: usize,
    pub matched: JsonMatched,
}

/// The matched bytes, defanged: digests plus the first bytes with the
/// remainder elided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonMatched {
    pub md5: String,
    pub sha1: String,
    pub sha256: String,
    pub length: usize,
    pub defanged_excerpt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonEntropy {
    pub whole: f64,
    pub per_region: Vec<RegionEntropy>,
}

fn to_json_report(report: &ScanReport) -> JsonReport {
    JsonReport {
        target: JsonTarget {
            path: report.target.path.clone(),
            digests: report.target.digests.clone(),
            length: report.target.length,
        },
        format: report.format,
        well_formed: report.well_formed,
        findings: report.findings.iter().map(to_json_finding).collect(),
        entropy: JsonEntropy {
            whole: report.entropy_whole,
            per_region: report.entropy_per_region.clone(),
        },
        strings: report.strings_summary.clone(),
        verdict: report.verdict,
        diagnostics: report.diagnostics.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: report.timestamp,
    }
}

fn to_json_finding(finding: &Finding) -> JsonFinding {
    JsonFinding {
        signature_id: finding.signature_id.clone(),
        region: finding.region.clone(),
        chain: finding.chain.clone(),
        match_offset: finding.match_offset,
        matched: JsonMatched {
            md5: finding.matched_digest.md5.clone(),
            sha1: finding.matched_digest.sha1.clone(),
            sha256: finding.matched_digest.sha256.clone(),
            length: finding.matched_len,
            defanged_excerpt: finding.excerpt.clone(),
        },
    }
}

/// Render a scan report as JSON or column-aligned text.
pub fn render_report(report: &ScanReport, media: Media) -> RenderedReport {
    let bytes = match media {
        Media::Json => {
            let json = to_json_report(report);
            let mut out = serde_json::to_vec_pretty(&json).expect("report serializes");
            out.push(b'\n');
            out
        }
        Media::Text => render_text(report).into_bytes(),
    };
    RenderedReport { media, bytes }
}

fn verdict_name(verdict: Verdict) -> &'static str {
    match verdict {
        Verdict::Clean => "clean",
        Verdict::Suspicious => "suspicious",
        Verdict::SignatureMatch => "signature_match",
    }
}

fn region_summary(region: &RegionRef) -> String {
    match region {
        RegionRef::WholeFile(_) => "whole_file".to_string(),
        RegionRef::Region(r) => format!(
            "{} {} [{}..{})",
            match r.kind {
                crate::container::RegionKind::Header => "header",
                crate::container::RegionKind::Segment => "segment",
                crate::container::RegionKind::Metadata => "metadata",
                crate::container::RegionKind::ImageData => "image_data",
                crate::container::RegionKind::PostEofTrailer => "post_eof_trailer",
            },
            r.label,
            r.offset,
            r.offset + r.length
        ),
    }
}

fn render_text(report: &ScanReport) -> String {
    let mut out = String::new();
    let path = if report.target.path.is_empty() {
        "<bytes>"
    } else {
        &report.target.path
    };
    out.push_str(&format!("target    {path}\n"));
    out.push_str(&format!("length    {} bytes\n", report.target.length));
    out.push_str(&format!(
        "format    {} (well_formed: {})\n",
        report.format.kind, report.well_formed
    ));
    out.push_str(&format!("md5       {}\n", report.target.digests.md5));
    out.push_str(&format!("sha256    {}\n", report.target.digests.sha256));
    out.push_str(&format!(
        "entropy   {:.4} bits/byte\n",
        report.entropy_whole
    ));
    out.push_str(&format!("verdict   {}\n", verdict_name(report.verdict)));

    if report.findings.is_empty() {
        out.push_str("findings  none\n");
    } else {
        out.push_str(&format!("findings  {}\n", report.findings.len()));
        for f in &report.findings {
            out.push_str(&format!(
                "  {:<18} {:<42} chain {:<32} offset {:<6} {}\n",
                f.signature_id,
                region_summary(&f.region),
                f.chain.to_string(),
                f.match_offset,
                f.excerpt
            ));
        }
    }
    for d in &report.diagnostics {
        out.push_str(&format!("note      {d}\n"));
    }
    out
}

/// Process exit code for a report: 0 clean, 1 signature match, 2 suspicious.
/// Code 3 is reserved for operational errors at the CLI layer.
pub fn exit_code(report: &ScanReport) -> i32 {
    match report.verdict {
        Verdict::Clean => 0,
        Verdict::SignatureMatch => 1,
        Verdict::Suspicious => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::white_jpeg_1x1;
    use crate::craft::craft_append;
    use crate::payload::{eicar_bytes, EICAR_MD5};
    use crate::scan::{builtin_signatures, scan};

    #[test]
    fn clean_report_renders_empty_findings() {
        let report = scan(&white_jpeg_1x1(), &builtin_signatures(), 2);
        let rendered = render_report(&report, Media::Json);
        let value: serde_json::Value = serde_json::from_slice(&rendered.bytes).unwrap();
        assert_eq!(value["verdict"], "clean");
        assert_eq!(value["findings"].as_array().unwrap().len(), 0);
        assert!(value.get("timestamp").is_none());
    }

    #[test]
    fn finding_is_defanged_with_excerpt_and_digest() {
        let crafted = craft_append(&white_jpeg_1x1(), &eicar_bytes()).unwrap();
        let report = scan(&crafted, &builtin_signatures(), 2);
        let rendered = render_report(&report, Media::Json);
        let value: serde_json::Value = serde_json::from_slice(&rendered.bytes).unwrap();
        let matched = &value["findings"][0]["matched"];
        assert_eq!(matched["md5"], EICAR_MD5);
        assert_eq!(matched["length"], 68);
        assert_eq!(matched["defanged_excerpt"], "X5O!P%@A\u{2026}");
    }

    #[test]
    fn rendered_report_contains_no_live_pattern() {
        let crafted = craft_append(&white_jpeg_1x1(), &eicar_bytes()).unwrap();
        let report = scan(&crafted, &builtin_signatures(), 2);
        for media in [Media::Json, Media::Text] {
            let rendered = render_report(&report, media);
            let pattern = eicar_bytes();
            assert!(
                !rendered.bytes.windows(pattern.len()).any(|w| w == pattern),
                "live pattern leaked into {media:?} report"
            );
        }
    }

    #[test]
    fn rescanning_rendered_report_finds_nothing() {
        let crafted = craft_append(&white_jpeg_1x1(), &eicar_bytes()).unwrap();
        let report = scan(&crafted, &builtin_signatures(), 2);
        let rendered = render_report(&report, Media::Json);
        let rescan = scan(&rendered.bytes, &builtin_signatures(), 2);
        assert!(rescan.findings.is_empty());
    }

    #[test]
    fn defang_closure_holds_for_short_patterns() {
        // A signature shorter than the excerpt length must still be elided
        // beyond recognition.
        let sigs = vec![crate::scan::Signature::new("jfif-marker", b"JFIF".to_vec()).unwrap()];
        let report = scan(&white_jpeg_1x1(), &sigs, 2);
        assert!(!report.findings.is_empty());
        for media in [Media::Json, Media::Text] {
            let rendered = render_report(&report, media);
            assert!(!rendered.bytes.windows(4).any(|w| w == b"JFIF"));
            let rescan = scan(&rendered.bytes, &sigs, 2);
            assert!(rescan.findings.is_empty(), "leak via {media:?} report");
        }
    }

    #[test]
    fn json_roundtrips_key_for_key() {
        let crafted = craft_append(&white_jpeg_1x1(), &eicar_bytes()).unwrap();
        let report = scan(&crafted, &builtin_signatures(), 2);
        let rendered = render_report(&report, Media::Json);
        let value: serde_json::Value = serde_json::from_slice(&rendered.bytes).unwrap();
        let rendered_again = serde_json::to_vec_pretty(&value).unwrap();
        assert_eq!(
            &rendered.bytes[..rendered.bytes.len() - 1],
            &rendered_again[..]
        );

        // And the typed schema deserializes back.
        let typed: JsonReport = serde_json::from_slice(&rendered.bytes).unwrap();
        assert_eq!(typed.findings.len(), report.findings.len());
    }

    #[test]
    fn exit_codes_follow_verdicts() {
        let clean = scan(&white_jpeg_1x1(), &builtin_signatures(), 2);
        assert_eq!(exit_code(&clean), 0);

        let crafted = craft_append(&white_jpeg_1x1(), &eicar_bytes()).unwrap();
        let hit = scan(&crafted, &builtin_signatures(), 2);
        assert_eq!(exit_code(&hit), 1);

        let mut long_trailer = white_jpeg_1x1();
        long_trailer.extend_from_slice(&[0x55; 64]);
        let sus = scan(&long_trailer, &builtin_signatures(), 2);
        assert_eq!(exit_code(&sus), 2);
    }

    #[test]
    fn text_report_is_column_aligned() {
        let crafted = craft_append(&white_jpeg_1x1(), &eicar_bytes()).unwrap();
        let mut report = scan(&crafted, &builtin_signatures(), 2);
        report.target.path = "carrier.jpg".into();
        let rendered = render_report(&report, Media::Text);
        let text = String::from_utf8(rendered.bytes).unwrap();
        assert!(text.contains("verdict   signature_match"));
        assert!(text.contains("carrier.jpg"));
    }
}
