//! The detection engine: signature search across the whole file, every
//! parsed region, and every bounded inverse-transform view, plus file-level
//! analytics (digests, entropy, strings).

pub mod analysis;
pub mod signature;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use analysis::{compute_digests, extract_strings, hexdump, shannon_entropy, DigestSet};
pub use signature::{builtin_signatures, parse_signature_file, MatchMode, Signature};

use crate::bytesearch::find_all;
use crate::container::{
    detect_format, parse_container, ByteRegion, FormatId, FormatKind, RegionKind,
};
use crate::transform::{inverse_views, TransformChain};

/// Number of leading match bytes surfaced in reports; the rest is elided.
pub const EXCERPT_LEN: usize = 8;

/// Scanner tuning knobs. The defaults flag the appended-payload carrier
/// class while passing clean controls.
#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Maximum inverse-transform depth.
    pub max_depth: usize,
    /// Post-EOF trailers at least this long are suspicious on their own.
    pub trailer_suspicious_min: usize,
    /// Metadata regions above this entropy (bits/byte) are suspicious.
    pub metadata_entropy_threshold: f64,
    /// Base64 runs at least this long that decode to a known magic are
    /// suspicious.
    pub base64_magic_min_run: usize,
    /// Minimum printable-run length for the strings summary.
    pub strings_min_len: usize,
    /// Cap on strings summary entries per report.
    pub strings_cap: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            max_depth: crate::transform::DEFAULT_MAX_DEPTH,
            trailer_suspicious_min: 16,
            metadata_entropy_threshold: 7.2,
            base64_magic_min_run: 512,
            strings_min_len: 8,
            strings_cap: 256,
        }
    }
}

impl ScanOptions {
    pub fn with_depth(max_depth: usize) -> Self {
        ScanOptions {
            max_depth,
            ..ScanOptions::default()
        }
    }
}

/// Where a finding was localized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionRef {
    /// The match was only located against the file as a whole.
    WholeFile(WholeFileMarker),
    Region(ByteRegion),
}

/// Serializes as the string "whole_file".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WholeFileMarker {
    #[serde(rename = "whole_file")]
    WholeFile,
}

impl RegionRef {
    pub fn whole_file() -> Self {
        RegionRef::WholeFile(WholeFileMarker::WholeFile)
    }

    pub fn region_kind(&self) -> Option<RegionKind> {
        match self {
            RegionRef::WholeFile(_) => None,
            RegionRef::Region(r) => Some(r.kind),
        }
    }

    fn sort_offset(&self) -> usize {
        match self {
            RegionRef::WholeFile(_) => 0,
            RegionRef::Region(r) => r.offset,
        }
    }

    /// True when this is a narrower localization than `other`.
    fn more_specific_than(&self, other: &RegionRef) -> bool {
        match (self, other) {
            (RegionRef::Region(_), RegionRef::WholeFile(_)) => true,
            (RegionRef::Region(a), RegionRef::Region(b)) => a.length < b.length,
            _ => false,
        }
    }
}

/// One signature match, localized to a region and an inverse chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub signature_id: String,
    pub region: RegionRef,
    /// Inverse chain that exposed the match; empty for a raw-byte hit.
    pub chain: TransformChain,
    /// Byte offset within the examined view.
    pub match_offset: usize,
    pub matched_digest: DigestSet,
    pub matched_len: usize,
    /// First bytes of the match, lossily decoded; the rest stays elided.
    pub excerpt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Clean,
    Suspicious,
    SignatureMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub path: String,
    pub digests: DigestSet,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEntropy {
    pub label: String,
    pub kind: RegionKind,
    pub offset: usize,
    pub length: usize,
    pub bits_per_byte: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringHit {
    pub offset: usize,
    pub text: String,
}

/// Full scan output for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub target: TargetInfo,
    pub format: FormatId,
    pub well_formed: bool,
    pub findings: Vec<Finding>,
    pub entropy_whole: f64,
    pub entropy_per_region: Vec<RegionEntropy>,
    pub strings_summary: Vec<StringHit>,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
    /// Unix seconds; None in deterministic mode.
    pub timestamp: Option<u64>,
}

impl ScanReport {
    pub fn verdict_is_match(&self) -> bool {
        self.verdict == Verdict::SignatureMatch
    }
}

/// One raw match candidate before dedup.
struct Candidate {
    signature_index: usize,
    region: RegionRef,
    chain: TransformChain,
    match_offset: usize,
    /// Absolute offset in the original file, when the chain preserves
    /// offsets (identity, tail strips).
    resolved: Option<usize>,
}

/// Scan with default options at the given inverse depth.
pub fn scan(input: &[u8], signatures: &[Signature], max_depth: usize) -> ScanReport {
    scan_with_options(input, signatures, &ScanOptions::with_depth(max_depth))
}

/// Scan `input` against `signatures`, examining the whole file, each parsed
/// region, and bounded inverse views of the whole file and of metadata and
/// trailer regions. Unparseable input degrades to whole-file scanning.
pub fn scan_with_options(input: &[u8], signatures: &[Signature], opts: &ScanOptions) -> ScanReport {
    assert!(!signatures.is_empty(), "signature set must be non-empty");

    let parsed = parse_container(input);
    let mut diagnostics = parsed.diagnostics.clone();
    let mut candidates: Vec<Candidate> = Vec::new();

    // (a) Whole file: raw bytes and every inverse view.
    let whole = inverse_views(input, opts.max_depth);
    if whole.truncated {
        diagnostics.push("inverse-view search truncated (whole file)".into());
    }
    for view in &whole.views {
        collect_matches(
            signatures,
            input,
            0,
            &view.bytes,
            &view.chain,
            RegionRef::whole_file(),
            &mut candidates,
        );
    }

    // (b) Each parsed region independently; (c) inverse views of metadata
    // and trailer regions, where payloads hide.
    scan_regions(
        input,
        &parsed.regions,
        signatures,
        opts,
        0,
        "",
        &mut candidates,
        &mut diagnostics,
    );

    // A trailer that is itself a known container gets re-parsed once, so
    // polyglot carriers expose their inner regions. Deeper nesting is
    // diagnosed, not followed.
    if let Some(trailer) = parsed.trailer() {
        let trailer_bytes = &input[trailer.offset..trailer.end()];
        if detect_format(trailer_bytes).kind != FormatKind::Unknown {
            let nested = parse_container(trailer_bytes);
            scan_regions(
                trailer_bytes,
                &nested.regions,
                signatures,
                opts,
                trailer.offset,
                "trailer/",
                &mut candidates,
                &mut diagnostics,
            );
            if let Some(inner) = nested.trailer() {
                let inner_bytes = &trailer_bytes[inner.offset..inner.end()];
                if detect_format(inner_bytes).kind != FormatKind::Unknown {
                    diagnostics.push("nested container beyond depth 1 not followed".into());
                }
            }
        }
    }

    let findings = dedup_and_order(signatures, candidates);

    // Analytics.
    let entropy_whole = shannon_entropy(input);
    let entropy_per_region = parsed
        .regions
        .iter()
        .map(|r| RegionEntropy {
            label: r.label.clone(),
            kind: r.kind,
            offset: r.offset,
            length: r.length,
            bits_per_byte: shannon_entropy(&input[r.offset..r.end()]),
        })
        .collect::<Vec<_>>();

    let mut raw_strings = extract_strings(input, opts.strings_min_len);
    if raw_strings.len() > opts.strings_cap {
        raw_strings.truncate(opts.strings_cap);
        diagnostics.push("strings summary truncated".into());
    }
    let defang_depth = opts.max_depth.max(crate::transform::DEFAULT_MAX_DEPTH);
    let strings_summary: Vec<StringHit> = raw_strings
        .into_iter()
        .map(|(offset, text)| StringHit {
            offset,
            text: defang_text(&text, signatures, defang_depth),
        })
        .collect();

    let verdict = if !findings.is_empty() {
        Verdict::SignatureMatch
    } else if let Some(reason) = heuristic_reason(input, &parsed.regions, &entropy_per_region, opts)
    {
        diagnostics.push(reason);
        Verdict::Suspicious
    } else {
        Verdict::Clean
    };

    let mut report = ScanReport {
        target: TargetInfo {
            path: String::new(),
            digests: compute_digests(input),
            length: input.len(),
        },
        format: parsed.format,
        well_formed: parsed.well_formed,
        findings,
        entropy_whole,
        entropy_per_region,
        strings_summary,
        verdict,
        diagnostics,
        timestamp: None,
    };
    defang_report_text(&mut report, signatures, defang_depth);
    report
}

/// Apply the defang pass to every free-text field a report carries, so no
/// rendering of it can hold a live pattern. Signatures short enough to
/// appear inside structural labels (segment identifiers, diagnostics) are
/// covered as well as payload-derived strings.
fn defang_report_text(report: &mut ScanReport, signatures: &[Signature], depth: usize) {
    for finding in &mut report.findings {
        if let RegionRef::Region(region) = &mut finding.region {
            region.label = defang_text(&region.label, signatures, depth);
        }
    }
    for entry in &mut report.entropy_per_region {
        entry.label = defang_text(&entry.label, signatures, depth);
    }
    for diagnostic in &mut report.diagnostics {
        *diagnostic = defang_text(diagnostic, signatures, depth);
    }
}

#[allow(clippy::too_many_arguments)]
fn scan_regions(
    base: &[u8],
    regions: &[ByteRegion],
    signatures: &[Signature],
    opts: &ScanOptions,
    base_offset: usize,
    label_prefix: &str,
    candidates: &mut Vec<Candidate>,
    diagnostics: &mut Vec<String>,
) {
    for region in regions {
        let bytes = &base[region.offset..region.end()];
        let rebased = ByteRegion {
            offset: base_offset + region.offset,
            length: region.length,
            kind: region.kind,
            label: format!("{label_prefix}{}", region.label),
        };

        // Raw per-region search.
        collect_matches(
            signatures,
            bytes,
            rebased.offset,
            bytes,
            &TransformChain::identity(),
            RegionRef::Region(rebased.clone()),
            candidates,
        );

        // Inverse views only where payloads hide.
        if matches!(
            region.kind,
            RegionKind::Metadata | RegionKind::PostEofTrailer
        ) {
            let search = inverse_views(bytes, opts.max_depth);
            if search.truncated {
                diagnostics.push(format!(
                    "inverse-view search truncated (region {})",
                    rebased.label
                ));
            }
            for view in search.views.iter().skip(1) {
                collect_matches(
                    signatures,
                    bytes,
                    rebased.offset,
                    &view.bytes,
                    &view.chain,
                    RegionRef::Region(rebased.clone()),
                    candidates,
                );
            }
        }
    }
}

/// Original byte index of every view byte, for chains made only of strips
/// (and identity). Those transforms keep a subsequence of the input, so a
/// view offset maps back to an original position. Other chains return None.
fn subsequence_positions(chain: &TransformChain, base: &[u8]) -> Option<Vec<usize>> {
    use crate::transform::TransformStep;

    let mut pairs: Vec<(u8, usize)> = base.iter().copied().zip(0..).collect();
    for step in &chain.steps {
        match step {
            TransformStep::Identity => {}
            TransformStep::StripLinebreaks => {
                pairs.retain(|(b, _)| *b != b'\r' && *b != b'\n');
            }
            TransformStep::StripTrailingWhitespace => {
                let mut end = pairs.len();
                while end > 0 && matches!(pairs[end - 1].0, b' ' | b'\t' | b'\r' | b'\n') {
                    end -= 1;
                }
                pairs.truncate(end);
            }
            _ => return None,
        }
    }
    Some(pairs.into_iter().map(|(_, pos)| pos).collect())
}

#[allow(clippy::too_many_arguments)]
fn collect_matches(
    signatures: &[Signature],
    base: &[u8],
    base_abs_offset: usize,
    view_bytes: &[u8],
    chain: &TransformChain,
    region: RegionRef,
    candidates: &mut Vec<Candidate>,
) {
    let positions = subsequence_positions(chain, base);
    if let Some(map) = &positions {
        debug_assert_eq!(map.len(), view_bytes.len());
    }
    for (signature_index, sig) in signatures.iter().enumerate() {
        let len = sig.pattern().len();
        for offset in find_all(view_bytes, sig.pattern()) {
            // A match resolves to original coordinates only when its span is
            // contiguous in the base bytes; a signature reassembled across a
            // stripped linebreak is a distinct detection, not a duplicate.
            let resolved = positions.as_ref().and_then(|map| {
                let start = map[offset];
                let end = map[offset + len - 1];
                (end - start == len - 1).then_some(base_abs_offset + start)
            });
            candidates.push(Candidate {
                signature_index,
                region: region.clone(),
                chain: chain.clone(),
                match_offset: offset,
                resolved,
            });
        }
    }
}

/// Prune duplicates and produce deterministically ordered findings.
///
/// Offset-preserving candidates that resolve to the same original coordinate
/// collapse to the most specific localization (region beats whole-file,
/// narrower region beats wider, shorter chain beats longer). Candidates from
/// non-offset-preserving views are kept per view.
fn dedup_and_order(signatures: &[Signature], candidates: Vec<Candidate>) -> Vec<Finding> {
    let mut resolved_groups: BTreeMap<(usize, usize), Candidate> = BTreeMap::new();
    let mut unresolved: Vec<Candidate> = Vec::new();
    let mut seen_unresolved: Vec<(usize, RegionRef, TransformChain, usize)> = Vec::new();

    for cand in candidates {
        match cand.resolved {
            Some(abs) => {
                let key = (cand.signature_index, abs);
                match resolved_groups.get(&key) {
                    None => {
                        resolved_groups.insert(key, cand);
                    }
                    Some(existing) => {
                        let better = cand.region.more_specific_than(&existing.region)
                            || (cand.region == existing.region
                                && cand.chain.len() < existing.chain.len());
                        if better {
                            resolved_groups.insert(key, cand);
                        }
                    }
                }
            }
            None => {
                let key = (
                    cand.signature_index,
                    cand.region.clone(),
                    cand.chain.clone(),
                    cand.match_offset,
                );
                if !seen_unresolved.contains(&key) {
                    seen_unresolved.push(key);
                    unresolved.push(cand);
                }
            }
        }
    }

    let mut kept: Vec<Candidate> = resolved_groups.into_values().collect();
    kept.extend(unresolved);

    kept.sort_by(|a, b| {
        let ka = (
            a.region.sort_offset(),
            a.chain.len(),
            &signatures[a.signature_index].id,
            a.match_offset,
        );
        let kb = (
            b.region.sort_offset(),
            b.chain.len(),
            &signatures[b.signature_index].id,
            b.match_offset,
        );
        ka.cmp(&kb)
    });

    kept.into_iter()
        .map(|c| {
            let sig = &signatures[c.signature_index];
            let pattern = sig.pattern();
            Finding {
                signature_id: sig.id.clone(),
                region: c.region,
                chain: c.chain,
                match_offset: c.match_offset,
                matched_digest: sig.reference_digests.clone(),
                matched_len: pattern.len(),
                excerpt: format!(
                    "{}\u{2026}",
                    String::from_utf8_lossy(&pattern[..safe_excerpt_len(pattern.len())])
                ),
            }
        })
        .collect()
}

/// Excerpt length that can never reproduce a whole pattern: at most
/// EXCERPT_LEN bytes, and always strictly shorter than the pattern.
fn safe_excerpt_len(pattern_len: usize) -> usize {
    EXCERPT_LEN.min(pattern_len.saturating_sub(1))
}

/// Defang report text so a rendered report can never re-arm a scanner.
/// Literal pattern occurrences are replaced by their elided excerpt; a
/// string that still exposes a pattern through any bounded inverse view
/// (base64 text of the payload, the reversed payload, ...) is elided down to
/// a short prefix.
fn defang_text(text: &str, signatures: &[Signature], depth: usize) -> String {
    let mut out = text.to_string();
    for sig in signatures {
        if let Ok(pattern) = std::str::from_utf8(sig.pattern()) {
            if out.contains(pattern) {
                let bytes = sig.pattern();
                let replacement = format!(
                    "{}\u{2026}",
                    String::from_utf8_lossy(&bytes[..safe_excerpt_len(bytes.len())])
                );
                out = out.replace(pattern, &replacement);
            }
        }
    }

    let armed = inverse_views(out.as_bytes(), depth).views.iter().any(|v| {
        signatures
            .iter()
            .any(|s| !find_all(&v.bytes, s.pattern()).is_empty())
    });
    if armed {
        let mut prefix: String = out.chars().take(EXCERPT_LEN).collect();
        if signatures
            .iter()
            .any(|s| !find_all(prefix.as_bytes(), s.pattern()).is_empty())
        {
            prefix.clear();
        }
        out = format!("{prefix}\u{2026} ({} chars defanged)", text.len());
    }
    out
}

/// Reasons an otherwise signature-free file still deserves a second look.
fn heuristic_reason(
    input: &[u8],
    regions: &[ByteRegion],
    entropy_per_region: &[RegionEntropy],
    opts: &ScanOptions,
) -> Option<String> {
    if let Some(trailer) = regions
        .last()
        .filter(|r| r.kind == RegionKind::PostEofTrailer)
    {
        if trailer.length >= opts.trailer_suspicious_min {
            return Some(format!(
                "heuristic: post-EOF trailer of {} bytes",
                trailer.length
            ));
        }
    }

    for entry in entropy_per_region {
        if entry.kind == RegionKind::Metadata
            && entry.bits_per_byte > opts.metadata_entropy_threshold
        {
            return Some(format!(
                "heuristic: metadata region {} has entropy {:.2} bits/byte",
                entry.label, entry.bits_per_byte
            ));
        }
    }

    for (offset, length) in crate::transform::find_base64_runs(input, opts.base64_magic_min_run) {
        let run = &input[offset..offset + length];
        let stripped: Vec<u8> = run
            .iter()
            .copied()
            .filter(|b| *b != b'\r' && *b != b'\n')
            .collect();
        use base64::engine::general_purpose::STANDARD;
        use base64::Engine;
        if let Ok(decoded) = STANDARD.decode(&stripped) {
            let kind = detect_format(&decoded).kind;
            if kind != FormatKind::Unknown {
                return Some(format!(
                    "heuristic: {length}-char base64 run at offset {offset} decodes to {kind} magic"
                ));
            }
        }
    }

    None
}
