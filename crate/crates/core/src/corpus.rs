//! Manifest-driven corpus generation and verification: every attack
//! protocol crossed with the supported carrier formats, plus clean controls,
//! with an expected-findings index so the whole corpus is self-verifying.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::carrier;
use crate::container::{FormatKind, RegionKind};
use crate::craft::{craft_base64_wrap, CraftRecipe, Mutation, Protocol};
use crate::error::{Error, Result};
use crate::payload::PayloadSpec;
use crate::scan::{builtin_signatures, compute_digests, scan, DigestSet, RegionRef, ScanReport};
use crate::transform::{TransformChain, TransformStep};

pub const MANIFEST_VERSION: &str = "1";

/// Where a detection is expected to be localized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedRegion {
    WholeFile,
    Header,
    Segment,
    Metadata,
    ImageData,
    PostEofTrailer,
}

impl ExpectedRegion {
    fn matches(self, region: &RegionRef) -> bool {
        matches!(
            (self, region.region_kind()),
            (ExpectedRegion::WholeFile, None)
                | (ExpectedRegion::Header, Some(RegionKind::Header))
                | (ExpectedRegion::Segment, Some(RegionKind::Segment))
                | (ExpectedRegion::Metadata, Some(RegionKind::Metadata))
                | (ExpectedRegion::ImageData, Some(RegionKind::ImageData))
                | (
                    ExpectedRegion::PostEofTrailer,
                    Some(RegionKind::PostEofTrailer)
                )
        )
    }
}

/// What the scanner must report for one corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub detect: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_kind: Option<ExpectedRegion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<TransformStep>>,
    /// Scans shallower than this are expected to miss.
    #[serde(default)]
    pub min_depth: usize,
}

impl Expected {
    fn clean() -> Self {
        Expected {
            detect: false,
            region_kind: None,
            chain: None,
            min_depth: 0,
        }
    }
}

/// A recipe in manifest form: the carrier is referenced by format name and
/// the payload by source, so the manifest itself carries no payload bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeSpec {
    pub protocol: Protocol,
    pub carrier: FormatKind,
    /// Only "eicar" (the built-in payload) is valid in manifests.
    pub payload: String,
    #[serde(default)]
    pub chain: Vec<TransformStep>,
    #[serde(default)]
    pub mutations: Vec<Mutation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub recipe: RecipeSpec,
    pub expected: Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: String,
    pub entries: Vec<CorpusEntry>,
}

/// One generated file in the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    /// File name relative to the index location.
    pub path: String,
    pub digests: DigestSet,
    pub expected: Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub version: String,
    /// True when files are stored base64-wrapped on disk.
    pub defanged: bool,
    pub entries: Vec<IndexEntry>,
}

fn detect_in(region: ExpectedRegion, chain: Vec<TransformStep>, min_depth: usize) -> Expected {
    Expected {
        detect: true,
        region_kind: Some(region),
        chain: Some(chain),
        min_depth,
    }
}

fn attack_entry(
    id: &str,
    protocol: Protocol,
    carrier: FormatKind,
    chain: Vec<TransformStep>,
    mutations: Vec<Mutation>,
    expected: Expected,
) -> CorpusEntry {
    CorpusEntry {
        id: id.to_string(),
        recipe: RecipeSpec {
            protocol,
            carrier,
            payload: "eicar".to_string(),
            chain,
            mutations,
        },
        expected,
    }
}

/// The shipped manifest: every protocol crossed with every carrier format it
/// applies to, plus both hash-evasion mutations.
pub fn default_manifest() -> CorpusManifest {
    use ExpectedRegion::{Metadata, PostEofTrailer, WholeFile};
    use FormatKind::{Bmp, Gif, Jpeg, Png};
    use TransformStep::{Base64Decode, Base64Encode, Reverse, StripLinebreaks};

    let formats = [Jpeg, Png, Gif, Bmp];
    let mut entries = Vec::new();

    for fmt in formats {
        entries.push(attack_entry(
            &format!("append-{fmt}"),
            Protocol::AppendPostEof,
            fmt,
            vec![],
            vec![],
            detect_in(PostEofTrailer, vec![], 0),
        ));
    }

    entries.push(attack_entry(
        "metadata-jpeg",
        Protocol::MetadataEmbed,
        Jpeg,
        vec![],
        vec![],
        detect_in(Metadata, vec![], 0),
    ));

    for fmt in formats {
        entries.push(attack_entry(
            &format!("reverse-{fmt}"),
            Protocol::ObfuscatedAppend,
            fmt,
            vec![Reverse],
            vec![],
            detect_in(PostEofTrailer, vec![Reverse], 1),
        ));
    }

    for fmt in formats {
        entries.push(attack_entry(
            &format!("base64-{fmt}"),
            Protocol::ObfuscatedAppend,
            fmt,
            vec![Base64Encode],
            vec![],
            detect_in(PostEofTrailer, vec![Base64Decode], 1),
        ));
    }

    for fmt in formats {
        entries.push(attack_entry(
            &format!("base64-of-reverse-{fmt}"),
            Protocol::ObfuscatedAppend,
            fmt,
            vec![Reverse, Base64Encode],
            vec![],
            detect_in(PostEofTrailer, vec![Base64Decode, Reverse], 2),
        ));
    }

    for fmt in formats {
        entries.push(attack_entry(
            &format!("wrap-{fmt}"),
            Protocol::Base64Wrap,
            fmt,
            vec![],
            vec![],
            detect_in(WholeFile, vec![Base64Decode], 1),
        ));
    }

    for fmt in formats {
        entries.push(attack_entry(
            &format!("linebreak-{fmt}"),
            Protocol::AppendPostEof,
            fmt,
            vec![],
            vec![Mutation::InsertLinebreakMidSignature],
            detect_in(PostEofTrailer, vec![StripLinebreaks], 1),
        ));
    }

    for fmt in formats {
        entries.push(attack_entry(
            &format!("space-{fmt}"),
            Protocol::AppendPostEof,
            fmt,
            vec![],
            vec![Mutation::AppendTrailingSpace],
            detect_in(PostEofTrailer, vec![], 0),
        ));
    }

    CorpusManifest {
        version: MANIFEST_VERSION.to_string(),
        entries,
    }
}

/// Clean control images written alongside every corpus.
fn controls() -> Vec<(&'static str, &'static str, Vec<u8>)> {
    vec![
        ("control-jpeg", "jpg", carrier::white_jpeg_1x1()),
        ("control-jpeg-exif", "jpg", carrier::white_jpeg_exif()),
        ("control-jpeg-restart", "jpg", carrier::white_jpeg_restart()),
        (
            "control-jpeg-progressive",
            "jpg",
            carrier::jpeg_progressive_layout(),
        ),
        (
            "control-jpeg-stuffed",
            "jpg",
            carrier::jpeg_with_byte_stuffing(),
        ),
        ("control-png", "png", carrier::white_png_1x1()),
        ("control-png-text", "png", carrier::png_with_text_chunk()),
        ("control-gif", "gif", carrier::white_gif_1x1()),
        ("control-gif-comment", "gif", carrier::gif_with_comment()),
        ("control-bmp", "bmp", carrier::white_bmp_1x1()),
        ("control-bmp-gradient", "bmp", carrier::gradient_bmp_4x4()),
    ]
}

/// Build the bytes for one manifest entry.
pub fn build_entry(entry: &CorpusEntry) -> Result<Vec<u8>> {
    if entry.recipe.payload != "eicar" {
        return Err(Error::CorpusEntry {
            id: entry.id.clone(),
            reason: format!(
                "manifest payload must be \"eicar\", got {:?}",
                entry.recipe.payload
            ),
        });
    }
    let carrier =
        carrier::builtin_carrier(entry.recipe.carrier).ok_or_else(|| Error::CorpusEntry {
            id: entry.id.clone(),
            reason: format!("no built-in carrier for format {}", entry.recipe.carrier),
        })?;
    let recipe = CraftRecipe {
        protocol: entry.recipe.protocol,
        carrier,
        payload: PayloadSpec::builtin_eicar(),
        chain: TransformChain::new(entry.recipe.chain.clone()),
        mutations: entry.recipe.mutations.clone(),
    };
    recipe.build().map_err(|e| Error::CorpusEntry {
        id: entry.id.clone(),
        reason: e.to_string(),
    })
}

fn entry_extension(entry: &CorpusEntry) -> &'static str {
    match entry.recipe.protocol {
        Protocol::Base64Wrap => "b64",
        _ => entry.recipe.carrier.extension(),
    }
}

/// Generate the corpus into `out_dir`: every manifest entry, the built-in
/// clean controls, and `index.json`. Regeneration is byte-identical. With
/// `defang` set, files are stored base64-wrapped so resident antivirus does
/// not quarantine the corpus; the verifier unwraps before scanning.
pub fn generate_corpus(
    manifest: &CorpusManifest,
    out_dir: &Path,
    defang: bool,
) -> Result<CorpusIndex> {
    fs::create_dir_all(out_dir)?;

    let mut unique = std::collections::BTreeSet::new();
    for entry in &manifest.entries {
        if !unique.insert(&entry.id) {
            return Err(Error::CorpusEntry {
                id: entry.id.clone(),
                reason: "duplicate entry id in manifest".into(),
            });
        }
    }

    let mut index_entries = Vec::new();

    for entry in &manifest.entries {
        let built = build_entry(entry)?;
        let (bytes, ext) = if defang {
            (craft_base64_wrap(&built), "b64")
        } else {
            (built, entry_extension(entry))
        };
        let file_name = format!("{}.{}", entry.id, ext);
        fs::write(out_dir.join(&file_name), &bytes)?;
        index_entries.push(IndexEntry {
            id: entry.id.clone(),
            path: file_name,
            digests: compute_digests(&bytes),
            expected: entry.expected.clone(),
        });
    }

    for (id, ext, control_bytes) in controls() {
        let (bytes, ext) = if defang {
            (craft_base64_wrap(&control_bytes), "b64")
        } else {
            (control_bytes, ext)
        };
        let file_name = format!("{id}.{ext}");
        fs::write(out_dir.join(&file_name), &bytes)?;
        index_entries.push(IndexEntry {
            id: id.to_string(),
            path: file_name,
            digests: compute_digests(&bytes),
            expected: Expected::clean(),
        });
    }

    let index = CorpusIndex {
        version: manifest.version.clone(),
        defanged: defang,
        entries: index_entries,
    };
    let mut json = serde_json::to_vec_pretty(&index)?;
    json.push(b'\n');
    fs::write(out_dir.join("index.json"), json)?;
    Ok(index)
}

/// Outcome for one verified corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryResult {
    pub id: String,
    pub passed: bool,
    pub detected: bool,
    pub detail: String,
}

/// Whole-corpus verification summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub max_depth: usize,
    pub entries: Vec<EntryResult>,
    /// Attack entries expected to be detectable at this depth.
    pub attack_total: usize,
    pub attack_detected: usize,
    pub control_total: usize,
    pub control_false_positives: usize,
    pub passed: bool,
}

impl VerificationResult {
    pub fn detection_rate(&self) -> f64 {
        if self.attack_total == 0 {
            1.0
        } else {
            self.attack_detected as f64 / self.attack_total as f64
        }
    }

    pub fn false_positive_rate(&self) -> f64 {
        if self.control_total == 0 {
            0.0
        } else {
            self.control_false_positives as f64 / self.control_total as f64
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{}/{} entries passed; detection {}/{} ({:.0}%), false positives {}/{} controls",
            self.entries.iter().filter(|e| e.passed).count(),
            self.entries.len(),
            self.attack_detected,
            self.attack_total,
            self.detection_rate() * 100.0,
            self.control_false_positives,
            self.control_total,
        )
    }
}

/// Check one report against an entry's expectation at the given depth.
fn judge(expected: &Expected, report: &ScanReport, max_depth: usize) -> (bool, String) {
    let detected = !report.findings.is_empty();
    let expect_here = expected.detect && max_depth >= expected.min_depth;

    if !expect_here {
        return if detected {
            (
                false,
                format!(
                    "expected miss at depth {max_depth} but got {} finding(s)",
                    report.findings.len()
                ),
            )
        } else if expected.detect {
            (
                true,
                format!(
                    "expected miss at depth {max_depth} (needs depth {})",
                    expected.min_depth
                ),
            )
        } else {
            (true, "clean as expected".to_string())
        };
    }

    if !detected {
        return (false, "expected detection, got none".to_string());
    }

    let mut matching = report.findings.iter();
    let found = matching.any(|f| {
        let region_ok = expected
            .region_kind
            .map(|r| r.matches(&f.region))
            .unwrap_or(true);
        let chain_ok = expected
            .chain
            .as_ref()
            .map(|c| &f.chain.steps == c)
            .unwrap_or(true);
        region_ok && chain_ok
    });
    if found {
        (true, "detected with expected localization and chain".into())
    } else {
        (
            false,
            format!(
                "detected, but no finding matched expected region/chain (got {:?})",
                report
                    .findings
                    .iter()
                    .map(|f| f.chain.to_string())
                    .collect::<Vec<_>>()
            ),
        )
    }
}

/// Unwrap a defanged (base64-wrapped) on-disk file back to raw bytes.
fn unwrap_defanged(bytes: &[u8]) -> Result<Vec<u8>> {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    let stripped: Vec<u8> = bytes
        .iter()
        .copied()
        .filter(|b| *b != b'\r' && *b != b'\n')
        .collect();
    STANDARD.decode(&stripped).map_err(|e| Error::CorpusEntry {
        id: "<defanged file>".into(),
        reason: format!("cannot unwrap defanged file: {e}"),
    })
}

/// Scan every indexed file and check it against its expectation. Missing or
/// unreadable files fail their entry; the run continues.
pub fn verify_corpus(index_path: &Path, max_depth: usize) -> Result<VerificationResult> {
    let index: CorpusIndex = serde_json::from_slice(&fs::read(index_path)?)?;
    let base_dir = index_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let signatures = builtin_signatures();

    let mut entries = Vec::new();
    let mut attack_total = 0;
    let mut attack_detected = 0;
    let mut control_total = 0;
    let mut control_false_positives = 0;

    for entry in &index.entries {
        let path = base_dir.join(&entry.path);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) => {
                entries.push(EntryResult {
                    id: entry.id.clone(),
                    passed: false,
                    detected: false,
                    detail: format!("cannot read {}: {e}", path.display()),
                });
                continue;
            }
        };
        let scan_bytes = if index.defanged {
            match unwrap_defanged(&bytes) {
                Ok(b) => b,
                Err(e) => {
                    entries.push(EntryResult {
                        id: entry.id.clone(),
                        passed: false,
                        detected: false,
                        detail: e.to_string(),
                    });
                    continue;
                }
            }
        } else {
            bytes
        };

        let report = scan(&scan_bytes, &signatures, max_depth);
        let detected = !report.findings.is_empty();
        let (passed, detail) = judge(&entry.expected, &report, max_depth);

        if entry.expected.detect {
            if max_depth >= entry.expected.min_depth {
                attack_total += 1;
                if detected {
                    attack_detected += 1;
                }
            }
        } else {
            control_total += 1;
            if detected {
                control_false_positives += 1;
            }
        }

        entries.push(EntryResult {
            id: entry.id.clone(),
            passed,
            detected,
            detail,
        });
    }

    let passed = entries.iter().all(|e| e.passed);
    Ok(VerificationResult {
        max_depth,
        entries,
        attack_total,
        attack_detected,
        control_total,
        control_false_positives,
        passed,
    })
}
