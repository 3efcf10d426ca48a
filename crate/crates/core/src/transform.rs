//! Reversible byte transforms composed into chains. Applied forward they
//! obfuscate a payload; searched in inverse they reveal one. The inverse
//! search is breadth-first and bounded, so hostile inputs cannot force an
//! exponential blowup.

use std::collections::HashSet;
use std::fmt;

use base64::alphabet;
use base64::engine::general_purpose::{GeneralPurpose, GeneralPurposeConfig, STANDARD};
use base64::engine::DecodePaddingMode;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default inverse-search depth: covers every protocol variant in the test
/// corpus (the deepest is base64-of-reversed).
pub const DEFAULT_MAX_DEPTH: usize = 2;

/// Minimum base64 run length considered a decode candidate. Long enough to
/// exclude incidental alphabet runs in binary data, short enough to catch a
/// 68-byte payload's ~92-char encoding.
pub const BASE64_MIN_RUN: usize = 40;

/// Hard cap on candidate views per searched input.
pub const MAX_VIEWS: usize = 256;

/// Hard cap on the total bytes held across all views of one search, so a
/// large hostile input cannot multiply itself into memory exhaustion.
pub const MAX_VIEW_BYTES: usize = 64 * 1024 * 1024;

/// Accepts canonical padded input as well as unpadded tails.
const LENIENT_B64: GeneralPurpose = GeneralPurpose::new(
    &alphabet::STANDARD,
    GeneralPurposeConfig::new().with_decode_padding_mode(DecodePaddingMode::Indifferent),
);

/// One byte transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformStep {
    Identity,
    Reverse,
    Base64Encode,
    Base64Decode,
    StripLinebreaks,
    StripTrailingWhitespace,
}

impl TransformStep {
    /// The inverse step, when one exists. The strip transforms are lossy.
    pub fn inverse(self) -> Option<TransformStep> {
        match self {
            TransformStep::Identity => Some(TransformStep::Identity),
            TransformStep::Reverse => Some(TransformStep::Reverse),
            TransformStep::Base64Encode => Some(TransformStep::Base64Decode),
            TransformStep::Base64Decode => Some(TransformStep::Base64Encode),
            TransformStep::StripLinebreaks | TransformStep::StripTrailingWhitespace => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransformStep::Identity => "identity",
            TransformStep::Reverse => "reverse",
            TransformStep::Base64Encode => "base64_encode",
            TransformStep::Base64Decode => "base64_decode",
            TransformStep::StripLinebreaks => "strip_linebreaks",
            TransformStep::StripTrailingWhitespace => "strip_trailing_whitespace",
        }
    }
}

impl std::str::FromStr for TransformStep {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "identity" => Ok(TransformStep::Identity),
            "reverse" => Ok(TransformStep::Reverse),
            "base64_encode" | "base64-encode" => Ok(TransformStep::Base64Encode),
            "base64_decode" | "base64-decode" => Ok(TransformStep::Base64Decode),
            "strip_linebreaks" | "strip-linebreaks" => Ok(TransformStep::StripLinebreaks),
            "strip_trailing_whitespace" | "strip-trailing-whitespace" => {
                Ok(TransformStep::StripTrailingWhitespace)
            }
            other => Err(format!("unknown transform step: {other}")),
        }
    }
}

impl fmt::Display for TransformStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An ordered list of transform steps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransformChain {
    pub steps: Vec<TransformStep>,
}

impl TransformChain {
    pub fn identity() -> Self {
        TransformChain { steps: Vec::new() }
    }

    pub fn new(steps: Vec<TransformStep>) -> Self {
        TransformChain { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The formal inverse: reversed order, each step inverted. Defined only
    /// when every step is invertible.
    pub fn inverse(&self) -> Option<TransformChain> {
        let mut steps = Vec::with_capacity(self.steps.len());
        for step in self.steps.iter().rev() {
            steps.push(step.inverse()?);
        }
        Some(TransformChain { steps })
    }

    pub fn is_invertible(&self) -> bool {
        self.steps.iter().all(|s| s.inverse().is_some())
    }

    /// True when a match offset inside a transformed view maps one-to-one to
    /// the untransformed bytes: identity and tail-only strips qualify.
    pub fn is_offset_preserving(&self) -> bool {
        self.steps.iter().all(|s| {
            matches!(
                s,
                TransformStep::Identity | TransformStep::StripTrailingWhitespace
            )
        })
    }

    fn extended(&self, step: TransformStep) -> TransformChain {
        let mut steps = self.steps.clone();
        steps.push(step);
        TransformChain { steps }
    }
}

impl fmt::Display for TransformChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("identity");
        }
        let names: Vec<&str> = self.steps.iter().map(|s| s.name()).collect();
        write!(f, "[{}]", names.join(", "))
    }
}

/// Apply a chain left to right.
pub fn apply(chain: &TransformChain, input: &[u8]) -> Result<Vec<u8>> {
    let mut current = input.to_vec();
    for (index, step) in chain.steps.iter().enumerate() {
        current = apply_step(*step, &current, index)?;
    }
    Ok(current)
}

fn apply_step(step: TransformStep, input: &[u8], index: usize) -> Result<Vec<u8>> {
    match step {
        TransformStep::Identity => Ok(input.to_vec()),
        TransformStep::Reverse => Ok(input.iter().rev().copied().collect()),
        TransformStep::Base64Encode => Ok(STANDARD.encode(input).into_bytes()),
        TransformStep::Base64Decode => {
            decode_base64_text(input).map_err(|reason| Error::Base64Decode {
                step: index,
                reason,
            })
        }
        TransformStep::StripLinebreaks => Ok(input
            .iter()
            .copied()
            .filter(|b| *b != b'\r' && *b != b'\n')
            .collect()),
        TransformStep::StripTrailingWhitespace => {
            let mut end = input.len();
            while end > 0 && matches!(input[end - 1], b' ' | b'\t' | b'\r' | b'\n') {
                end -= 1;
            }
            Ok(input[..end].to_vec())
        }
    }
}

/// Decode base64 text, tolerating embedded CR/LF but nothing else outside
/// the alphabet.
fn decode_base64_text(input: &[u8]) -> std::result::Result<Vec<u8>, String> {
    let stripped: Vec<u8> = input
        .iter()
        .copied()
        .filter(|b| *b != b'\r' && *b != b'\n')
        .collect();
    if let Some(bad) = stripped
        .iter()
        .find(|b| !is_base64_alphabet(**b) && **b != b'=')
    {
        return Err(format!("byte 0x{bad:02X} is outside the base64 alphabet"));
    }
    LENIENT_B64.decode(&stripped).map_err(|e| e.to_string())
}

fn is_base64_alphabet(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'+' || b == b'/'
}

/// One candidate deobfuscated view of an input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseView {
    /// Inverse steps applied, in order, to reach this view.
    pub chain: TransformChain,
    pub bytes: Vec<u8>,
}

/// Result of the bounded inverse-transform search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseSearch {
    pub views: Vec<InverseView>,
    /// True when the view cap cut the search short.
    pub truncated: bool,
}

/// Enumerate candidate deobfuscated views breadth-first. Depth 0 is the
/// identity view; each deeper level applies one inverse transform (reverse,
/// base64-decode of each detected candidate run, strip linebreaks, strip
/// trailing whitespace) to every view of the previous level. Byte-identical
/// views are pruned; output order is deterministic.
pub fn inverse_views(input: &[u8], max_depth: usize) -> InverseSearch {
    let mut views = vec![InverseView {
        chain: TransformChain::identity(),
        bytes: input.to_vec(),
    }];
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    seen.insert(input.to_vec());
    let mut total_bytes = input.len();
    let mut truncated = false;

    let mut level_start = 0;
    for _ in 0..max_depth {
        let level_end = views.len();
        if truncated {
            break;
        }
        for parent_idx in level_start..level_end {
            let candidates = expand_view(&views[parent_idx]);
            for view in candidates {
                if seen.contains(&view.bytes) {
                    continue;
                }
                if views.len() >= MAX_VIEWS || total_bytes + view.bytes.len() > MAX_VIEW_BYTES {
                    truncated = true;
                    break;
                }
                total_bytes += view.bytes.len();
                seen.insert(view.bytes.clone());
                views.push(view);
            }
            if truncated {
                break;
            }
        }
        if views.len() == level_end {
            // Nothing new at this level; deeper levels cannot add views.
            break;
        }
        level_start = level_end;
    }

    InverseSearch { views, truncated }
}

/// Candidate children of one view, in fixed step order.
fn expand_view(parent: &InverseView) -> Vec<InverseView> {
    let mut out = Vec::new();
    let bytes = &parent.bytes;

    // 1. reverse
    out.push(InverseView {
        chain: parent.chain.extended(TransformStep::Reverse),
        bytes: bytes.iter().rev().copied().collect(),
    });

    // 2. base64-decode each candidate run
    for (offset, length) in find_base64_runs(bytes, BASE64_MIN_RUN) {
        if let Ok(decoded) = decode_base64_text(&bytes[offset..offset + length]) {
            out.push(InverseView {
                chain: parent.chain.extended(TransformStep::Base64Decode),
                bytes: decoded,
            });
        }
    }

    // 3. strip linebreaks, only when there is something to strip
    if bytes.iter().any(|b| *b == b'\r' || *b == b'\n') {
        out.push(InverseView {
            chain: parent.chain.extended(TransformStep::StripLinebreaks),
            bytes: bytes
                .iter()
                .copied()
                .filter(|b| *b != b'\r' && *b != b'\n')
                .collect(),
        });
    }

    // 4. strip trailing whitespace, only when the tail is whitespace
    if matches!(bytes.last(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
        let mut end = bytes.len();
        while end > 0 && matches!(bytes[end - 1], b' ' | b'\t' | b'\r' | b'\n') {
            end -= 1;
        }
        out.push(InverseView {
            chain: parent
                .chain
                .extended(TransformStep::StripTrailingWhitespace),
            bytes: bytes[..end].to_vec(),
        });
    }

    out
}

/// Locate maximal runs of base64 alphabet bytes, optionally ending in up to
/// two `=` pads, with interior CR/LF tolerated. The reported span covers raw
/// input bytes (line breaks included); the `min_len` check counts only
/// alphabet and pad characters.
pub fn find_base64_runs(input: &[u8], min_len: usize) -> Vec<(usize, usize)> {
    assert!(min_len >= 4, "base64 candidate runs need min_len >= 4");
    let mut runs = Vec::new();
    let mut i = 0;

    while i < input.len() {
        if !is_base64_alphabet(input[i]) {
            i += 1;
            continue;
        }
        let start = i;
        let mut core_chars = 0usize;
        let mut last_core_end = i;
        let mut pads = 0usize;

        while i < input.len() {
            let b = input[i];
            if pads == 0 && is_base64_alphabet(b) {
                core_chars += 1;
                i += 1;
                last_core_end = i;
            } else if b == b'=' && pads < 2 {
                pads += 1;
                core_chars += 1;
                i += 1;
                last_core_end = i;
            } else if b == b'\r' || b == b'\n' {
                // Tolerated inside a run only if more run content follows.
                let mut j = i + 1;
                while j < input.len() && (input[j] == b'\r' || input[j] == b'\n') {
                    j += 1;
                }
                let continues = j < input.len()
                    && ((pads == 0 && is_base64_alphabet(input[j]))
                        || (input[j] == b'=' && pads < 2));
                if continues {
                    i = j;
                } else {
                    break;
                }
            } else {
                break;
            }
        }

        if core_chars >= min_len {
            runs.push((start, last_core_end - start));
        }
        // The outer loop resumes at the byte that terminated this run; a
        // fresh run may begin right there (e.g. after padding).
        i = i.max(last_core_end);
    }

    runs
}
