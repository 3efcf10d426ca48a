//! Signature definitions and the line-oriented signature file format.
//!
//! Each line is `id<TAB>encoding<TAB>data` with encoding one of `hex`,
//! `base64`, or `reversed-ascii`; `#` starts a comment. Patterns are stored
//! defanged on disk and reconstructed in memory: the built-in entry uses
//! reversed-ascii so no signature database ever carries the live bytes.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use super::analysis::{compute_digests, DigestSet};
use crate::error::{Error, Result};
use crate::payload::eicar_bytes;

/// How a pattern is matched. Transform-level evasions are handled by inverse
/// views, not pattern fuzziness, so exact substring search is the only mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    ExactSubstring,
}

/// One detectable byte pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub id: String,
    pattern: Vec<u8>,
    pub match_mode: MatchMode,
    pub reference_digests: DigestSet,
}

impl Signature {
    pub fn new(id: impl Into<String>, pattern: Vec<u8>) -> Result<Self> {
        let id = id.into();
        if pattern.is_empty() {
            return Err(Error::SignatureFile {
                line: 0,
                reason: format!("signature {id} has an empty pattern"),
            });
        }
        let reference_digests = compute_digests(&pattern);
        Ok(Signature {
            id,
            pattern,
            match_mode: MatchMode::ExactSubstring,
            reference_digests,
        })
    }

    pub fn pattern(&self) -> &[u8] {
        &self.pattern
    }
}

/// The default signature set: exactly the built-in test payload.
pub fn builtin_signatures() -> Vec<Signature> {
    vec![Signature::new("eicar-test-file", eicar_bytes()).expect("builtin pattern is non-empty")]
}

/// Render the built-in set in the signature file format (defanged).
pub fn default_signature_file() -> String {
    let reversed: String = eicar_bytes().iter().rev().map(|&b| b as char).collect();
    format!(
        "# stegoprobe signature set\n# id<TAB>encoding<TAB>data\neicar-test-file\treversed-ascii\t{reversed}\n"
    )
}

/// Parse a signature file. Ids must be unique; every error carries its line
/// number.
pub fn parse_signature_file(text: &str) -> Result<Vec<Signature>> {
    let mut signatures: Vec<Signature> = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (id, encoding, data) = match (fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(enc), Some(data)) => (id, enc, data),
            _ => {
                return Err(Error::SignatureFile {
                    line: line_no,
                    reason: "expected three tab-separated fields: id, encoding, data".into(),
                })
            }
        };
        if signatures.iter().any(|s| s.id == id) {
            return Err(Error::SignatureFile {
                line: line_no,
                reason: format!("duplicate signature id {id}"),
            });
        }
        let pattern = decode_pattern(encoding, data).map_err(|reason| Error::SignatureFile {
            line: line_no,
            reason,
        })?;
        let mut sig = Signature::new(id, pattern).map_err(|e| match e {
            Error::SignatureFile { reason, .. } => Error::SignatureFile {
                line: line_no,
                reason,
            },
            other => other,
        })?;
        sig.match_mode = MatchMode::ExactSubstring;
        signatures.push(sig);
    }
    if signatures.is_empty() {
        return Err(Error::SignatureFile {
            line: 0,
            reason: "signature file defines no signatures".into(),
        });
    }
    Ok(signatures)
}

fn decode_pattern(encoding: &str, data: &str) -> std::result::Result<Vec<u8>, String> {
    match encoding {
        "hex" => decode_hex(data),
        "base64" => STANDARD
            .decode(data.trim())
            .map_err(|e| format!("invalid base64 pattern: {e}")),
        "reversed-ascii" => Ok(data.bytes().rev().collect()),
        other => Err(format!(
            "unknown encoding {other}: expected hex, base64, or reversed-ascii"
        )),
    }
}

fn decode_hex(data: &str) -> std::result::Result<Vec<u8>, String> {
    let cleaned: String = data.chars().filter(|c| !c.is_ascii_whitespace()).collect();
    if !cleaned.len().is_multiple_of(2) {
        return Err("hex pattern has an odd number of digits".into());
    }
    (0..cleaned.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&cleaned[i..i + 2], 16)
                .map_err(|_| format!("invalid hex digits at position {i}"))
        })
        .collect()
}
