//! File analytics: digests, Shannon entropy, printable strings, hexdump.

use md5::Md5;
use serde::{Deserialize, Serialize};
use sha1::Sha1;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// MD5 / SHA-1 / SHA-256 of one byte sequence, lowercase hex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigestSet {
    pub md5: String,
    pub sha1: String,
    pub sha256: String,
}

pub fn compute_digests(input: &[u8]) -> DigestSet {
    fn hex(bytes: &[u8]) -> String {
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
    DigestSet {
        md5: hex(&Md5::digest(input)),
        sha1: hex(&Sha1::digest(input)),
        sha256: hex(&Sha256::digest(input)),
    }
}

/// Shannon entropy over byte frequencies, in bits per byte (0.0..=8.0).
/// Empty input is defined as 0.
pub fn shannon_entropy(input: &[u8]) -> f64 {
    if input.is_empty() {
        return 0.0;
    }
    let mut freq = [0u64; 256];
    for &byte in input {
        freq[byte as usize] += 1;
    }
    let len = input.len() as f64;
    let mut entropy = 0.0;
    for &count in &freq {
        if count > 0 {
            let p = count as f64 / len;
            entropy -= p * p.log2();
        }
    }
    entropy
}

/// Maximal runs of printable ASCII (0x20..=0x7E) of at least `min_len`
/// bytes, with their offsets.
pub fn extract_strings(input: &[u8], min_len: usize) -> Vec<(usize, String)> {
    assert!(min_len >= 1, "min_len must be at least 1");
    let mut out = Vec::new();
    let mut start = None;

    for (i, &byte) in input.iter().enumerate() {
        let printable = (0x20..=0x7E).contains(&byte);
        match (printable, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_len {
                    out.push((s, String::from_utf8_lossy(&input[s..i]).into_owned()));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if input.len() - s >= min_len {
            out.push((s, String::from_utf8_lossy(&input[s..]).into_owned()));
        }
    }
    out
}

const HEX_BYTES_PER_LINE: usize = 16;
// "xx " per byte plus the extra space after byte 8.
const HEX_AREA_WIDTH: usize = HEX_BYTES_PER_LINE * 3 + 1;

/// Canonical 16-bytes-per-line hexdump of `input[offset..offset+length]`:
/// 8-hex-digit offset, two-digit hex bytes with an extra space after byte 8,
/// and an ASCII gutter with '.' for non-printables.
pub fn hexdump(input: &[u8], offset: usize, length: usize) -> Result<String> {
    let end = offset.checked_add(length);
    match end {
        Some(end) if end <= input.len() => {}
        _ => {
            return Err(Error::OutOfBounds {
                offset,
                length,
                available: input.len(),
            })
        }
    }

    let mut out = String::new();
    for (row_index, row) in input[offset..offset + length]
        .chunks(HEX_BYTES_PER_LINE)
        .enumerate()
    {
        let row_offset = offset + row_index * HEX_BYTES_PER_LINE;
        let mut hex_area = String::with_capacity(HEX_AREA_WIDTH);
        for i in 0..HEX_BYTES_PER_LINE {
            if i == 8 {
                hex_area.push(' ');
            }
            match row.get(i) {
                Some(b) => hex_area.push_str(&format!("{b:02x} ")),
                None => hex_area.push_str("   "),
            }
        }
        let gutter: String = row
            .iter()
            .map(|&b| {
                if (0x20..=0x7E).contains(&b) {
                    b as char
                } else {
                    '.'
                }
            })
            .collect();
        out.push_str(&format!("{row_offset:08x}  {hex_area} |{gutter}|\n"));
    }
    Ok(out)
}
