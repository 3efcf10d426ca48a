//! Container parsing: decompose image files into contiguous labeled byte
//! regions so that payload hiding spots (metadata segments, post-EOF
//! trailers) are first-class addressable objects.
//!
//! Parsing never aborts. Malformed structures degrade to best-effort
//! regions plus diagnostics; the scanner has to analyze hostile files.

mod bmp;
mod gif;
mod jpeg;
mod png;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recognized container formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatKind {
    Jpeg,
    Png,
    Gif,
    Bmp,
    Unknown,
}

impl FormatKind {
    /// Conventional file extension for crafted output.
    pub fn extension(self) -> &'static str {
        match self {
            FormatKind::Jpeg => "jpg",
            FormatKind::Png => "png",
            FormatKind::Gif => "gif",
            FormatKind::Bmp => "bmp",
            FormatKind::Unknown => "bin",
        }
    }
}

impl std::fmt::Display for FormatKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            FormatKind::Jpeg => "jpeg",
            FormatKind::Png => "png",
            FormatKind::Gif => "gif",
            FormatKind::Bmp => "bmp",
            FormatKind::Unknown => "unknown",
        };
        f.write_str(name)
    }
}

/// Result of magic-byte detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatId {
    pub kind: FormatKind,
    pub magic_offset: usize,
    pub magic_len: usize,
}

/// What a byte region holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Header,
    Segment,
    Metadata,
    ImageData,
    PostEofTrailer,
}

/// One contiguous labeled slice of the input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteRegion {
    pub offset: usize,
    pub length: usize,
    pub kind: RegionKind,
    pub label: String,
}

impl ByteRegion {
    pub fn end(&self) -> usize {
        self.offset + self.length
    }
}

/// A file decomposed into regions that cover it exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedContainer {
    pub format: FormatId,
    pub regions: Vec<ByteRegion>,
    pub well_formed: bool,
    pub diagnostics: Vec<String>,
}

impl ParsedContainer {
    /// The post-EOF trailer region, if any.
    pub fn trailer(&self) -> Option<&ByteRegion> {
        self.regions
            .last()
            .filter(|r| r.kind == RegionKind::PostEofTrailer)
    }

    /// All metadata regions, in file order.
    pub fn metadata_regions(&self) -> impl Iterator<Item = &ByteRegion> {
        self.regions
            .iter()
            .filter(|r| r.kind == RegionKind::Metadata)
    }
}

const JPEG_MAGIC: &[u8] = &[0xFF, 0xD8];
const PNG_MAGIC: &[u8] = &[0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
const GIF87_MAGIC: &[u8] = b"GIF87a";
const GIF89_MAGIC: &[u8] = b"GIF89a";
const BMP_MAGIC: &[u8] = b"BM";

/// Identify a file by its leading magic bytes. `Unknown` is a value, not an
/// error; empty or unrecognized input maps to it.
pub fn detect_format(bytes: &[u8]) -> FormatId {
    let candidates: [(FormatKind, &[u8]); 5] = [
        (FormatKind::Jpeg, JPEG_MAGIC),
        (FormatKind::Png, PNG_MAGIC),
        (FormatKind::Gif, GIF87_MAGIC),
        (FormatKind::Gif, GIF89_MAGIC),
        (FormatKind::Bmp, BMP_MAGIC),
    ];
    for (kind, magic) in candidates {
        if bytes.starts_with(magic) {
            return FormatId {
                kind,
                magic_offset: 0,
                magic_len: magic.len(),
            };
        }
    }
    FormatId {
        kind: FormatKind::Unknown,
        magic_offset: 0,
        magic_len: 0,
    }
}

/// Accumulates regions while a walker advances through the file. Regions are
/// appended in offset order and always abut, so the cover invariant holds by
/// construction.
pub(crate) struct RegionSink {
    len: usize,
    cursor: usize,
    regions: Vec<ByteRegion>,
    diagnostics: Vec<String>,
    well_formed: bool,
}

impl RegionSink {
    fn new(len: usize) -> Self {
        RegionSink {
            len,
            cursor: 0,
            regions: Vec::new(),
            diagnostics: Vec::new(),
            well_formed: true,
        }
    }

    pub(crate) fn cursor(&self) -> usize {
        self.cursor
    }

    /// Close the region [cursor, end). Zero-length pushes are dropped.
    pub(crate) fn push_to(&mut self, end: usize, kind: RegionKind, label: impl Into<String>) {
        let end = end.clamp(self.cursor, self.len);
        if end > self.cursor {
            self.regions.push(ByteRegion {
                offset: self.cursor,
                length: end - self.cursor,
                kind,
                label: label.into(),
            });
            self.cursor = end;
        }
    }

    /// Record a malformation; clears well_formed.
    pub(crate) fn diagnose(&mut self, msg: impl Into<String>) {
        self.well_formed = false;
        self.diagnostics.push(msg.into());
    }

    /// Assign everything not yet covered to one final best-effort region.
    pub(crate) fn finish_rest(&mut self, kind: RegionKind, label: &str) {
        if self.cursor < self.len {
            self.push_to(self.len, kind, label);
        }
    }
}

/// Parse a file into regions. Never panics and never refuses input; the
/// worst case is a single best-effort region plus diagnostics.
pub fn parse_container(bytes: &[u8]) -> ParsedContainer {
    let format = detect_format(bytes);
    let mut sink = RegionSink::new(bytes.len());

    match format.kind {
        FormatKind::Jpeg => jpeg::walk(bytes, &mut sink),
        FormatKind::Png => png::walk(bytes, &mut sink),
        FormatKind::Gif => gif::walk(bytes, &mut sink),
        FormatKind::Bmp => bmp::walk(bytes, &mut sink),
        FormatKind::Unknown => {
            if bytes.is_empty() {
                sink.diagnose("empty input");
            } else {
                sink.diagnose("unknown format: no magic signature matched");
                sink.push_to(bytes.len(), RegionKind::ImageData, "raw");
            }
        }
    }

    debug_assert_eq!(sink.cursor, sink.len, "walker left uncovered bytes");

    ParsedContainer {
        format,
        regions: sink.regions,
        well_formed: sink.well_formed,
        diagnostics: sink.diagnostics,
    }
}

/// Concatenate all region slices back together. Byte-identity with the
/// original is a parser correctness guarantee; a mismatch here is a bug.
pub fn reassemble(container: &ParsedContainer, original: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(original.len());
    let mut cursor = 0usize;
    for region in &container.regions {
        if region.offset != cursor {
            return Err(Error::RegionBookkeeping(format!(
                "region at offset {} does not abut previous end {}",
                region.offset, cursor
            )));
        }
        let end = region.end();
        if end > original.len() {
            return Err(Error::RegionBookkeeping(format!(
                "region [{}, {}) exceeds input length {}",
                region.offset,
                end,
                original.len()
            )));
        }
        out.extend_from_slice(&original[region.offset..end]);
        cursor = end;
    }
    if cursor != original.len() {
        return Err(Error::RegionBookkeeping(format!(
            "regions cover {} of {} bytes",
            cursor,
            original.len()
        )));
    }
    Ok(out)
}

/// Slice one region out of the original bytes.
pub fn extract_region<'a>(original: &'a [u8], region: &ByteRegion) -> Result<&'a [u8]> {
    let end = region.offset.checked_add(region.length);
    match end {
        Some(end) if end <= original.len() => Ok(&original[region.offset..end]),
        _ => Err(Error::OutOfBounds {
            offset: region.offset,
            length: region.length,
            available: original.len(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detect_jpeg_magic() {
        let id = detect_format(&[0xFF, 0xD8, 0xFF, 0xE0]);
        assert_eq!(id.kind, FormatKind::Jpeg);
        assert_eq!(id.magic_len, 2);
    }

    #[test]
    fn detect_empty_is_unknown() {
        assert_eq!(detect_format(&[]).kind, FormatKind::Unknown);
    }

    #[test]
    fn detect_png_magic() {
        let id = detect_format(&[0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00]);
        assert_eq!(id.kind, FormatKind::Png);
        assert_eq!(id.magic_len, 8);
    }

    #[test]
    fn detect_gif_and_bmp() {
        assert_eq!(detect_format(b"GIF89a...").kind, FormatKind::Gif);
        assert_eq!(detect_format(b"GIF87a...").kind, FormatKind::Gif);
        assert_eq!(detect_format(b"BMxxxx").kind, FormatKind::Bmp);
    }

    #[test]
    fn detect_short_input_is_unknown() {
        assert_eq!(detect_format(&[0xFF]).kind, FormatKind::Unknown);
    }

    #[test]
    fn unknown_format_single_region() {
        let data = b"not an image at all";
        let parsed = parse_container(data);
        assert_eq!(parsed.format.kind, FormatKind::Unknown);
        assert_eq!(parsed.regions.len(), 1);
        assert_eq!(parsed.regions[0].kind, RegionKind::ImageData);
        assert_eq!(parsed.regions[0].length, data.len());
        assert!(!parsed.well_formed);
    }

    #[test]
    fn empty_input_has_no_regions() {
        let parsed = parse_container(&[]);
        assert!(parsed.regions.is_empty());
        assert!(!parsed.well_formed);
        let out = reassemble(&parsed, &[]).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn extract_region_bounds() {
        let data = [0xFFu8, 0xD8];
        let region = ByteRegion {
            offset: 0,
            length: 2,
            kind: RegionKind::Header,
            label: "SOI".into(),
        };
        assert_eq!(extract_region(&data, &region).unwrap(), &data[..]);

        let oob = ByteRegion {
            offset: 1,
            length: 5,
            kind: RegionKind::Header,
            label: "x".into(),
        };
        assert!(extract_region(&data, &oob).is_err());
    }

    #[test]
    fn extract_zero_length_region() {
        let region = ByteRegion {
            offset: 1,
            length: 0,
            kind: RegionKind::Segment,
            label: "z".into(),
        };
        assert_eq!(extract_region(&[1, 2, 3], &region).unwrap(), &[] as &[u8]);
    }

    #[test]
    fn reassemble_detects_corrupted_bookkeeping() {
        let data = b"GIF89a\x01\x00\x01\x00\x00\x00\x00\x3b";
        let mut parsed = parse_container(data);
        assert!(reassemble(&parsed, data).is_ok());
        // Corrupt an offset; reassemble must flag it instead of mis-stitching.
        if let Some(r) = parsed.regions.get_mut(0) {
            r.offset += 1;
        }
        assert!(reassemble(&parsed, data).is_err());
    }
}
