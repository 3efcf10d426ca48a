//! GIF block walker. Blocks run until the 0x3B trailer byte; anything after
//! it is the post-EOF trailer region.

use super::{RegionKind, RegionSink};

const IMAGE_SEPARATOR: u8 = 0x2C;
const EXTENSION: u8 = 0x21;
const TRAILER: u8 = 0x3B;

pub(super) fn walk(bytes: &[u8], sink: &mut RegionSink) {
    sink.push_to(6, RegionKind::Header, "signature");

    // Logical screen descriptor: width(2) height(2) flags(1) bg(1) aspect(1).
    if bytes.len() < 13 {
        sink.diagnose("truncated logical screen descriptor");
        sink.finish_rest(RegionKind::Segment, "screen-descriptor");
        return;
    }
    sink.push_to(13, RegionKind::Segment, "screen-descriptor");

    let flags = bytes[10];
    if flags & 0x80 != 0 {
        let table_len = 3usize * (1 << ((flags & 0x07) + 1));
        let end = 13 + table_len;
        if end > bytes.len() {
            sink.diagnose("truncated global color table");
            sink.finish_rest(RegionKind::Segment, "global-color-table");
            return;
        }
        sink.push_to(end, RegionKind::Segment, "global-color-table");
    }

    loop {
        let pos = sink.cursor();
        if pos >= bytes.len() {
            sink.diagnose("missing trailer byte: file ends before 0x3B");
            return;
        }
        match bytes[pos] {
            TRAILER => {
                sink.push_to(pos + 1, RegionKind::Segment, "trailer-byte");
                sink.finish_rest(RegionKind::PostEofTrailer, "trailer");
                return;
            }
            IMAGE_SEPARATOR => {
                if !walk_image(bytes, sink) {
                    return;
                }
            }
            EXTENSION => {
                if !walk_extension(bytes, sink) {
                    return;
                }
            }
            other => {
                sink.diagnose(format!(
                    "unknown block introducer 0x{other:02X} at offset {pos}"
                ));
                sink.finish_rest(RegionKind::ImageData, "unparsed");
                return;
            }
        }
    }
}

/// Image descriptor + optional local color table + LZW-coded sub-blocks.
fn walk_image(bytes: &[u8], sink: &mut RegionSink) -> bool {
    let pos = sink.cursor();
    if pos + 10 > bytes.len() {
        sink.diagnose("truncated image descriptor");
        sink.finish_rest(RegionKind::ImageData, "image");
        return false;
    }
    let flags = bytes[pos + 9];
    let mut cursor = pos + 10;
    if flags & 0x80 != 0 {
        cursor += 3usize * (1 << ((flags & 0x07) + 1));
    }
    // LZW minimum code size byte precedes the sub-blocks.
    cursor += 1;
    match skip_sub_blocks(bytes, cursor) {
        Some(end) => {
            sink.push_to(end, RegionKind::ImageData, "image");
            true
        }
        None => {
            sink.diagnose("truncated image data sub-blocks");
            sink.finish_rest(RegionKind::ImageData, "image");
            false
        }
    }
}

fn walk_extension(bytes: &[u8], sink: &mut RegionSink) -> bool {
    let pos = sink.cursor();
    if pos + 2 > bytes.len() {
        sink.diagnose("truncated extension block");
        sink.finish_rest(RegionKind::Segment, "extension");
        return false;
    }
    let label = bytes[pos + 1];
    let (kind, name) = match label {
        0xFE => (RegionKind::Metadata, "comment-ext"),
        0xFF => (RegionKind::Metadata, "application-ext"),
        0x01 => (RegionKind::Metadata, "plain-text-ext"),
        0xF9 => (RegionKind::Segment, "graphic-control-ext"),
        _ => (RegionKind::Segment, "extension"),
    };
    match skip_sub_blocks(bytes, pos + 2) {
        Some(end) => {
            sink.push_to(end, kind, name);
            true
        }
        None => {
            sink.diagnose(format!("truncated {name} sub-blocks"));
            sink.finish_rest(kind, name);
            false
        }
    }
}

/// Walk length-prefixed sub-blocks up to and including the 0x00 terminator.
/// Returns the offset just past the terminator, or None on truncation.
fn skip_sub_blocks(bytes: &[u8], mut pos: usize) -> Option<usize> {
    loop {
        let size = *bytes.get(pos)? as usize;
        pos += 1;
        if size == 0 {
            return Some(pos);
        }
        pos = pos.checked_add(size)?;
        if pos > bytes.len() {
            return None;
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::container::{parse_container, FormatKind, RegionKind};

    fn tiny_gif() -> Vec<u8> {
        let mut g = Vec::new();
        g.extend_from_slice(b"GIF89a");
        g.extend_from_slice(&[0x01, 0x00, 0x01, 0x00, 0x80, 0x00, 0x00]);
        g.extend_from_slice(&[0xFF, 0xFF, 0xFF, 0x00, 0x00, 0x00]); // 2-entry palette
        g.extend_from_slice(&[0x2C, 0, 0, 0, 0, 1, 0, 1, 0, 0]); // image descriptor
        g.extend_from_slice(&[0x02, 0x02, 0x44, 0x01, 0x00]); // LZW data
        g.push(0x3B);
        g
    }

    #[test]
    fn walks_blocks_to_trailer_byte() {
        let parsed = parse_container(&tiny_gif());
        assert_eq!(parsed.format.kind, FormatKind::Gif);
        assert!(parsed.well_formed, "{:?}", parsed.diagnostics);
        assert!(parsed.trailer().is_none());
    }

    #[test]
    fn bytes_after_trailer_byte_are_trailer_region() {
        let mut g = tiny_gif();
        g.extend_from_slice(b"xyz");
        let parsed = parse_container(&g);
        assert_eq!(parsed.trailer().map(|t| t.length), Some(3));
    }

    #[test]
    fn comment_extension_is_metadata() {
        let mut g = tiny_gif();
        let insert_at = g.len() - 1;
        let mut ext = vec![0x21, 0xFE, 5];
        ext.extend_from_slice(b"hello");
        ext.push(0);
        g.splice(insert_at..insert_at, ext);
        let parsed = parse_container(&g);
        let comment = parsed
            .regions
            .iter()
            .find(|r| r.label == "comment-ext")
            .expect("comment region");
        assert_eq!(comment.kind, RegionKind::Metadata);
    }

    #[test]
    fn truncated_sub_blocks_diagnosed() {
        let mut g = tiny_gif();
        g.truncate(g.len() - 3);
        let parsed = parse_container(&g);
        assert!(!parsed.well_formed);
        let total: usize = parsed.regions.iter().map(|r| r.length).sum();
        assert_eq!(total, g.len());
    }
}
