//! PNG chunk walker. Chunks run until IEND; anything after IEND's CRC is the
//! post-EOF trailer.

use super::{RegionKind, RegionSink};

/// Chunk types that carry textual or ancillary metadata rather than
/// structure or pixels.
const METADATA_CHUNKS: [&[u8; 4]; 5] = [b"tEXt", b"zTXt", b"iTXt", b"eXIf", b"tIME"];

pub(super) fn walk(bytes: &[u8], sink: &mut RegionSink) {
    sink.push_to(8, RegionKind::Header, "signature");

    loop {
        let pos = sink.cursor();
        if pos >= bytes.len() {
            sink.diagnose("missing IEND: file ends before the final chunk");
            return;
        }
        if pos + 8 > bytes.len() {
            sink.diagnose(format!("truncated chunk header at offset {pos}"));
            sink.finish_rest(RegionKind::Segment, "truncated-chunk");
            return;
        }
        let data_len =
            u32::from_be_bytes([bytes[pos], bytes[pos + 1], bytes[pos + 2], bytes[pos + 3]])
                as usize;
        let type_bytes: [u8; 4] = bytes[pos + 4..pos + 8].try_into().unwrap();
        let label = chunk_label(&type_bytes);

        // length + type + data + CRC
        let end = pos
            .checked_add(12)
            .and_then(|e| e.checked_add(data_len))
            .unwrap_or(usize::MAX);
        if end > bytes.len() {
            sink.diagnose(format!(
                "truncated chunk {label} at offset {pos}: declared length runs past end of file"
            ));
            sink.finish_rest(chunk_kind(&type_bytes), &label);
            return;
        }

        sink.push_to(end, chunk_kind(&type_bytes), &label);
        if &type_bytes == b"IEND" {
            sink.finish_rest(RegionKind::PostEofTrailer, "trailer");
            return;
        }
    }
}

fn chunk_kind(type_bytes: &[u8; 4]) -> RegionKind {
    if type_bytes == b"IDAT" {
        RegionKind::ImageData
    } else if METADATA_CHUNKS.contains(&type_bytes) {
        RegionKind::Metadata
    } else {
        RegionKind::Segment
    }
}

fn chunk_label(type_bytes: &[u8; 4]) -> String {
    if type_bytes.iter().all(|b| b.is_ascii_alphabetic()) {
        String::from_utf8_lossy(type_bytes).into_owned()
    } else {
        format!("chunk({:02X?})", type_bytes)
    }
}

#[cfg(test)]
mod tests {
    use crate::container::{parse_container, FormatKind, RegionKind};

    fn chunk(typ: &[u8; 4], data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(data.len() as u32).to_be_bytes());
        out.extend_from_slice(typ);
        out.extend_from_slice(data);
        // CRC value is irrelevant to region walking.
        out.extend_from_slice(&[0, 0, 0, 0]);
        out
    }

    fn tiny_png() -> Vec<u8> {
        let mut p = vec![0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
        p.extend(chunk(b"IHDR", &[0; 13]));
        p.extend(chunk(b"IDAT", &[1, 2, 3]));
        p.extend(chunk(b"IEND", &[]));
        p
    }

    #[test]
    fn walks_chunks_to_iend() {
        let parsed = parse_container(&tiny_png());
        assert_eq!(parsed.format.kind, FormatKind::Png);
        assert!(parsed.well_formed, "{:?}", parsed.diagnostics);
        assert!(parsed.trailer().is_none());
        let labels: Vec<&str> = parsed.regions.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["signature", "IHDR", "IDAT", "IEND"]);
    }

    #[test]
    fn bytes_after_iend_are_trailer() {
        let mut p = tiny_png();
        p.extend_from_slice(b"secret");
        let parsed = parse_container(&p);
        let t = parsed.trailer().expect("trailer");
        assert_eq!(t.length, 6);
    }

    #[test]
    fn text_chunk_is_metadata() {
        let mut p = vec![0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
        p.extend(chunk(b"IHDR", &[0; 13]));
        p.extend(chunk(b"tEXt", b"Comment\0hello"));
        p.extend(chunk(b"IDAT", &[1]));
        p.extend(chunk(b"IEND", &[]));
        let parsed = parse_container(&p);
        let text = parsed
            .regions
            .iter()
            .find(|r| r.label == "tEXt")
            .expect("tEXt region");
        assert_eq!(text.kind, RegionKind::Metadata);
    }

    #[test]
    fn truncated_chunk_is_diagnosed() {
        let mut p = vec![0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
        p.extend_from_slice(&u32::MAX.to_be_bytes());
        p.extend_from_slice(b"IDAT");
        let parsed = parse_container(&p);
        assert!(!parsed.well_formed);
        let total: usize = parsed.regions.iter().map(|r| r.length).sum();
        assert_eq!(total, p.len());
    }
}
