//! JPEG marker-segment walker.
//!
//! The image stream runs from SOI (FF D8) to the first EOI (FF D9) reached
//! after correctly skipping entropy-coded scan data, where FF 00 is byte
//! stuffing and FF D0..=D7 are restart markers. Everything after that EOI is
//! one post-EOF trailer; a later FF D9 inside the trailer belongs to the
//! trailer.

use super::{RegionKind, RegionSink};

const MARKER_PREFIX: u8 = 0xFF;
const SOI: u8 = 0xD8;
const EOI: u8 = 0xD9;
const SOS: u8 = 0xDA;
const TEM: u8 = 0x01;
const RST0: u8 = 0xD0;
const RST7: u8 = 0xD7;
const COM: u8 = 0xFE;
const APP0: u8 = 0xE0;
const APP15: u8 = 0xEF;

fn marker_label(marker: u8) -> String {
    match marker {
        SOI => "SOI".into(),
        EOI => "EOI".into(),
        SOS => "SOS".into(),
        TEM => "TEM".into(),
        COM => "COM".into(),
        0xC0 => "SOF0".into(),
        0xC1 => "SOF1".into(),
        0xC2 => "SOF2".into(),
        0xC4 => "DHT".into(),
        0xC3 | 0xC5..=0xCB | 0xCD..=0xCF => format!("SOF{}", marker - 0xC0),
        0xCC => "DAC".into(),
        0xDB => "DQT".into(),
        0xDC => "DNL".into(),
        0xDD => "DRI".into(),
        RST0..=RST7 => format!("RST{}", marker - RST0),
        APP0..=APP15 => format!("APP{}", marker - APP0),
        other => format!("MARKER(FF{other:02X})"),
    }
}

/// Refine an APPn label with the identifier string at the start of its
/// payload, e.g. "APP1/EXIF".
fn app_label(marker: u8, payload: &[u8]) -> String {
    let base = marker_label(marker);
    let tag = if payload.starts_with(b"JFIF\0") {
        Some("JFIF")
    } else if payload.starts_with(b"Exif\0\0") {
        Some("EXIF")
    } else if payload.starts_with(b"http://ns.adobe.com/xap/1.0/") {
        Some("XMP")
    } else if payload.starts_with(b"ICC_PROFILE\0") {
        Some("ICC")
    } else {
        None
    };
    match tag {
        Some(t) => format!("{base}/{t}"),
        None => base,
    }
}

pub(super) fn walk(bytes: &[u8], sink: &mut RegionSink) {
    // Magic detection guarantees bytes starts with FF D8.
    sink.push_to(2, RegionKind::Header, "SOI");

    loop {
        let pos = sink.cursor();
        if pos >= bytes.len() {
            sink.diagnose("missing EOI: file ends before End of Image marker");
            return;
        }
        if bytes[pos] != MARKER_PREFIX {
            sink.diagnose(format!(
                "unexpected byte 0x{:02X} at offset {}: expected marker",
                bytes[pos], pos
            ));
            sink.finish_rest(RegionKind::ImageData, "unparsed");
            return;
        }

        // Any number of FF fill bytes may precede the marker code.
        let mut mpos = pos;
        while mpos < bytes.len() && bytes[mpos] == MARKER_PREFIX {
            mpos += 1;
        }
        if mpos >= bytes.len() {
            sink.diagnose(format!("truncated marker at offset {pos}"));
            sink.finish_rest(RegionKind::Segment, "truncated-marker");
            return;
        }
        let marker = bytes[mpos];
        let data_start = mpos + 1;

        match marker {
            0x00 => {
                // FF 00 outside entropy-coded data is not a marker.
                sink.diagnose(format!("stuffed byte outside scan data at offset {pos}"));
                sink.finish_rest(RegionKind::ImageData, "unparsed");
                return;
            }
            EOI => {
                sink.push_to(data_start, RegionKind::Segment, "EOI");
                sink.finish_rest(RegionKind::PostEofTrailer, "trailer");
                return;
            }
            SOI => {
                sink.diagnose(format!("unexpected SOI marker at offset {pos}"));
                sink.push_to(data_start, RegionKind::Segment, "SOI");
            }
            TEM | RST0..=RST7 => {
                // Standalone markers carry no length field. Restart markers
                // outside scan data are tolerated but noted.
                if (RST0..=RST7).contains(&marker) {
                    sink.diagnose(format!("restart marker outside scan data at offset {pos}"));
                }
                sink.push_to(data_start, RegionKind::Segment, marker_label(marker));
            }
            SOS => {
                if !read_sized_segment(bytes, sink, data_start, RegionKind::Segment, "SOS".into()) {
                    return;
                }
                if !skip_scan_data(bytes, sink) {
                    return;
                }
            }
            _ => {
                let (kind, needs_payload) = match marker {
                    APP0..=APP15 | COM => (RegionKind::Metadata, true),
                    _ => (RegionKind::Segment, false),
                };
                let label = if needs_payload && marker != COM {
                    let payload = segment_payload(bytes, data_start);
                    app_label(marker, payload)
                } else {
                    marker_label(marker)
                };
                if !read_sized_segment(bytes, sink, data_start, kind, label) {
                    return;
                }
            }
        }
    }
}

/// Payload slice of a sized segment (after its 2-byte length field), clamped
/// to the file end. Used only for labeling.
fn segment_payload(bytes: &[u8], data_start: usize) -> &[u8] {
    if data_start + 2 > bytes.len() {
        return &[];
    }
    let declared = u16::from_be_bytes([bytes[data_start], bytes[data_start + 1]]) as usize;
    let payload_start = data_start + 2;
    let end = (data_start + declared).min(bytes.len());
    if declared < 2 || payload_start > end {
        return &[];
    }
    &bytes[payload_start..end]
}

/// Push a marker segment whose 2-byte big-endian length field counts itself.
/// Returns false if walking cannot continue past this segment.
fn read_sized_segment(
    bytes: &[u8],
    sink: &mut RegionSink,
    data_start: usize,
    kind: RegionKind,
    label: String,
) -> bool {
    if data_start + 2 > bytes.len() {
        sink.diagnose(format!(
            "truncated segment length for {label} at offset {}",
            sink.cursor()
        ));
        sink.finish_rest(kind, &label);
        return false;
    }
    let declared = u16::from_be_bytes([bytes[data_start], bytes[data_start + 1]]) as usize;
    if declared < 2 {
        sink.diagnose(format!(
            "invalid segment length {declared} for {label} at offset {}",
            sink.cursor()
        ));
        sink.finish_rest(kind, &label);
        return false;
    }
    let end = data_start + declared;
    if end > bytes.len() {
        sink.diagnose(format!(
            "truncated segment {label} at offset {}: declared length runs past end of file",
            sink.cursor()
        ));
        sink.push_to(bytes.len(), kind, label);
        return false;
    }
    sink.push_to(end, kind, label);
    true
}

/// Advance over entropy-coded data until the next true marker. FF 00 is a
/// stuffed data byte and FF D0..=D7 are restart markers, both part of the
/// scan. Returns false if the file ended inside the scan.
fn skip_scan_data(bytes: &[u8], sink: &mut RegionSink) -> bool {
    let start = sink.cursor();
    let mut i = start;
    while i < bytes.len() {
        if bytes[i] != MARKER_PREFIX {
            i += 1;
            continue;
        }
        // A trailing FF with nothing after it: scan is truncated.
        if i + 1 >= bytes.len() {
            break;
        }
        let next = bytes[i + 1];
        if next == 0x00 || (RST0..=RST7).contains(&next) {
            i += 2;
            continue;
        }
        if next == MARKER_PREFIX {
            // Fill byte; the marker code follows later.
            i += 1;
            continue;
        }
        // True marker terminates the scan data.
        sink.push_to(i, RegionKind::ImageData, "scan-data");
        return true;
    }
    sink.diagnose("missing EOI: file ends inside entropy-coded data");
    sink.finish_rest(RegionKind::ImageData, "scan-data");
    false
}
