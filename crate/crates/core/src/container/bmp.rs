//! BMP walker. The file header declares a total size; any bytes past it are
//! the post-EOF trailer.

use super::{RegionKind, RegionSink};

pub(super) fn walk(bytes: &[u8], sink: &mut RegionSink) {
    if bytes.len() < 14 {
        sink.diagnose("truncated BMP file header");
        sink.finish_rest(RegionKind::Header, "file-header");
        return;
    }
    sink.push_to(14, RegionKind::Header, "file-header");

    let declared = u32::from_le_bytes([bytes[2], bytes[3], bytes[4], bytes[5]]) as usize;
    let pixel_offset = u32::from_le_bytes([bytes[10], bytes[11], bytes[12], bytes[13]]) as usize;

    let image_end = if declared < 14 {
        sink.diagnose(format!("implausible declared file size {declared}"));
        bytes.len()
    } else if declared > bytes.len() {
        sink.diagnose(format!(
            "declared file size {declared} exceeds actual length {}",
            bytes.len()
        ));
        bytes.len()
    } else {
        declared
    };

    if bytes.len() >= 18 {
        let dib_size = u32::from_le_bytes([bytes[14], bytes[15], bytes[16], bytes[17]]) as usize;
        let dib_end = 14usize.saturating_add(dib_size).min(image_end);
        sink.push_to(dib_end, RegionKind::Segment, "dib-header");
        if pixel_offset > dib_end && pixel_offset <= image_end {
            sink.push_to(pixel_offset, RegionKind::Segment, "color-table");
        }
    }

    sink.push_to(image_end, RegionKind::ImageData, "pixel-data");
    sink.finish_rest(RegionKind::PostEofTrailer, "trailer");
}
