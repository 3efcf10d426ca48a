//! Deterministic built-in carrier images. Golden tests depend on these being
//! byte-stable, so everything is assembled from fixed constants: no encoder
//! library, no timestamps, no randomness.
//!
//! The JPEG carriers use flat quantization tables and the standard baseline
//! Huffman tables, with the entropy-coded scan worked out by hand for a
//! constant-color image. All of them decode in stock viewers.

use crate::container::FormatKind;

// Standard baseline Huffman tables (the ubiquitous ones shipped by virtually
// every encoder).
const DC_LUMA_BITS: [u8; 16] = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
const DC_CHROMA_BITS: [u8; 16] = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
const DC_VALUES: [u8; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

const AC_LUMA_BITS: [u8; 16] = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D];
const AC_LUMA_VALUES: [u8; 162] = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
];
const AC_CHROMA_BITS: [u8; 16] = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77];
const AC_CHROMA_VALUES: [u8; 162] = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
    0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0,
    0x15, 0x62, 0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34, 0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
    0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
    0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
    0x69, 0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5,
    0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3,
    0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
    0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
];

const JFIF_APP0: [u8; 14] = [
    b'J', b'F', b'I', b'F', 0, 0x01, 0x01, 0x00, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00,
];

fn push_segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.push(0xFF);
    out.push(marker);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

fn push_dht(out: &mut Vec<u8>, class: u8, ident: u8, bits: &[u8; 16], values: &[u8]) {
    let mut payload = Vec::with_capacity(1 + 16 + values.len());
    payload.push((class << 4) | ident);
    payload.extend_from_slice(bits);
    payload.extend_from_slice(values);
    push_segment(out, 0xC4, &payload);
}

fn push_dqt_flat(out: &mut Vec<u8>, ident: u8) {
    let mut payload = vec![ident];
    payload.extend_from_slice(&[1u8; 64]);
    push_segment(out, 0xDB, &payload);
}

/// 1x1 white baseline JPEG, three components (decodes as RGB white).
///
/// With flat quantization the white Y block quantizes to a lone DC of 1016
/// (category 10) and the chroma blocks to DC 0, giving the 30-bit scan
/// `FE FE 28 03` after padding.
pub fn white_jpeg_1x1() -> Vec<u8> {
    let mut j = vec![0xFF, 0xD8];
    push_segment(&mut j, 0xE0, &JFIF_APP0);
    push_dqt_flat(&mut j, 0);
    push_dqt_flat(&mut j, 1);
    // SOF0: 8-bit 1x1, components Y(q0) Cb(q1) Cr(q1), all 1x1 sampling.
    push_segment(
        &mut j,
        0xC0,
        &[8, 0, 1, 0, 1, 3, 1, 0x11, 0, 2, 0x11, 1, 3, 0x11, 1],
    );
    push_dht(&mut j, 0, 0, &DC_LUMA_BITS, &DC_VALUES);
    push_dht(&mut j, 1, 0, &AC_LUMA_BITS, &AC_LUMA_VALUES);
    push_dht(&mut j, 0, 1, &DC_CHROMA_BITS, &DC_VALUES);
    push_dht(&mut j, 1, 1, &AC_CHROMA_BITS, &AC_CHROMA_VALUES);
    push_segment(&mut j, 0xDA, &[3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 0x3F, 0]);
    j.extend_from_slice(&[0xFE, 0xFE, 0x28, 0x03]);
    j.extend_from_slice(&[0xFF, 0xD9]);
    j
}

/// 16x8 white grayscale JPEG with a restart interval of one MCU, so the scan
/// data contains a genuine RST0 marker.
pub fn white_jpeg_restart() -> Vec<u8> {
    let mut j = vec![0xFF, 0xD8];
    push_segment(&mut j, 0xE0, &JFIF_APP0);
    push_dqt_flat(&mut j, 0);
    push_segment(&mut j, 0xC0, &[8, 0, 8, 0, 16, 1, 1, 0x11, 0]);
    push_dht(&mut j, 0, 0, &DC_LUMA_BITS, &DC_VALUES);
    push_dht(&mut j, 1, 0, &AC_LUMA_BITS, &AC_LUMA_VALUES);
    push_segment(&mut j, 0xDD, &[0, 1]);
    push_segment(&mut j, 0xDA, &[1, 1, 0x00, 0, 0x3F, 0]);
    j.extend_from_slice(&[0xFE, 0xFE, 0x2B]); // MCU 0: DC 1016 + EOB
    j.extend_from_slice(&[0xFF, 0xD0]); // RST0
    j.push(0x2B); // MCU 1: DC diff 0 + EOB
    j.extend_from_slice(&[0xFF, 0xD9]);
    j
}

/// 1x1 grayscale JPEG whose scan contains an FF 00 stuffed byte (DC value
/// 1020 encodes to `FE FF 00 2B`).
pub fn jpeg_with_byte_stuffing() -> Vec<u8> {
    let mut j = vec![0xFF, 0xD8];
    push_segment(&mut j, 0xE0, &JFIF_APP0);
    push_dqt_flat(&mut j, 0);
    push_segment(&mut j, 0xC0, &[8, 0, 1, 0, 1, 1, 1, 0x11, 0]);
    push_dht(&mut j, 0, 0, &DC_LUMA_BITS, &DC_VALUES);
    push_dht(&mut j, 1, 0, &AC_LUMA_BITS, &AC_LUMA_VALUES);
    push_segment(&mut j, 0xDA, &[1, 1, 0x00, 0, 0x3F, 0]);
    j.extend_from_slice(&[0xFE, 0xFF, 0x00, 0x2B]);
    j.extend_from_slice(&[0xFF, 0xD9]);
    j
}

/// The 1x1 white carrier with a minimal Exif APP1 segment (one ASCII
/// Software tag) inserted after APP0.
pub fn white_jpeg_exif() -> Vec<u8> {
    let base = white_jpeg_1x1();
    let mut tiff: Vec<u8> = Vec::new();
    tiff.extend_from_slice(b"II*\x00");
    tiff.extend_from_slice(&8u32.to_le_bytes()); // IFD0 offset
    tiff.extend_from_slice(&1u16.to_le_bytes()); // one entry
    tiff.extend_from_slice(&0x0131u16.to_le_bytes()); // Software
    tiff.extend_from_slice(&2u16.to_le_bytes()); // ASCII
    tiff.extend_from_slice(&6u32.to_le_bytes()); // count
    tiff.extend_from_slice(&26u32.to_le_bytes()); // value offset
    tiff.extend_from_slice(&0u32.to_le_bytes()); // next IFD
    tiff.extend_from_slice(b"probe\0");

    let mut app1 = Vec::new();
    let mut payload = b"Exif\0\0".to_vec();
    payload.extend_from_slice(&tiff);
    push_segment(&mut app1, 0xE1, &payload);

    // Splice after SOI + APP0 (2 + 2 + 2 + 16 payload bytes).
    let split = 2 + 2 + 2 + JFIF_APP0.len();
    let mut out = base[..split].to_vec();
    out.extend_from_slice(&app1);
    out.extend_from_slice(&base[split..]);
    out
}

/// Structurally progressive JPEG: SOF2 with two scans. The marker layout is
/// what a progressive encoder emits; the region walker must handle multiple
/// SOS segments.
pub fn jpeg_progressive_layout() -> Vec<u8> {
    let mut j = vec![0xFF, 0xD8];
    push_segment(&mut j, 0xE0, &JFIF_APP0);
    push_dqt_flat(&mut j, 0);
    push_segment(&mut j, 0xC2, &[8, 0, 1, 0, 1, 1, 1, 0x11, 0]);
    push_dht(&mut j, 0, 0, &DC_LUMA_BITS, &DC_VALUES);
    // DC-only first scan (spectral selection 0..0).
    push_segment(&mut j, 0xDA, &[1, 1, 0x00, 0, 0, 0]);
    j.extend_from_slice(&[0xFE, 0xFE, 0x3F]);
    push_dht(&mut j, 1, 0, &AC_LUMA_BITS, &AC_LUMA_VALUES);
    // AC refinement scan (spectral selection 1..63).
    push_segment(&mut j, 0xDA, &[1, 1, 0x00, 1, 0x3F, 0]);
    j.extend_from_slice(&[0x2B]);
    j.extend_from_slice(&[0xFF, 0xD9]);
    j
}

const CRC32_POLY: u32 = 0xEDB8_8320;

fn crc32(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ CRC32_POLY
            } else {
                crc >> 1
            };
        }
    }
    !crc
}

fn adler32(data: &[u8]) -> u32 {
    let mut a: u32 = 1;
    let mut b: u32 = 0;
    for &byte in data {
        a = (a + byte as u32) % 65_521;
        b = (b + a) % 65_521;
    }
    (b << 16) | a
}

fn png_chunk(out: &mut Vec<u8>, typ: &[u8; 4], data: &[u8]) {
    out.extend_from_slice(&(data.len() as u32).to_be_bytes());
    out.extend_from_slice(typ);
    out.extend_from_slice(data);
    let mut crc_input = typ.to_vec();
    crc_input.extend_from_slice(data);
    out.extend_from_slice(&crc32(&crc_input).to_be_bytes());
}

/// Build a 1x1 RGB8 PNG with the given pixel, using a stored (uncompressed)
/// deflate block so the bytes are fixed.
fn png_1x1(rgb: [u8; 3]) -> Vec<u8> {
    let raw = [0u8, rgb[0], rgb[1], rgb[2]]; // filter byte + pixel
    let mut idat = vec![0x78, 0x01]; // zlib header
    idat.extend_from_slice(&[0x01, 0x04, 0x00, 0xFB, 0xFF]); // final stored block, len 4
    idat.extend_from_slice(&raw);
    idat.extend_from_slice(&adler32(&raw).to_be_bytes());

    let mut png = vec![0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A];
    let mut ihdr = Vec::new();
    ihdr.extend_from_slice(&1u32.to_be_bytes());
    ihdr.extend_from_slice(&1u32.to_be_bytes());
    ihdr.extend_from_slice(&[8, 2, 0, 0, 0]); // 8-bit RGB
    png_chunk(&mut png, b"IHDR", &ihdr);
    png_chunk(&mut png, b"IDAT", &idat);
    png_chunk(&mut png, b"IEND", &[]);
    png
}

/// 1x1 white RGB PNG.
pub fn white_png_1x1() -> Vec<u8> {
    png_1x1([0xFF, 0xFF, 0xFF])
}

/// 1x1 white PNG carrying a tEXt metadata chunk.
pub fn png_with_text_chunk() -> Vec<u8> {
    let base = white_png_1x1();
    // Insert tEXt before IDAT: signature(8) + IHDR chunk (12 + 13).
    let split = 8 + 12 + 13;
    let mut out = base[..split].to_vec();
    png_chunk(&mut out, b"tEXt", b"Comment\0clean control image");
    out.extend_from_slice(&base[split..]);
    out
}

/// 1x1 white GIF89a with a two-entry global palette.
pub fn white_gif_1x1() -> Vec<u8> {
    let mut g = Vec::with_capacity(35);
    g.extend_from_slice(b"GIF89a");
    g.extend_from_slice(&[0x01, 0x00, 0x01, 0x00, 0x80, 0x00, 0x00]);
    g.extend_from_slice(&[0xFF, 0xFF, 0xFF, 0x00, 0x00, 0x00]);
    g.extend_from_slice(&[0x2C, 0x00, 0x00, 0x00, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00]);
    g.extend_from_slice(&[0x02, 0x02, 0x44, 0x01, 0x00]);
    g.push(0x3B);
    g
}

/// White GIF with a comment extension before the image block.
pub fn gif_with_comment() -> Vec<u8> {
    let base = white_gif_1x1();
    let mut out = base[..19].to_vec(); // header + screen descriptor + palette
    out.extend_from_slice(&[0x21, 0xFE, 0x13]);
    out.extend_from_slice(b"clean control image");
    out.push(0x00);
    out.extend_from_slice(&base[19..]);
    out
}

/// 1x1 white 24-bit BMP.
pub fn white_bmp_1x1() -> Vec<u8> {
    let pixels = [0xFFu8, 0xFF, 0xFF, 0x00]; // BGR + row padding
    let total = 14 + 40 + pixels.len();
    let mut b = Vec::with_capacity(total);
    b.extend_from_slice(b"BM");
    b.extend_from_slice(&(total as u32).to_le_bytes());
    b.extend_from_slice(&[0; 4]);
    b.extend_from_slice(&54u32.to_le_bytes());
    b.extend_from_slice(&40u32.to_le_bytes());
    b.extend_from_slice(&1i32.to_le_bytes());
    b.extend_from_slice(&1i32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&24u16.to_le_bytes());
    b.extend_from_slice(&0u32.to_le_bytes());
    b.extend_from_slice(&(pixels.len() as u32).to_le_bytes());
    b.extend_from_slice(&2835i32.to_le_bytes());
    b.extend_from_slice(&2835i32.to_le_bytes());
    b.extend_from_slice(&0u32.to_le_bytes());
    b.extend_from_slice(&0u32.to_le_bytes());
    b.extend_from_slice(&pixels);
    b
}

/// 4x4 gradient BMP, a slightly larger clean control.
pub fn gradient_bmp_4x4() -> Vec<u8> {
    let mut pixels = Vec::new();
    for y in 0..4u32 {
        for x in 0..4u32 {
            let v = (x * 60 + y * 15) as u8;
            pixels.extend_from_slice(&[v, v.wrapping_add(40), v.wrapping_add(80)]);
        }
        // 4 pixels * 3 bytes = 12, already a multiple of 4: no row padding.
    }
    let total = 14 + 40 + pixels.len();
    let mut b = Vec::with_capacity(total);
    b.extend_from_slice(b"BM");
    b.extend_from_slice(&(total as u32).to_le_bytes());
    b.extend_from_slice(&[0; 4]);
    b.extend_from_slice(&54u32.to_le_bytes());
    b.extend_from_slice(&40u32.to_le_bytes());
    b.extend_from_slice(&4i32.to_le_bytes());
    b.extend_from_slice(&4i32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&24u16.to_le_bytes());
    b.extend_from_slice(&0u32.to_le_bytes());
    b.extend_from_slice(&(pixels.len() as u32).to_le_bytes());
    b.extend_from_slice(&2835i32.to_le_bytes());
    b.extend_from_slice(&2835i32.to_le_bytes());
    b.extend_from_slice(&0u32.to_le_bytes());
    b.extend_from_slice(&0u32.to_le_bytes());
    b.extend_from_slice(&pixels);
    b
}

/// The built-in carrier for a format, if one exists.
pub fn builtin_carrier(kind: FormatKind) -> Option<Vec<u8>> {
    match kind {
        FormatKind::Jpeg => Some(white_jpeg_1x1()),
        FormatKind::Png => Some(white_png_1x1()),
        FormatKind::Gif => Some(white_gif_1x1()),
        FormatKind::Bmp => Some(white_bmp_1x1()),
        FormatKind::Unknown => None,
    }
}
