//! Image and mask file formats.
//!
//! * `RRM1` binary: magic `b"RRM1"`, rows and cols as little-endian `u32`,
//!   then `rows * cols` little-endian `f64` in row-major order.
//! * CSV: one image row per line, comma separated reals, no header.
//! * PGM: binary `P5`, maxval 255, set pixels written as 255.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use crate::detection::{BinaryMask, ImageMatrix};
use crate::error::{Error, Result};

pub const RRM1_MAGIC: &[u8; 4] = b"RRM1";

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn encode_rrm1(img: &ImageMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * img.pixels().len());
    out.extend_from_slice(RRM1_MAGIC);
    out.extend_from_slice(&(img.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(img.cols() as u32).to_le_bytes());
    for v in img.pixels() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_rrm1(bytes: &[u8]) -> Result<ImageMatrix> {
    if bytes.len() < 12 || &bytes[..4] != RRM1_MAGIC {
        return Err(Error::Parse { line: 0, byte: 0, message: "missing RRM1 header".into() });
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = &bytes[12..];
    if body.len() != rows * cols * 8 {
        return Err(Error::Parse {
            line: 0,
            byte: 12,
            message: format!("expected {} bytes of pixel data, found {}", rows * cols * 8, body.len()),
        });
    }
    let pixels = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    ImageMatrix::new(rows, cols, pixels)
}

pub fn parse_image_csv<R: Read>(reader: R) -> Result<ImageMatrix> {
    let mut rdr = std::io::BufReader::new(reader);
    let mut line = String::new();
    let mut pixels = Vec::new();
    let (mut rows, mut cols) = (0usize, None);
    let (mut line_no, mut offset) = (0u64, 0u64);
    loop {
        line.clear();
        let read = rdr.read_line(&mut line).map_err(|e| Error::Io(e.to_string()))?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let mut count = 0;
            for field in trimmed.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    byte: offset,
                    message: format!("'{}' is not a number", field.trim()),
                })?;
                pixels.push(v);
                count += 1;
            }
            match cols {
                None => cols = Some(count),
                Some(c) if c != count => {
                    return Err(Error::Parse {
                        line: line_no,
                        byte: offset,
                        message: format!("row has {count} values, expected {c}"),
                    })
                }
                _ => {}
            }
            rows += 1;
        }
        offset += read as u64;
    }
    ImageMatrix::new(rows, cols.unwrap_or(0), pixels)
}

/// Shortest round-trip formatting, so CSV output reloads bit-exactly.
pub fn encode_image_csv(img: &ImageMatrix) -> String {
    let mut s = String::new();
    for r in 0..img.rows() {
        let row: Vec<String> = (0..img.cols()).map(|c| format!("{:?}", img.get(r, c))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Reads an `RRM1` file, or CSV when the magic is absent.
pub fn read_image(path: &Path) -> Result<ImageMatrix> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.starts_with(RRM1_MAGIC) {
        decode_rrm1(&bytes)
    } else {
        parse_image_csv(bytes.as_slice())
    }
}

/// Writes `RRM1` unless the extension is `.csv`.
pub fn write_image(path: &Path, img: &ImageMatrix) -> Result<()> {
    let bytes = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        encode_image_csv(img).into_bytes()
    } else {
        encode_rrm1(img)
    };
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn encode_pgm(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.cols(), mask.rows()).into_bytes();
    out.extend(mask.bits().iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

/// Reads a binary PGM; nonzero pixels are set.
pub fn decode_pgm(bytes: &[u8]) -> Result<BinaryMask> {
    let bad = |m: &str| Error::Parse { line: 0, byte: 0, message: m.to_string() };
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(bad("truncated PGM header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..i]).map_err(|_| bad("bad PGM header"))?.to_string());
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let cols: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let rows: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    if fields[3] != "255" {
        return Err(bad("only maxval 255 is supported"));
    }
    let data = &bytes[i + 1..];
    if data.len() != rows * cols {
        return Err(bad("pixel data length does not match header"));
    }
    BinaryMask::from_bits(rows, cols, data.iter().map(|&v| v != 0).collect())
}

pub fn encode_mask_csv(mask: &BinaryMask) -> String {
    let mut s = String::new();
    for r in 0..mask.rows() {
        let row: Vec<&str> = (0..mask.cols()).map(|c| if mask.get(r, c) { "1" } else { "0" }).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(bytes).map_err(|e| io_err(path, e))
}
