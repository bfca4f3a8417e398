//! PGM (portable graymap) import and export, binary `P5` and ASCII `P2`.
//!
//! Occupancy maps use the usual map-server encoding: 0 occupied, 254 free,
//! 205 unknown. Plain binary masks are written 0 occupied, 255 empty.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, Cell, GrayImage, OccupancyGrid};

pub const OCCUPIED: u8 = 0;
pub const FREE: u8 = 254;
pub const UNKNOWN: u8 = 205;
pub const EMPTY: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmFormat {
    /// `P5`, raw bytes.
    #[default]
    Binary,
    /// `P2`, whitespace-separated decimal values.
    Ascii,
}

pub fn encode(img: &GrayImage, format: PgmFormat) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    match format {
        PgmFormat::Binary => {
            let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
            out.extend_from_slice(img.pixels());
            out
        }
        PgmFormat::Ascii => {
            let mut out = format!("P2\n{w} {h}\n255\n");
            for row in img.pixels().chunks(w.max(1)) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'2' | b'5') {
        return Err(Error::Pgm("missing P2/P5 magic number".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (k, field) in fields.iter_mut().enumerate() {
        // Whitespace and comments between header tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Pgm(format!("header field {} is not a number", k + 1)));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Pgm("header value out of range".into()))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Pgm("header not terminated by whitespace".into()));
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Pgm(format!("unsupported maxval {maxval}")));
    }
    Ok(Header {
        magic: [bytes[0], bytes[1]],
        width,
        height,
        maxval,
        data_start: pos + 1,
    })
}

pub fn decode(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    let n = h.width * h.height;
    let pixels = if h.magic[1] == b'5' {
        let data = &bytes[h.data_start..];
        if data.len() < n {
            return Err(Error::Pgm(format!("expected {n} pixels, found {}", data.len())));
        }
        data[..n].to_vec()
    } else {
        let text = std::str::from_utf8(&bytes[h.data_start..])
            .map_err(|_| Error::Pgm("ASCII raster is not UTF-8".into()))?;
        let mut pixels = Vec::with_capacity(n);
        for tok in text.split_ascii_whitespace().take(n) {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::Pgm(format!("bad pixel value `{tok}`")))?;
            if v > h.maxval {
                return Err(Error::Pgm(format!("pixel {v} exceeds maxval {}", h.maxval)));
            }
            pixels.push(v as u8);
        }
        if pixels.len() < n {
            return Err(Error::Pgm(format!("expected {n} pixels, found {}", pixels.len())));
        }
        pixels
    };
    GrayImage::new(h.width, h.height, pixels)
}

pub fn read(path: impl AsRef<std::path::Path>) -> Result<GrayImage> {
    decode(&std::fs::read(path)?)
}

pub fn write(path: impl AsRef<std::path::Path>, img: &GrayImage, format: PgmFormat) -> Result<()> {
    std::fs::write(path, encode(img, format))?;
    Ok(())
}

pub fn mask_to_gray(mask: &BinaryMask) -> GrayImage {
    mask.to_gray(OCCUPIED, EMPTY)
}

/// Dark pixels (below mid-gray) are occupied.
pub fn mask_from_gray(img: &GrayImage) -> BinaryMask {
    BinaryMask::from_fn(img.width(), img.height(), |x, y| img.get(x, y) < 128)
}

pub fn grid_to_gray(grid: &OccupancyGrid) -> GrayImage {
    let pixels = grid
        .cells()
        .iter()
        .map(|c| match c {
            Cell::Occupied => OCCUPIED,
            Cell::Free => FREE,
            Cell::Unknown => UNKNOWN,
        })
        .collect();
    GrayImage::new(grid.width(), grid.height(), pixels).expect("grid dimensions are consistent")
}

/// Classifies each pixel; the canonical values map back exactly.
pub fn grid_from_gray(img: &GrayImage) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(img.width(), img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let c = match img.get(x, y) {
                v if v < 100 => Cell::Occupied,
                v if v > 230 => Cell::Free,
                _ => Cell::Unknown,
            };
            g.set(x, y, c);
        }
    }
    g
}
