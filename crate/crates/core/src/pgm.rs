//! Minimal binary PGM (P5) reader and writer, plus min–max intensity renders
//! with a JSON sidecar recording the scale. Rasters with `maxval > 255` use
//! two big-endian bytes per sample.
//!
//! Image row 0 corresponds to grid row `j = 0` (most negative `y`).

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RealField;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl GrayImage {
    /// 8-bit image with `maxval = 255`.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        Self::with_maxval(
            width,
            height,
            255,
            pixels.into_iter().map(u16::from).collect(),
        )
        .expect("8-bit samples fit")
    }

    pub fn with_maxval(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::PgmFormat(format!(
                "{} samples for a {width}x{height} image",
                pixels.len()
            )));
        }
        if maxval == 0 || pixels.iter().any(|&p| p > maxval) {
            return Err(Error::PgmFormat(format!("samples exceed maxval {maxval}")));
        }
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    pub fn get(&self, col: usize, row: usize) -> u16 {
        self.pixels[row * self.width + col]
    }
}

pub fn write_pgm(img: &GrayImage, mut w: impl Write) -> Result<()> {
    write!(w, "P5\n{} {}\n{}\n", img.width, img.height, img.maxval)?;
    let raster: Vec<u8> = if img.maxval > 255 {
        img.pixels.iter().flat_map(|p| p.to_be_bytes()).collect()
    } else {
        img.pixels.iter().map(|&p| p as u8).collect()
    };
    w.write_all(&raster)?;
    Ok(())
}

/// Parses a P5 image. Comments (`#` to end of line) are allowed between
/// header tokens.
pub fn read_pgm(mut r: impl Read) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0;
    let magic = next_token(&bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::PgmFormat("missing P5 magic".into()));
    }
    let width = parse_num(next_token(&bytes, &mut pos)?)?;
    let height = parse_num(next_token(&bytes, &mut pos)?)?;
    let maxval = parse_num(next_token(&bytes, &mut pos)?)?;
    if width == 0 || height == 0 {
        return Err(Error::PgmFormat("zero-sized image".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::PgmFormat(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::PgmFormat("truncated header".into()));
    }
    pos += 1;
    let raster = &bytes[pos..];
    let depth = if maxval > 255 { 2 } else { 1 };
    if raster.len() != width * height * depth {
        return Err(Error::PgmFormat(format!(
            "expected {} raster bytes, found {}",
            width * height * depth,
            raster.len()
        )));
    }
    let pixels = if depth == 2 {
        raster
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect()
    } else {
        raster.iter().map(|&b| u16::from(b)).collect()
    };
    GrayImage::with_maxval(width, height, maxval as u16, pixels)
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::PgmFormat("truncated header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_num(tok: &[u8]) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::PgmFormat(format!("bad header number {:?}", tok)))
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::with_capacity(img.pixels.len() + 32);
    write_pgm(img, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    read_pgm(std::fs::File::open(path)?)
}

/// Linear scale used to map a real map onto 0..=255.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderScale {
    pub min: f64,
    pub max: f64,
}

/// Min–max scales `map` to 8 bits. A constant map renders as all zeros.
pub fn render(map: &RealField) -> (GrayImage, RenderScale) {
    let (min, max) = map.min_max();
    let span = max - min;
    let pixels = map
        .data()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                (255.0 * (v - min) / span).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    let g = map.grid();
    (
        GrayImage::new(g.nx(), g.ny(), pixels),
        RenderScale { min, max },
    )
}

/// Sidecar path for a render: `name.pgm` → `name.pgm.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `path` (PGM) and its scale sidecar.
pub fn save_render(map: &RealField, path: impl AsRef<Path>) -> Result<RenderScale> {
    let path = path.as_ref();
    let (img, scale) = render(map);
    save_pgm(&img, path)?;
    let json = serde_json::to_string_pretty(&scale).expect("scale serializes");
    std::fs::write(sidecar_path(path), json + "\n")?;
    Ok(scale)
}
