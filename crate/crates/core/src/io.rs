//! PNG and SPT tensor file I/O.
//!
//! SPT layout: bytes 0..4 magic `SPT1`, byte 4 dtype code (`0x01` = f32 LE),
//! byte 5 rank, then `rank` little-endian `u32` dims, then the payload in
//! channel-major, row-major order.

use std::io::Cursor;
use std::path::Path;

use image::imageops::{self, FilterType};
use image::{ColorType, DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::tensor::{FeatureMap, LabelMask};

/// Working resolution every image and mask is brought to on load.
pub const WORKING_SIZE: u32 = 256;

const SPT_MAGIC: &[u8; 4] = b"SPT1";
const SPT_F32_LE: u8 = 0x01;

#[inline]
pub fn pixel_to_unit(p: u8) -> f32 {
    2.0 * (p as f32 / 255.0) - 1.0
}

#[inline]
pub fn unit_to_pixel(v: f32) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn decode_png(bytes: &[u8], origin: &Path) -> Result<DynamicImage> {
    image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| Error::Decode {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })
}

/// Decodes an 8-bit RGB PNG into a 3-channel map in `[-1, 1]`, resized
/// bilinearly to 256x256 when needed.
pub fn decode_image(bytes: &[u8], origin: &Path) -> Result<FeatureMap> {
    let img = decode_png(bytes, origin)?;
    if img.color() != ColorType::Rgb8 {
        return Err(Error::ColorType {
            path: origin.to_path_buf(),
            expected: "RGB",
            found: format!("{:?}", img.color()),
        });
    }
    let mut rgb = img.into_rgb8();
    if rgb.dimensions() != (WORKING_SIZE, WORKING_SIZE) {
        rgb = imageops::resize(&rgb, WORKING_SIZE, WORKING_SIZE, FilterType::Triangle);
    }
    Ok(rgb_to_map(&rgb))
}

pub fn load_image(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let path = path.as_ref();
    decode_image(&read_file(path)?, path)
}

pub fn rgb_to_map(rgb: &RgbImage) -> FeatureMap {
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let plane = w * h;
    let mut data = vec![0f32; 3 * plane];
    for (i, px) in rgb.pixels().enumerate() {
        for c in 0..3 {
            data[c * plane + i] = pixel_to_unit(px[c]);
        }
    }
    FeatureMap::from_parts(3, h, w, data)
}

pub fn map_to_rgb(map: &FeatureMap) -> Result<RgbImage> {
    if map.channels() != 3 {
        return Err(Error::shape(format!(
            "image output needs 3 channels, got {}",
            map.channels()
        )));
    }
    let (h, w) = (map.height(), map.width());
    let plane = h * w;
    let d = map.data();
    let mut buf = Vec::with_capacity(3 * plane);
    for i in 0..plane {
        for c in 0..3 {
            buf.push(unit_to_pixel(d[c * plane + i]));
        }
    }
    Ok(RgbImage::from_raw(w as u32, h as u32, buf).expect("buffer sized from dims"))
}

/// Clamps to `[-1, 1]` and encodes as an 8-bit RGB PNG.
pub fn encode_image(map: &FeatureMap) -> Result<Vec<u8>> {
    let rgb = map_to_rgb(map)?;
    let mut out = Cursor::new(Vec::new());
    rgb.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Decode {
            path: "<memory>".into(),
            message: e.to_string(),
        })?;
    Ok(out.into_inner())
}

pub fn save_image(map: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(map)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Decodes a single-channel 8-bit label PNG, nearest-neighbor resized to
/// 256x256 when needed.
pub fn decode_label_mask(bytes: &[u8], origin: &Path) -> Result<LabelMask> {
    let img = decode_png(bytes, origin)?;
    if img.color() != ColorType::L8 {
        return Err(Error::ColorType {
            path: origin.to_path_buf(),
            expected: "grayscale",
            found: format!("{:?}", img.color()),
        });
    }
    let mut gray = img.into_luma8();
    if gray.dimensions() != (WORKING_SIZE, WORKING_SIZE) {
        gray = imageops::resize(&gray, WORKING_SIZE, WORKING_SIZE, FilterType::Nearest);
    }
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    LabelMask::new(h, w, gray.into_raw())
}

pub fn load_label_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    let path = path.as_ref();
    decode_label_mask(&read_file(path)?, path)
}

pub fn encode_label_mask(mask: &LabelMask) -> Vec<u8> {
    let gray = GrayImage::from_raw(
        mask.width() as u32,
        mask.height() as u32,
        mask.labels().to_vec(),
    )
    .expect("buffer sized from dims");
    let mut out = Cursor::new(Vec::new());
    gray.write_to(&mut out, ImageFormat::Png)
        .expect("in-memory PNG encoding cannot fail");
    out.into_inner()
}

pub fn save_label_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_label_mask(mask)).map_err(|e| Error::io(path, e))
}

pub fn encode_tensor(map: &FeatureMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(6 + 12 + 4 * map.data().len());
    out.extend_from_slice(SPT_MAGIC);
    out.push(SPT_F32_LE);
    out.push(3);
    for d in [map.channels(), map.height(), map.width()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in map.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses an SPT container. Rank 2 is read as a single-channel map.
pub fn decode_tensor(bytes: &[u8]) -> Result<FeatureMap> {
    if bytes.len() < 6 {
        return Err(Error::Truncated {
            expected: 6,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if &magic != SPT_MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    if bytes[4] != SPT_F32_LE {
        return Err(Error::DtypeMismatch(bytes[4]));
    }
    let ndim = bytes[5];
    if !(2..=3).contains(&ndim) {
        return Err(Error::BadRank(ndim));
    }
    let header = 6 + 4 * ndim as usize;
    if bytes.len() < header {
        return Err(Error::Truncated {
            expected: header,
            found: bytes.len(),
        });
    }
    let dims: Vec<usize> = bytes[6..header]
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
        .collect();
    let (c, h, w) = match dims[..] {
        [h, w] => (1, h, w),
        [c, h, w] => (c, h, w),
        _ => unreachable!(),
    };
    let count = c
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::shape("tensor dims overflow"))?;
    let expected = header + 4 * count;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingBytes(bytes.len() - expected));
    }
    let data = bytes[header..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    FeatureMap::new(c, h, w, data)
}

pub fn save_tensor(map: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_tensor(map)).map_err(|e| Error::io(path, e))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let path = path.as_ref();
    decode_tensor(&read_file(path)?)
}
