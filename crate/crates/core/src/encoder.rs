//! Feature pyramids for correspondence: a classical built-in encoder, or
//! activations computed elsewhere and imported as SPT files.
//!
//! The built-in encoder keeps raw RGB in level-0 channels 0..3, followed by
//! optional per-color Sobel gradient magnitudes. Coarser levels are a 5x5
//! binomial blur (reflect padding) followed by 2x decimation of the level
//! above, with the same channel layout.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io;
use crate::tensor::{FeatureMap, FeaturePyramid, Provenance, PYRAMID_LEVELS};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncoderConfig {
    Builtin { gradient_channels: bool },
    /// One SPT file per level, finest first.
    External { paths: Vec<PathBuf> },
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::Builtin {
            gradient_channels: true,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            EncoderConfig::External { paths } if paths.len() != PYRAMID_LEVELS => {
                Err(Error::Config(format!(
                    "external encoder needs exactly {PYRAMID_LEVELS} files, got {}",
                    paths.len()
                )))
            }
            _ => Ok(()),
        }
    }
}

const BINOMIAL5: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Mirror index into `0..n` without repeating the edge sample.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

fn sobel_magnitude(plane: &[f32], h: usize, w: usize) -> Vec<f32> {
    let at = |y: isize, x: isize| plane[reflect(y, h) * w + reflect(x, w)];
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            let gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            out.push((gx * gx + gy * gy).sqrt() / 8.0);
        }
    }
    out
}

/// Separable binomial blur of one plane followed by keeping even rows/cols.
fn blur_decimate(plane: &[f32], h: usize, w: usize) -> (Vec<f32>, usize, usize) {
    let mut horiz = vec![0f32; h * w];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (t, k) in BINOMIAL5.iter().enumerate() {
                acc += k * row[reflect(x as isize + t as isize - 2, w)];
            }
            horiz[y * w + x] = acc;
        }
    }
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = Vec::with_capacity(oh * ow);
    for oy in 0..oh {
        let y = 2 * oy;
        for ox in 0..ow {
            let x = 2 * ox;
            let mut acc = 0.0;
            for (t, k) in BINOMIAL5.iter().enumerate() {
                acc += k * horiz[reflect(y as isize + t as isize - 2, h) * w + x];
            }
            out.push(acc);
        }
    }
    (out, oh, ow)
}

/// Blurs and halves every channel of a map.
pub fn pyramid_down(map: &FeatureMap) -> FeatureMap {
    let (c, h, w) = map.dims();
    let mut data = Vec::new();
    let (mut oh, mut ow) = (0, 0);
    for ch in 0..c {
        let (plane, ph, pw) = blur_decimate(map.channel(ch), h, w);
        oh = ph;
        ow = pw;
        data.extend(plane);
    }
    FeatureMap::from_parts(c, oh, ow, data)
}

/// Builds the four-level pyramid of a 3-channel image in `[-1, 1]`.
pub fn encode_builtin(image: &FeatureMap, gradient_channels: bool) -> Result<FeaturePyramid> {
    if image.channels() != 3 {
        return Err(Error::shape(format!(
            "built-in encoder expects a 3-channel image, got {} channels",
            image.channels()
        )));
    }
    let (h, w) = (image.height(), image.width());
    let base = if gradient_channels {
        let mut data = image.data().to_vec();
        for c in 0..3 {
            data.extend(sobel_magnitude(image.channel(c), h, w));
        }
        FeatureMap::from_parts(6, h, w, data)
    } else {
        image.clone()
    };
    let mut levels = Vec::with_capacity(PYRAMID_LEVELS);
    levels.push(base);
    for l in 1..PYRAMID_LEVELS {
        let next = pyramid_down(&levels[l - 1]);
        levels.push(next);
    }
    FeaturePyramid::new(
        levels,
        Provenance::Builtin {
            gradients: gradient_channels,
        },
    )
}

/// Loads four SPT files, finest first, and checks the 1, 1/2, 1/4, 1/8 schedule.
pub fn import_pyramid(paths: &[PathBuf]) -> Result<FeaturePyramid> {
    EncoderConfig::External {
        paths: paths.to_vec(),
    }
    .validate()?;
    let levels = paths
        .iter()
        .map(io::load_tensor)
        .collect::<Result<Vec<_>>>()?;
    FeaturePyramid::new(levels, Provenance::Imported)
}

/// Writes `level0.spt` .. `level3.spt` into `dir` and returns their paths.
pub fn export_pyramid(pyr: &FeaturePyramid, dir: &Path) -> Result<Vec<PathBuf>> {
    pyr.levels()
        .iter()
        .enumerate()
        .map(|(l, map)| {
            let path = dir.join(format!("level{l}.spt"));
            io::save_tensor(map, &path)?;
            Ok(path)
        })
        .collect()
}

/// Encodes an image with a built-in config, or imports the configured files.
pub fn encode(image: &FeatureMap, cfg: &EncoderConfig) -> Result<FeaturePyramid> {
    cfg.validate()?;
    match cfg {
        EncoderConfig::Builtin { gradient_channels } => encode_builtin(image, *gradient_channels),
        EncoderConfig::External { paths } => import_pyramid(paths),
    }
}
