//! Shade, multi-reference, part-specific and removal controls over
//! reconstructed pyramids, plus the facial part regions they act on.

use crate::engine::{self, Face, Reconstruction, Settings};
use crate::error::{Error, Result};
use crate::labels::{self, Part};
use crate::sac::lerp;
use crate::tensor::{majority_downsample, BinaryMask, FeatureMap, FeaturePyramid, LabelMask, PYRAMID_LEVELS};

/// Per-pixel part assignment: 0 = no makeup, otherwise a [`Part`] code.
/// Parts are disjoint by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMap {
    height: usize,
    width: usize,
    codes: Vec<u8>,
}

impl RegionMap {
    /// Lips from the lip labels; eyes as the dilated eye labels restricted to
    /// facial surface (skin, nose, brows), which drops the eyeballs; skin
    /// from skin and nose labels not already claimed by the eye ring.
    pub fn from_labels(mask: &LabelMask, eye_shadow_radius: u32) -> Self {
        let (h, w) = (mask.height(), mask.width());
        let ring = dilate(mask, labels::is_eye, eye_shadow_radius);
        let codes = mask
            .labels()
            .iter()
            .zip(&ring)
            .map(|(&l, &r)| {
                if labels::is_lip(l) {
                    Part::Lips.code()
                } else if r && labels::is_eye_shadow_surface(l) {
                    Part::Eyes.code()
                } else if labels::is_skin(l) {
                    Part::Skin.code()
                } else {
                    0
                }
            })
            .collect();
        Self {
            height: h,
            width: w,
            codes,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn part_at(&self, y: usize, x: usize) -> Option<Part> {
        Part::ALL
            .into_iter()
            .find(|p| p.code() == self.codes[y * self.width + x])
    }

    /// Binary mask of the union of `parts`.
    pub fn mask(&self, parts: &[Part]) -> BinaryMask {
        let codes: Vec<u8> = parts.iter().map(|p| p.code()).collect();
        let data = self.codes.iter().map(|c| codes.contains(c) as u8).collect();
        BinaryMask::new(self.height, self.width, data).expect("0/1 data of matching size")
    }

    /// Majority-voted copy at `1 / factor` resolution; ties go to "no part".
    pub fn downsample(&self, factor: usize) -> RegionMap {
        let (codes, h, w) = majority_downsample(&self.codes, self.height, self.width, factor, 4);
        RegionMap {
            height: h,
            width: w,
            codes,
        }
    }
}

/// Region maps for every pyramid level, each voted from full resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionPyramid {
    levels: Vec<RegionMap>,
}

impl RegionPyramid {
    pub fn new(full: &RegionMap) -> Self {
        Self {
            levels: (0..PYRAMID_LEVELS).map(|l| full.downsample(1 << l)).collect(),
        }
    }

    pub fn level(&self, l: usize) -> &RegionMap {
        &self.levels[l]
    }

    /// Per-level binary mask of the union of `parts`.
    pub fn masks(&self, parts: &[Part]) -> Vec<BinaryMask> {
        self.levels.iter().map(|r| r.mask(parts)).collect()
    }
}

/// Disk dilation of the pixels selected by `pick`.
fn dilate(mask: &LabelMask, pick: impl Fn(u8) -> bool, radius: u32) -> Vec<bool> {
    let (h, w) = (mask.height() as isize, mask.width() as isize);
    let r = radius as isize;
    let spans: Vec<(isize, isize)> = (-r..=r)
        .map(|dy| (dy, ((r * r - dy * dy) as f64).sqrt().floor() as isize))
        .collect();
    let mut out = vec![false; (h * w) as usize];
    for y in 0..h {
        for x in 0..w {
            if !pick(mask.get(y as usize, x as usize)) {
                continue;
            }
            for &(dy, half) in &spans {
                let yy = y + dy;
                if yy < 0 || yy >= h {
                    continue;
                }
                let (x0, x1) = ((x - half).max(0), (x + half).min(w - 1));
                let row = (yy * w) as usize;
                out[row + x0 as usize..=row + x1 as usize]
                    .iter_mut()
                    .for_each(|v| *v = true);
            }
        }
    }
    out
}

/// Binary transfer mask: union of the selected parts' regions.
pub fn build_transfer_mask(mask: &LabelMask, parts: &[Part], dilation_radius: u32) -> BinaryMask {
    RegionMap::from_labels(mask, dilation_radius).mask(parts)
}

/// Per level, `w * fxhat + (1 - w) * fx`.
pub fn shade_interpolate(fxhat: &FeaturePyramid, fx: &FeaturePyramid, w: f64) -> Result<FeaturePyramid> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Recipe(format!("shade {w} outside [0, 1]")));
    }
    fxhat.ensure_same_schedule(fx, "shade interpolation")?;
    fx.map_levels(|l, x| fxhat.level(l).zip_map(x, |p, s| lerp(p, s, w)))
}

pub(crate) fn check_weights(weights: &[f64], expected: usize) -> Result<()> {
    if weights.len() != expected {
        return Err(Error::Recipe(format!(
            "{} reference weights for {expected} references",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::Recipe("reference weights must be non-negative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Recipe(format!("reference weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Per level, `sum_k w_k * fxhat_k`. Results are clamped to the per-element
/// envelope of the inputs.
pub fn fuse_references(fxhats: &[&FeaturePyramid], weights: &[f64]) -> Result<FeaturePyramid> {
    let first = fxhats
        .first()
        .ok_or_else(|| Error::Recipe("fusion needs at least one reference".into()))?;
    check_weights(weights, fxhats.len())?;
    for other in &fxhats[1..] {
        first.ensure_same_schedule(other, "reference fusion")?;
    }
    first.map_levels(|l, base| {
        let n = base.data().len();
        let mut data = Vec::with_capacity(n);
        for idx in 0..n {
            let (mut acc, mut lo, mut hi) = (0f64, f32::INFINITY, f32::NEG_INFINITY);
            for (p, &w) in fxhats.iter().zip(weights) {
                let v = p.level(l).data()[idx];
                acc += w * v as f64;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            data.push((acc as f32).clamp(lo, hi));
        }
        FeatureMap::new(base.channels(), base.height(), base.width(), data)
    })
}

/// One part's mask pyramid and the reconstruction it draws from.
pub struct PartLayer<'a> {
    pub masks: &'a [BinaryMask],
    pub features: &'a FeaturePyramid,
}

/// Per level, `sum_p M_p * F_p + (1 - M_t) * F_x`. Part masks must be
/// pairwise disjoint and contained in `mt`.
pub fn assign_parts(layers: &[PartLayer<'_>], fx: &FeaturePyramid, mt: &[BinaryMask]) -> Result<FeaturePyramid> {
    if mt.len() != PYRAMID_LEVELS || layers.iter().any(|p| p.masks.len() != PYRAMID_LEVELS) {
        return Err(Error::shape("part and transfer masks need one mask per level"));
    }
    for layer in layers {
        layer.features.ensure_same_schedule(fx, "part assignment")?;
    }
    fx.map_levels(|l, x| {
        let (h, w) = (x.height(), x.width());
        let plane = h * w;
        let check = |m: &BinaryMask| {
            if (m.height(), m.width()) != (h, w) {
                Err(Error::shape(format!("level {l} mask size does not match features")))
            } else {
                Ok(())
            }
        };
        check(&mt[l])?;
        // which layer owns each pixel
        let mut owner: Vec<Option<usize>> = vec![None; plane];
        for (k, layer) in layers.iter().enumerate() {
            let m = &layer.masks[l];
            check(m)?;
            for (p, slot) in owner.iter_mut().enumerate() {
                if m.data()[p] == 0 {
                    continue;
                }
                if slot.is_some() {
                    return Err(Error::Recipe(format!(
                        "part masks overlap at level {l}, pixel ({}, {})",
                        p / w,
                        p % w
                    )));
                }
                if mt[l].data()[p] == 0 {
                    return Err(Error::Recipe(format!(
                        "part mask leaves the transfer mask at level {l}, pixel ({}, {})",
                        p / w,
                        p % w
                    )));
                }
                *slot = Some(k);
            }
        }
        let mt_data = mt[l].data();
        let data = (0..x.data().len())
            .map(|idx| {
                let p = idx % plane;
                match owner[p] {
                    Some(k) => layers[k].features.level(l).data()[idx],
                    None if mt_data[p] == 0 => x.data()[idx],
                    None => 0.0,
                }
            })
            .collect();
        Ok(FeatureMap::from_parts(x.channels(), h, w, data))
    })
}

/// Strips makeup from `makeup` by reconstructing it from the bare face's
/// patches. Same entry point and renderer path as a forward transfer.
pub fn makeup_removal(makeup: &Face, bare: &Face, settings: &Settings) -> Result<Reconstruction> {
    engine::reconstruct(makeup, bare, settings)
}
