//! Semantic-aware patch correspondence.
//!
//! Per pyramid level: tile source and reference features into `k x k`
//! patches, score every pair with NCC on features and on one-hot parsing
//! masks, turn the scores into weight rows, rebuild the source tiling from
//! weighted reference patches, restore non-transfer regions from the source,
//! and finally mix a level-specific share of the source back in.

mod correspond;
mod ncc;
mod patches;

use serde::{Deserialize, Serialize};

pub use correspond::{correspond, reconstruct, CorrespondenceField, CorrespondenceMode};
pub use ncc::{ncc_matrix, sem_ncc_matrix, Matrix};
pub use patches::{extract_mask_patches, extract_patches, MaskPatches, PatchGrid};

use crate::error::{Error, Result};
use crate::tensor::{BinaryMask, FeatureMap, FeaturePyramid, MaskPyramid, OneHotMask, PYRAMID_LEVELS};

/// Correspondence parameters. Arrays are indexed by pyramid level, finest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SacConfig {
    pub patch_sizes: [usize; PYRAMID_LEVELS],
    /// Softmax temperature applied to NCC scores.
    pub temperature: f64,
    pub alphas: [f64; PYRAMID_LEVELS],
    pub epsilon: f64,
    pub mode: CorrespondenceMode,
    /// Minimum semantic NCC for a reference patch to stay a candidate.
    pub semantic_gate_threshold: f64,
    /// When set, candidates at each finer level are restricted to reference
    /// patches whose centre lies within this many base-resolution pixels
    /// (per axis) of the coarser level's best match.
    pub guidance_radius: Option<u32>,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            patch_sizes: [8, 4, 2, 1],
            temperature: 100.0,
            alphas: [1.0, 0.4, 0.2, 0.1],
            epsilon: 1e-8,
            mode: CorrespondenceMode::SemanticSoft,
            semantic_gate_threshold: 0.5,
            guidance_radius: None,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_sizes.contains(&0) {
            return Err(Error::Config("patch sizes must be positive".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Config(format!("alpha {a} outside [0, 1]")));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be positive and finite, got {}",
                self.temperature
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.semantic_gate_threshold) {
            return Err(Error::Config(format!(
                "semantic gate threshold {} outside [0, 1]",
                self.semantic_gate_threshold
            )));
        }
        Ok(())
    }
}

/// `w * a + (1 - w) * b`, clamped to the interval spanned by `a` and `b` so
/// rounding never leaves it.
#[inline]
pub(crate) fn lerp(a: f32, b: f32, w: f64) -> f32 {
    let v = (w * a as f64 + (1.0 - w) * b as f64) as f32;
    v.clamp(a.min(b), a.max(b))
}

/// `mt * fp + (1 - mt) * fx`, with the single-channel mask broadcast over channels.
pub fn apply_transfer_mask(fp: &FeatureMap, fx: &FeatureMap, mt: &BinaryMask) -> Result<FeatureMap> {
    fp.ensure_same_shape(fx, "transfer mask operands")?;
    if (mt.height(), mt.width()) != (fx.height(), fx.width()) {
        return Err(Error::shape(format!(
            "transfer mask {}x{} vs features {}x{}",
            mt.height(),
            mt.width(),
            fx.height(),
            fx.width()
        )));
    }
    let plane = fx.plane_len();
    let m = mt.data();
    let data = fp
        .data()
        .iter()
        .zip(fx.data())
        .enumerate()
        .map(|(idx, (&p, &x))| if m[idx % plane] == 1 { p } else { x })
        .collect();
    Ok(FeatureMap::from_parts(fx.channels(), fx.height(), fx.width(), data))
}

/// `alpha * fp + (1 - alpha) * fx`.
pub fn alpha_blend(fp: &FeatureMap, fx: &FeatureMap, alpha: f64) -> Result<FeatureMap> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    fp.zip_map(fx, |p, x| lerp(p, x, alpha))
}

/// Correspondence fields for every level, optionally coarse-to-fine guided.
pub fn compute_fields(
    src: &FeaturePyramid,
    reference: &FeaturePyramid,
    src_masks: &MaskPyramid,
    ref_masks: &MaskPyramid,
    cfg: &SacConfig,
) -> Result<Vec<CorrespondenceField>> {
    cfg.validate()?;
    let mut fields: Vec<Option<CorrespondenceField>> = vec![None; PYRAMID_LEVELS];
    let mut coarser: Option<(PatchGrid, PatchGrid)> = None;
    for l in (0..PYRAMID_LEVELS).rev() {
        let k = cfg.patch_sizes[l];
        let px = extract_patches(src.level(l), k)?;
        let py = extract_patches(reference.level(l), k)?;
        let mx = extract_mask_patches(src_masks.level(l), k)?;
        let my = extract_mask_patches(ref_masks.level(l), k)?;
        if !mx.matches_grid(&px) || !my.matches_grid(&py) {
            return Err(Error::shape(format!(
                "level {l}: mask patch grid does not match the feature grid"
            )));
        }
        let ncc = ncc_matrix(&px, &py, cfg.epsilon)?;
        let sem = sem_ncc_matrix(&mx, &my, cfg.epsilon)?;
        let field = match (cfg.guidance_radius, &coarser) {
            (Some(radius), Some((cx, cy))) => {
                let coarse_field = fields[l + 1].as_ref().expect("coarser level computed first");
                let guide = Guide::new(coarse_field, cx, cy, l + 1, &px, &py, l, radius);
                correspond::correspond_windowed(&ncc, &sem, cfg, Some(&|i, j| guide.allows(i, j)))?
            }
            _ => correspond(&ncc, &sem, cfg)?,
        };
        fields[l] = Some(field);
        coarser = Some((px, py));
    }
    Ok(fields.into_iter().map(|f| f.expect("all levels filled")).collect())
}

/// Rebuilds `src` from `reference` patches with precomputed fields, then
/// applies the transfer mask and the per-level alpha mix. The fields may come
/// from different features than the ones being rebuilt, as long as the patch
/// grids agree.
pub fn apply_fields(
    fields: &[CorrespondenceField],
    src: &FeaturePyramid,
    reference: &FeaturePyramid,
    mt: &[BinaryMask],
    cfg: &SacConfig,
) -> Result<FeaturePyramid> {
    cfg.validate()?;
    if fields.len() != PYRAMID_LEVELS || mt.len() != PYRAMID_LEVELS {
        return Err(Error::shape(format!(
            "expected {PYRAMID_LEVELS} fields and masks, got {} and {}",
            fields.len(),
            mt.len()
        )));
    }
    src.map_levels(|l, fx| {
        let k = cfg.patch_sizes[l];
        let px = extract_patches(fx, k)?;
        let py = extract_patches(reference.level(l), k)?;
        let patches = correspond::reconstruct_patches(&fields[l], &py, &px)?;
        let fp = px.stitch(&patches, fx)?;
        let fp = apply_transfer_mask(&fp, fx, &mt[l])?;
        alpha_blend(&fp, fx, cfg.alphas[l])
    })
}

/// Full correspondence pipeline. Returns the blended pyramid and the
/// per-level fields, finest first.
pub fn sac_full(
    src: &FeaturePyramid,
    reference: &FeaturePyramid,
    src_masks: &MaskPyramid,
    ref_masks: &MaskPyramid,
    mt: &[BinaryMask],
    cfg: &SacConfig,
) -> Result<(FeaturePyramid, Vec<CorrespondenceField>)> {
    let fields = compute_fields(src, reference, src_masks, ref_masks, cfg)?;
    let out = apply_fields(&fields, src, reference, mt, cfg)?;
    Ok((out, fields))
}

/// Per pixel of the source mask, the share of correspondence weight drawn
/// from reference pixels with the same label. Unmatched patches and pixels
/// outside the patch grid draw nothing from the reference and count as 0.
pub fn label_agreement(
    field: &CorrespondenceField,
    src_mask: &OneHotMask,
    ref_mask: &OneHotMask,
    k: usize,
) -> Result<FeatureMap> {
    let mx = extract_mask_patches(src_mask, k)?;
    let my = extract_mask_patches(ref_mask, k)?;
    if field.n_source() != mx.len() || field.n_reference() != my.len() {
        return Err(Error::shape("field does not match the mask grids"));
    }
    let (h, w) = (src_mask.height(), src_mask.width());
    let mut data = vec![0f32; h * w];
    for i in 0..mx.len() {
        if !field.is_matched(i) {
            continue;
        }
        let (gy, gx) = (i / mx.grid_w(), i % mx.grid_w());
        let labels = mx.patch(i);
        let mut acc = vec![0f64; k * k];
        for (j, &wij) in field.row(i).iter().enumerate() {
            if wij == 0.0 {
                continue;
            }
            for ((a, &l), &r) in acc.iter_mut().zip(labels).zip(my.patch(j)) {
                if l == r {
                    *a += wij as f64;
                }
            }
        }
        for dy in 0..k {
            for dx in 0..k {
                data[(gy * k + dy) * w + gx * k + dx] = (acc[dy * k + dx] as f32).min(1.0);
            }
        }
    }
    FeatureMap::new(1, h, w, data)
}

/// Restricts fine-level candidates to a window around the coarse match.
struct Guide {
    /// Best coarse reference centre (base pixels) per fine source patch.
    anchors: Vec<Option<(f64, f64)>>,
    ref_centres: Vec<(f64, f64)>,
    radius: f64,
}

fn centre(grid: &PatchGrid, i: usize, level: usize) -> (f64, f64) {
    let (gy, gx) = grid.position(i);
    let scale = (grid.patch_size() << level) as f64;
    ((gy as f64 + 0.5) * scale, (gx as f64 + 0.5) * scale)
}

impl Guide {
    #[allow(clippy::too_many_arguments)]
    fn new(
        coarse: &CorrespondenceField,
        coarse_src: &PatchGrid,
        coarse_ref: &PatchGrid,
        coarse_level: usize,
        fine_src: &PatchGrid,
        fine_ref: &PatchGrid,
        fine_level: usize,
        radius: u32,
    ) -> Self {
        let cell = (coarse_src.patch_size() << coarse_level) as f64;
        let anchors = (0..fine_src.len())
            .map(|i| {
                let (cy, cx) = centre(fine_src, i, fine_level);
                let gy = ((cy / cell) as usize).min(coarse_src.grid_h().saturating_sub(1));
                let gx = ((cx / cell) as usize).min(coarse_src.grid_w().saturating_sub(1));
                coarse
                    .best_match(gy * coarse_src.grid_w() + gx)
                    .map(|j| centre(coarse_ref, j, coarse_level))
            })
            .collect();
        let ref_centres = (0..fine_ref.len())
            .map(|j| centre(fine_ref, j, fine_level))
            .collect();
        Self {
            anchors,
            ref_centres,
            radius: radius as f64,
        }
    }

    fn allows(&self, i: usize, j: usize) -> bool {
        match self.anchors[i] {
            None => true,
            Some((ay, ax)) => {
                let (ry, rx) = self.ref_centres[j];
                (ry - ay).abs() <= self.radius && (rx - ax).abs() <= self.radius
            }
        }
    }
}
