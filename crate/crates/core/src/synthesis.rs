//! Pixels from reconstructed pyramids, and region-wise histogram matching.
//!
//! The renderer reads the colour channels of the finest level directly; the
//! built-in encoder guarantees they are the image itself. Inside the
//! transfer regions it can feather patch seams and re-express the source
//! pixels through the rendered colour distribution.

use serde::{Deserialize, Serialize};

use crate::control::RegionMap;
use crate::error::{Error, Result};
use crate::io::{pixel_to_unit, unit_to_pixel};
use crate::labels::{Part, DEFAULT_EYE_SHADOW_RADIUS};
use crate::tensor::{BinaryMask, FeatureMap, FeaturePyramid, LabelMask, Provenance};

const BINS: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Re-map source pixels in each transfer region onto the rendered
    /// region's colour histogram.
    pub hm_postprocess: bool,
    /// Half-width of the box filter across patch seams; 0 disables it.
    pub seam_feather_radius: u32,
    /// Restrict fine-level correspondence candidates to a window around the
    /// coarser level's match.
    pub coarse_guidance: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            hm_postprocess: true,
            seam_feather_radius: 3,
            coarse_guidance: true,
        }
    }
}

/// Source-side inputs the renderer needs for seams and histogram matching.
pub struct RenderContext<'a> {
    /// Source image, 3 channels in `[-1, 1]`.
    pub source: &'a FeatureMap,
    pub regions: &'a RegionMap,
    pub parts: &'a [Part],
    /// Finest-level patch size; seams lie on multiples of it.
    pub patch_size: usize,
    /// Per-pixel share of the rendering drawn from same-label reference
    /// pixels. Histogram targets use only pixels where it is at least 1/2.
    pub agreement: Option<&'a FeatureMap>,
}

/// Colour channels of the finest level, clamped to `[-1, 1]`, optionally
/// feathered at seams and histogram-matched inside the transfer regions.
pub fn render(pyr: &FeaturePyramid, cfg: &RenderConfig, ctx: Option<&RenderContext<'_>>) -> Result<FeatureMap> {
    match pyr.provenance() {
        Provenance::Builtin { .. } if pyr.level(0).channels() >= 3 => {}
        Provenance::Builtin { .. } => {
            return Err(Error::UnsupportedPyramid(format!(
                "finest level has {} channels, need RGB in channels 0..3",
                pyr.level(0).channels()
            )))
        }
        Provenance::Imported => {
            return Err(Error::UnsupportedPyramid(
                "imported features carry no colour channels; render from a built-in pyramid".into(),
            ))
        }
    }
    let rgb = pyr.level(0).select_channels(0, 3)?.clamp(-1.0, 1.0);
    let Some(ctx) = ctx else {
        return Ok(rgb);
    };
    rgb.ensure_same_shape(ctx.source, "render source")?;
    if let Some(a) = ctx.agreement {
        if (a.channels(), a.height(), a.width()) != (1, rgb.height(), rgb.width()) {
            return Err(Error::shape("agreement map must be one channel at image size"));
        }
    }
    if (ctx.regions.height(), ctx.regions.width()) != (rgb.height(), rgb.width()) {
        return Err(Error::shape("render regions do not match the image size"));
    }
    let mt = ctx.regions.mask(ctx.parts);
    let mut out = if cfg.seam_feather_radius > 0 && ctx.patch_size > 1 {
        feather_seams(&rgb, ctx.source, &mt, ctx.patch_size, cfg.seam_feather_radius as usize)
    } else {
        rgb
    };
    if cfg.hm_postprocess {
        let mut matched = out.clone();
        for &part in ctx.parts {
            let region = ctx.regions.mask(&[part]);
            let target = match ctx.agreement {
                Some(a) => BinaryMask::from_fn(region.height(), region.width(), |y, x| {
                    region.get(y, x) && a.get(0, y, x) >= 0.5
                }),
                None => region.clone(),
            };
            if region.is_empty() || target.is_empty() {
                continue;
            }
            let remapped = histogram_match_region(ctx.source, &out, &region, &target)?;
            copy_region(&mut matched, &remapped, &region);
        }
        out = matched;
    }
    Ok(out)
}

fn copy_region(dst: &mut FeatureMap, src: &FeatureMap, region: &BinaryMask) {
    let plane = dst.plane_len();
    let m = region.data();
    let s = src.data();
    for (idx, v) in dst.data_mut().iter_mut().enumerate() {
        if m[idx % plane] == 1 {
            *v = s[idx];
        }
    }
}

/// Box-filters the rendered-minus-source difference across patch seams,
/// only at seam-band pixels inside `mt`. Where the difference is zero the
/// output is untouched.
fn feather_seams(rgb: &FeatureMap, source: &FeatureMap, mt: &BinaryMask, k: usize, r: usize) -> FeatureMap {
    let (c, h, w) = rgb.dims();
    let diff: Vec<f32> = rgb.data().iter().zip(source.data()).map(|(a, b)| a - b).collect();
    let near_seam = |i: usize, n: usize| {
        let m = i % k;
        // distance to the seam on either side; image borders are not seams
        (m < r && i >= k) || (k - m <= r && i + (k - m) < n)
    };
    let mut pass = diff.clone();
    // vertical seams: horizontal averaging
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                if !near_seam(x, w) || !mt.get(y, x) {
                    continue;
                }
                let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
                let row = (ch * h + y) * w;
                let sum: f32 = diff[row + x0..=row + x1].iter().sum();
                pass[row + x] = sum / (x1 - x0 + 1) as f32;
            }
        }
    }
    let mut second = pass.clone();
    // horizontal seams: vertical averaging
    for ch in 0..c {
        for y in 0..h {
            if !near_seam(y, h) {
                continue;
            }
            let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
            for x in 0..w {
                if !mt.get(y, x) {
                    continue;
                }
                let sum: f32 = (y0..=y1).map(|yy| pass[(ch * h + yy) * w + x]).sum();
                second[(ch * h + y) * w + x] = sum / (y1 - y0 + 1) as f32;
            }
        }
    }
    let mut out = rgb.clone();
    let plane = h * w;
    let src = source.data();
    for (idx, v) in out.data_mut().iter_mut().enumerate() {
        if second[idx] != diff[idx] && mt.data()[idx % plane] == 1 {
            *v = (src[idx] + second[idx]).clamp(-1.0, 1.0);
        }
    }
    out
}

/// For each source bin, the smallest reference bin whose CDF reaches the
/// source CDF at the middle of that bin's mass. Exact integer comparison of
/// `cdf_ref / n_ref >= (cdf_src - count / 2) / n_src`.
pub fn cdf_match_map(src_hist: &[u64], ref_hist: &[u64]) -> Vec<usize> {
    let n_src: u64 = src_hist.iter().sum();
    let n_ref: u64 = ref_hist.iter().sum();
    let mut ref_cdf = Vec::with_capacity(ref_hist.len());
    let mut acc = 0u64;
    for &c in ref_hist {
        acc += c;
        ref_cdf.push(acc);
    }
    let mut map = Vec::with_capacity(src_hist.len());
    let (mut src_acc, mut u) = (0u64, 0usize);
    for &c in src_hist {
        src_acc += c;
        let mid = (2 * src_acc - c) as u128;
        while u + 1 < ref_cdf.len() && 2 * (ref_cdf[u] as u128) * (n_src as u128) < mid * (n_ref as u128) {
            u += 1;
        }
        map.push(u);
    }
    map
}

/// 8-bit bin of a value in `[-1, 1]`.
#[inline]
pub fn bin_of(v: f32) -> usize {
    unit_to_pixel(v) as usize
}

/// Per channel, remaps `src` pixels inside `src_region` so their histogram
/// follows the histogram of `reference` inside `ref_region`. Other pixels are
/// untouched. When the map is the identity on every occupied bin the
/// original values are kept exactly.
pub fn histogram_match_region(
    src: &FeatureMap,
    reference: &FeatureMap,
    src_region: &BinaryMask,
    ref_region: &BinaryMask,
) -> Result<FeatureMap> {
    if src.channels() != reference.channels() {
        return Err(Error::shape("histogram matching needs equal channel counts"));
    }
    for (m, f, name) in [(src_region, src, "source"), (ref_region, reference, "reference")] {
        if (m.height(), m.width()) != (f.height(), f.width()) {
            return Err(Error::shape(format!("{name} region size does not match its image")));
        }
        if m.is_empty() {
            return Err(Error::EmptyRegion(name.into()));
        }
    }
    let mut out = src.clone();
    let (sp, rp) = (src.plane_len(), reference.plane_len());
    for c in 0..src.channels() {
        let mut hs = [0u64; BINS];
        let mut hr = [0u64; BINS];
        for (p, &v) in src.channel(c).iter().enumerate() {
            if src_region.data()[p] == 1 {
                hs[bin_of(v)] += 1;
            }
        }
        for (p, &v) in reference.channel(c).iter().enumerate() {
            if ref_region.data()[p] == 1 {
                hr[bin_of(v)] += 1;
            }
        }
        let map = cdf_match_map(&hs, &hr);
        let identity = (0..BINS).all(|b| hs[b] == 0 || map[b] == b);
        if identity {
            continue;
        }
        let data = out.data_mut();
        for p in 0..sp {
            if src_region.data()[p] == 1 {
                let v = &mut data[c * sp + p];
                *v = pixel_to_unit(map[bin_of(*v)] as u8);
            }
        }
    }
    let _ = rp;
    Ok(out)
}

/// Histogram matching applied independently to the lips, eye-shadow and
/// skin regions, composited over `src`. Regions missing from either face are
/// skipped with a warning.
pub fn hm_composite(
    src: &FeatureMap,
    reference: &FeatureMap,
    src_mask: &LabelMask,
    ref_mask: &LabelMask,
) -> Result<FeatureMap> {
    hm_composite_with_radius(src, reference, src_mask, ref_mask, DEFAULT_EYE_SHADOW_RADIUS)
}

pub fn hm_composite_with_radius(
    src: &FeatureMap,
    reference: &FeatureMap,
    src_mask: &LabelMask,
    ref_mask: &LabelMask,
    eye_shadow_radius: u32,
) -> Result<FeatureMap> {
    let src_regions = RegionMap::from_labels(src_mask, eye_shadow_radius);
    let ref_regions = RegionMap::from_labels(ref_mask, eye_shadow_radius);
    let mut out = src.clone();
    for part in Part::ALL {
        let (sr, rr) = (src_regions.mask(&[part]), ref_regions.mask(&[part]));
        if sr.is_empty() || rr.is_empty() {
            log::warn!("histogram matching: {part} region missing, skipped");
            continue;
        }
        let matched = histogram_match_region(src, reference, &sr, &rr)?;
        copy_region(&mut out, &matched, &sr);
    }
    Ok(out)
}

/// Normalized 1-D earth mover's distance between two histograms over the
/// same bins: `sum |CDF_a - CDF_b| / bins`.
pub fn histogram_emd(a: &[u64], b: &[u64]) -> f64 {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let (mut ca, mut cb, mut total) = (0f64, 0f64, 0f64);
    for (x, y) in a.iter().zip(b) {
        ca += *x as f64 / na;
        cb += *y as f64 / nb;
        total += (ca - cb).abs();
    }
    total / a.len() as f64
}

/// 256-bin histogram of one channel inside a region.
pub fn region_histogram(map: &FeatureMap, channel: usize, region: &BinaryMask) -> Vec<u64> {
    let mut h = vec![0u64; BINS];
    for (p, &v) in map.channel(channel).iter().enumerate() {
        if region.data()[p] == 1 {
            h[bin_of(v)] += 1;
        }
    }
    h
}
