//! Loss formulas reused as evaluation distances, and SSIM.
//!
//! Every norm is divided by its element count (RMS or mean absolute value),
//! so numbers do not scale with resolution or channel count. Multiply a
//! reported RMS by `sqrt(elements)` to recover the raw L2 norm.

use serde::{Deserialize, Serialize};

use crate::encoder::encode_builtin;
use crate::error::{Error, Result};
use crate::synthesis::hm_composite_with_radius;
use crate::tensor::{BinaryMask, FeatureMap, FeaturePyramid, LabelMask, Provenance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Kept for completeness; no adversarial term is computed.
    pub adversarial: f64,
    pub makeup: f64,
    pub cosmetic: f64,
    pub style: f64,
    pub content: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            adversarial: 1.0,
            makeup: 1.0,
            cosmetic: 5.0,
            style: 10.0,
            content: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub content: f64,
    pub cosmetic: f64,
    pub style: f64,
    pub makeup: f64,
    pub total: f64,
    pub ssim: f64,
    pub weights: LossWeights,
}

impl MetricReport {
    pub fn weighted_total(weights: &LossWeights, makeup: f64, cosmetic: f64, style: f64, content: f64) -> f64 {
        weights.makeup * makeup + weights.cosmetic * cosmetic + weights.style * style + weights.content * content
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_image_pair(a: &FeatureMap, b: &FeatureMap, what: &str) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::shape(format!("{what}: {:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// RMS of `(out - src) * (1 - mt)` over all elements.
pub fn content_distance(out: &FeatureMap, src: &FeatureMap, mt: &BinaryMask) -> Result<f64> {
    check_image_pair(out, src, "content distance")?;
    if (mt.height(), mt.width()) != (out.height(), out.width()) {
        return Err(Error::shape("content distance: mask size differs from the images"));
    }
    let plane = out.plane_len();
    let m = mt.data();
    let sum: f64 = out
        .data()
        .iter()
        .zip(src.data())
        .enumerate()
        .filter(|(idx, _)| m[idx % plane] == 0)
        .map(|(_, (&o, &s))| {
            let d = o as f64 - s as f64;
            d * d
        })
        .sum();
    Ok((sum / out.data().len() as f64).sqrt())
}

fn rms_diff(a: &FeatureMap, b: &FeatureMap) -> f64 {
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    (sum / a.data().len() as f64).sqrt()
}

fn builtin_gradients(pyr: &FeaturePyramid, what: &str) -> Result<bool> {
    match pyr.provenance() {
        Provenance::Builtin { gradients } => Ok(gradients),
        Provenance::Imported => Err(Error::UnsupportedPyramid(format!(
            "{what} needs a built-in pyramid to re-encode the output with the same encoder"
        ))),
    }
}

/// Sum over levels of the RMS difference between the re-encoded output and
/// the target pyramid.
pub fn cosmetic_perceptual_distance(out: &FeatureMap, fxhat: &FeaturePyramid) -> Result<f64> {
    let gradients = builtin_gradients(fxhat, "cosmetic distance")?;
    cosmetic_of_encoded(&encode_builtin(out, gradients)?, fxhat)
}

fn cosmetic_of_encoded(phi: &FeaturePyramid, fxhat: &FeaturePyramid) -> Result<f64> {
    phi.ensure_same_schedule(fxhat, "cosmetic distance")?;
    Ok(phi.levels().iter().zip(fxhat.levels()).map(|(a, b)| rms_diff(a, b)).sum())
}

/// Per-channel mean and population standard deviation.
fn channel_stats(map: &FeatureMap) -> Vec<(f64, f64)> {
    (0..map.channels())
        .map(|c| {
            let v = map.channel(c);
            let n = v.len() as f64;
            let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n;
            let var = v.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect()
}

/// Per-level style term: `(|mu_a - mu_b| + |sigma_a - sigma_b|) / sqrt(C)`.
pub fn style_level_terms(a: &FeatureMap, b: &FeatureMap) -> (f64, f64) {
    let (sa, sb) = (channel_stats(a), channel_stats(b));
    let norm = (a.channels() as f64).sqrt();
    let dm = sa.iter().zip(&sb).map(|(x, y)| (x.0 - y.0).powi(2)).sum::<f64>().sqrt();
    let ds = sa.iter().zip(&sb).map(|(x, y)| (x.1 - y.1).powi(2)).sum::<f64>().sqrt();
    (dm / norm, ds / norm)
}

/// Sum over levels of the channel-normalized distance between feature means
/// and standard deviations.
pub fn style_distance(out: &FeatureMap, reference: &FeatureMap, gradient_channels: bool) -> Result<f64> {
    let a = encode_builtin(out, gradient_channels)?;
    let b = encode_builtin(reference, gradient_channels)?;
    style_of_encoded(&a, &b)
}

fn style_of_encoded(a: &FeaturePyramid, b: &FeaturePyramid) -> Result<f64> {
    a.ensure_same_schedule(b, "style distance")?;
    Ok(a.levels()
        .iter()
        .zip(b.levels())
        .map(|(x, y)| {
            let (m, s) = style_level_terms(x, y);
            m + s
        })
        .sum())
}

/// Mean absolute difference between `out` and the region-wise histogram
/// match of `src` onto `reference`.
pub fn makeup_distance(
    out: &FeatureMap,
    src: &FeatureMap,
    reference: &FeatureMap,
    src_mask: &LabelMask,
    ref_mask: &LabelMask,
    eye_shadow_radius: u32,
) -> Result<f64> {
    check_image_pair(out, src, "makeup distance")?;
    let target = hm_composite_with_radius(src, reference, src_mask, ref_mask, eye_shadow_radius)?;
    let sum: f64 = out
        .data()
        .iter()
        .zip(target.data())
        .map(|(&o, &t)| (o as f64 - t as f64).abs())
        .sum();
    Ok(sum / out.data().len() as f64)
}

pub const SSIM_WINDOW: usize = 8;
/// Dynamic range of `[-1, 1]` images.
pub const SSIM_RANGE: f64 = 2.0;

/// BT.601 luma of a 3-channel image.
pub fn luma(map: &FeatureMap) -> Vec<f64> {
    let (r, g, b) = (map.channel(0), map.channel(1), map.channel(2));
    (0..map.plane_len())
        .map(|p| 0.299 * r[p] as f64 + 0.587 * g[p] as f64 + 0.114 * b[p] as f64)
        .collect()
}

/// Summed-area table with a zero first row and column.
fn integral(v: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut s = vec![0f64; (h + 1) * (w + 1)];
    for y in 0..h {
        let mut row = 0f64;
        for x in 0..w {
            row += v[y * w + x];
            s[(y + 1) * (w + 1) + x + 1] = s[y * (w + 1) + x + 1] + row;
        }
    }
    s
}

/// Mean SSIM of the luma over all 8x8 windows at stride 1.
pub fn ssim(a: &FeatureMap, b: &FeatureMap) -> Result<f64> {
    check_image_pair(a, b, "ssim")?;
    if a.channels() != 3 {
        return Err(Error::shape("ssim needs 3-channel images"));
    }
    let (h, w) = (a.height(), a.width());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::shape(format!("ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}")));
    }
    let (la, lb) = (luma(a), luma(b));
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let cross: Vec<f64> = la.iter().zip(&lb).map(|(x, y)| x * y).collect();
    let (ia, ib) = (integral(&la, h, w), integral(&lb, h, w));
    let (iaa, ibb, iab) = (integral(&sq(&la), h, w), integral(&sq(&lb), h, w), integral(&cross, h, w));
    let c1 = (0.01 * SSIM_RANGE).powi(2);
    let c2 = (0.03 * SSIM_RANGE).powi(2);
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let stride = w + 1;
    let window_sum = |s: &[f64], y: usize, x: usize| {
        let (y1, x1) = (y + SSIM_WINDOW, x + SSIM_WINDOW);
        s[y1 * stride + x1] - s[y * stride + x1] - s[y1 * stride + x] + s[y * stride + x]
    };
    let mut total = 0f64;
    for y in 0..=h - SSIM_WINDOW {
        for x in 0..=w - SSIM_WINDOW {
            let ma = window_sum(&ia, y, x) / n;
            let mb = window_sum(&ib, y, x) / n;
            let va = window_sum(&iaa, y, x) / n - ma * ma;
            let vb = window_sum(&ibb, y, x) / n - mb * mb;
            let cov = window_sum(&iab, y, x) / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    Ok(total / ((h - SSIM_WINDOW + 1) * (w - SSIM_WINDOW + 1)) as f64)
}

/// Everything [`evaluate`] needs.
pub struct EvalInputs<'a> {
    pub out: &'a FeatureMap,
    pub src: &'a FeatureMap,
    pub reference: &'a FeatureMap,
    pub src_mask: &'a LabelMask,
    pub ref_mask: &'a LabelMask,
    pub transfer_mask: &'a BinaryMask,
    /// Target pyramid the output was rendered from.
    pub fxhat: &'a FeaturePyramid,
    /// Built-in encoding of `reference`, if already at hand. Ignored unless
    /// its encoder options match `fxhat`.
    pub reference_features: Option<&'a FeaturePyramid>,
    pub eye_shadow_radius: u32,
}

pub fn evaluate(inputs: &EvalInputs<'_>) -> Result<MetricReport> {
    let weights = LossWeights::default();
    let gradients = builtin_gradients(inputs.fxhat, "evaluation")?;
    let content = content_distance(inputs.out, inputs.src, inputs.transfer_mask)?;
    let phi = encode_builtin(inputs.out, gradients)?;
    let cosmetic = cosmetic_of_encoded(&phi, inputs.fxhat)?;
    let encoded_ref;
    let ref_features = match inputs.reference_features {
        Some(p) if p.provenance() == inputs.fxhat.provenance() => p,
        _ => {
            encoded_ref = encode_builtin(inputs.reference, gradients)?;
            &encoded_ref
        }
    };
    let style = style_of_encoded(&phi, ref_features)?;
    let makeup = makeup_distance(
        inputs.out,
        inputs.src,
        inputs.reference,
        inputs.src_mask,
        inputs.ref_mask,
        inputs.eye_shadow_radius,
    )?;
    let ssim = ssim(inputs.out, inputs.src)?;
    Ok(MetricReport {
        content,
        cosmetic,
        style,
        makeup,
        total: MetricReport::weighted_total(&weights, makeup, cosmetic, style, content),
        ssim,
        weights,
    })
}
