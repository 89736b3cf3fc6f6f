//! Brute-force reference implementations, written straight from the
//! formulas with plain loops and `f64` everywhere. Shared with the
//! acceptance suite of the CLI crate via `#[path]`.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spmt_core::sac::CorrespondenceMode;
use spmt_core::{FeatureMap, LabelMask};

pub type Grid = Vec<Vec<f64>>;

/// Face-parsing classes.
const LABELS: usize = 19;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// One correspondence problem at a single level.
pub struct Instance {
    pub src: FeatureMap,
    pub reference: FeatureMap,
    pub src_labels: LabelMask,
    pub ref_labels: LabelMask,
    pub k: usize,
}

pub fn random_map(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> FeatureMap {
    FeatureMap::new(c, h, w, (0..c * h * w).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).unwrap()
}

/// Blocky labels drawn from a small palette so that both same-part and
/// cross-part patch pairs occur, with some per-pixel noise.
pub fn random_labels(rng: &mut ChaCha8Rng, h: usize, w: usize, palette: &[u8]) -> LabelMask {
    let block = [2usize, 4, 8][rng.gen_range(0..3)];
    let bh = h.div_ceil(block);
    let bw = w.div_ceil(block);
    let blocks: Vec<u8> = (0..bh * bw).map(|_| palette[rng.gen_range(0..palette.len())]).collect();
    let labels = (0..h * w)
        .map(|i| {
            let (y, x) = (i / w, i % w);
            if rng.gen_bool(0.05) {
                palette[rng.gen_range(0..palette.len())]
            } else {
                blocks[(y / block) * bw + x / block]
            }
        })
        .collect();
    LabelMask::new(h, w, labels).unwrap()
}

pub fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> Instance {
    let c = rng.gen_range(1..=8);
    let sizes: Vec<usize> = [4usize, 8, 16, 32].into_iter().filter(|&s| s >= k).collect();
    let (hx, wx) = (sizes[rng.gen_range(0..sizes.len())], sizes[rng.gen_range(0..sizes.len())]);
    let (hy, wy) = (sizes[rng.gen_range(0..sizes.len())], sizes[rng.gen_range(0..sizes.len())]);
    let palette = [1u8, 12, 4, 17];
    Instance {
        src: random_map(rng, c, hx, wx),
        reference: random_map(rng, c, hy, wy),
        src_labels: random_labels(rng, hx, wx, &palette),
        ref_labels: random_labels(rng, hy, wy, &palette),
        k,
    }
}

/// Patch `i` of a `k x k` tiling as a flat vector (channel, row, column).
pub fn patch(map: &FeatureMap, k: usize, i: usize) -> Vec<f64> {
    let gw = map.width() / k;
    let (gy, gx) = (i / gw, i % gw);
    let mut v = Vec::new();
    for c in 0..map.channels() {
        for dy in 0..k {
            for dx in 0..k {
                v.push(map.get(c, gy * k + dy, gx * k + dx) as f64);
            }
        }
    }
    v
}

pub fn n_patches(h: usize, w: usize, k: usize) -> usize {
    (h / k) * (w / k)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn ncc(x: &FeatureMap, y: &FeatureMap, k: usize, eps: f64) -> Grid {
    let nx = n_patches(x.height(), x.width(), k);
    let ny = n_patches(y.height(), y.width(), k);
    let mut out = vec![vec![0.0; ny]; nx];
    for (i, row) in out.iter_mut().enumerate() {
        let a = patch(x, k, i);
        for (j, slot) in row.iter_mut().enumerate() {
            let b = patch(y, k, j);
            let mut dot = 0.0;
            for t in 0..a.len() {
                dot += a[t] * b[t];
            }
            *slot = dot / (norm(&a).max(eps) * norm(&b).max(eps));
        }
    }
    out
}

/// One-hot patch of a label mask, `LABELS x k x k`.
fn one_hot_patch(m: &LabelMask, k: usize, i: usize) -> Vec<f64> {
    let gw = m.width() / k;
    let (gy, gx) = (i / gw, i % gw);
    let mut v = Vec::new();
    for c in 0..LABELS {
        for dy in 0..k {
            for dx in 0..k {
                v.push((m.get(gy * k + dy, gx * k + dx) as usize == c) as u8 as f64);
            }
        }
    }
    v
}

pub fn sem_ncc(x: &LabelMask, y: &LabelMask, k: usize, eps: f64) -> Grid {
    let nx = n_patches(x.height(), x.width(), k);
    let ny = n_patches(y.height(), y.width(), k);
    let mut out = vec![vec![0.0; ny]; nx];
    for (i, row) in out.iter_mut().enumerate() {
        let a = one_hot_patch(x, k, i);
        for (j, slot) in row.iter_mut().enumerate() {
            let b = one_hot_patch(y, k, j);
            let dot: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
            *slot = dot / (norm(&a).max(eps) * norm(&b).max(eps));
        }
    }
    out
}

/// Weight rows and per-row matched flags.
pub fn weights(ncc: &Grid, sem: &Grid, mode: CorrespondenceMode, beta: f64, threshold: f64) -> (Grid, Vec<bool>) {
    let mut rows = Vec::new();
    let mut matched = Vec::new();
    for (n_row, s_row) in ncc.iter().zip(sem) {
        let m = n_row.len();
        let mut w = vec![0.0; m];
        let admissible: Vec<bool> = (0..m)
            .map(|j| mode != CorrespondenceMode::SemanticSoft || s_row[j] >= threshold)
            .collect();
        let any = admissible.iter().any(|&a| a);
        if any {
            match mode {
                CorrespondenceMode::Nearest => {
                    let mut best: Option<usize> = None;
                    for j in 0..m {
                        if admissible[j] && best.is_none_or(|b| n_row[j] > n_row[b]) {
                            best = Some(j);
                        }
                    }
                    w[best.unwrap()] = 1.0;
                }
                _ => {
                    // plain exp is safe for |beta * ncc| <= ~700
                    let mut z = 0.0;
                    for j in 0..m {
                        if admissible[j] {
                            z += (beta * n_row[j]).exp();
                        }
                    }
                    for j in 0..m {
                        if admissible[j] {
                            w[j] = (beta * n_row[j]).exp() / z;
                        }
                    }
                    if mode == CorrespondenceMode::SemanticLiteral {
                        for j in 0..m {
                            w[j] *= s_row[j];
                        }
                    }
                }
            }
        }
        let ok = any && w.iter().any(|&v| v > 0.0);
        rows.push(w);
        matched.push(ok);
    }
    (rows, matched)
}

/// Semantic-gated argmax: the limit of the gated softmax as beta grows.
pub fn gated_argmax(ncc: &Grid, sem: &Grid, threshold: f64) -> (Grid, Vec<bool>) {
    let mut rows = Vec::new();
    let mut matched = Vec::new();
    for (n_row, s_row) in ncc.iter().zip(sem) {
        let mut w = vec![0.0; n_row.len()];
        let best = (0..n_row.len())
            .filter(|&j| s_row[j] >= threshold)
            .fold(None, |b: Option<usize>, j| match b {
                Some(b) if n_row[b] >= n_row[j] => Some(b),
                _ => Some(j),
            });
        if let Some(b) = best {
            w[b] = 1.0;
        }
        matched.push(best.is_some());
        rows.push(w);
    }
    (rows, matched)
}

/// Rebuilt source map: weighted reference patches, source patches where
/// unmatched, zeros outside the patch grid. Returned as `[c][y][x]`.
pub fn reconstruct(w: &Grid, matched: &[bool], x: &FeatureMap, y: &FeatureMap, k: usize) -> Vec<f64> {
    let (c, h, wd) = (x.channels(), x.height(), x.width());
    let mut out = vec![0.0; c * h * wd];
    let gw = wd / k;
    for i in 0..n_patches(h, wd, k) {
        let (gy, gx) = (i / gw, i % gw);
        let value: Vec<f64> = if matched[i] {
            let mut acc = vec![0.0; c * k * k];
            for (j, &wij) in w[i].iter().enumerate() {
                let p = patch(y, k, j);
                for t in 0..acc.len() {
                    acc[t] += wij * p[t];
                }
            }
            acc
        } else {
            patch(x, k, i)
        };
        let mut t = 0;
        for ch in 0..c {
            for dy in 0..k {
                for dx in 0..k {
                    out[(ch * h + gy * k + dy) * wd + gx * k + dx] = value[t];
                    t += 1;
                }
            }
        }
    }
    out
}

/// Majority label of each `f x f` block, ties to the smallest label.
pub fn majority_labels(m: &LabelMask, f: usize) -> LabelMask {
    let (h, w) = (m.height().div_ceil(f), m.width().div_ceil(f));
    let mut labels = Vec::new();
    for by in 0..h {
        for bx in 0..w {
            let mut counts = [0usize; 256];
            for y in by * f..((by + 1) * f).min(m.height()) {
                for x in bx * f..((bx + 1) * f).min(m.width()) {
                    counts[m.get(y, x) as usize] += 1;
                }
            }
            let best = (0..256).max_by_key(|&l| (counts[l], usize::MAX - l)).unwrap();
            labels.push(best as u8);
        }
    }
    LabelMask::new(h, w, labels).unwrap()
}

/// Smallest reference bin whose CDF fraction reaches the source CDF
/// fraction, found by a linear scan per source bin.
pub fn cdf_map(src: &[u64], reference: &[u64]) -> Vec<usize> {
    let ns: u64 = src.iter().sum();
    let nr: u64 = reference.iter().sum();
    (0..src.len())
        .map(|b| {
            let fs = (src[..b].iter().sum::<u64>() as f64 + src[b] as f64 / 2.0) / ns as f64;
            (0..reference.len())
                .find(|&u| reference[..=u].iter().sum::<u64>() as f64 / nr as f64 >= fs - 1e-12)
                .unwrap_or(reference.len() - 1)
        })
        .collect()
}

/// SSIM with two-pass window statistics over BT.601 luma.
pub fn ssim(a: &FeatureMap, b: &FeatureMap) -> f64 {
    let luma = |m: &FeatureMap, y: usize, x: usize| {
        0.299 * m.get(0, y, x) as f64 + 0.587 * m.get(1, y, x) as f64 + 0.114 * m.get(2, y, x) as f64
    };
    let (h, w, win) = (a.height(), a.width(), 8usize);
    let (c1, c2) = ((0.01f64 * 2.0).powi(2), (0.03f64 * 2.0).powi(2));
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - win {
        for x0 in 0..=w - win {
            let mut pa = Vec::new();
            let mut pb = Vec::new();
            for y in y0..y0 + win {
                for x in x0..x0 + win {
                    pa.push(luma(a, y, x));
                    pb.push(luma(b, y, x));
                }
            }
            let n = pa.len() as f64;
            let ma = pa.iter().sum::<f64>() / n;
            let mb = pb.iter().sum::<f64>() / n;
            let va = pa.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / n;
            let vb = pb.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / n;
            let cov = pa.iter().zip(&pb).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / n;
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

/// Normalized 1-D earth mover's distance between two histograms.
pub fn emd(a: &[u64], b: &[u64]) -> f64 {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut d = 0.0;
    for t in 0..a.len() {
        let ca = a[..=t].iter().sum::<u64>() as f64 / na;
        let cb = b[..=t].iter().sum::<u64>() as f64 / nb;
        d += (ca - cb).abs();
    }
    d / a.len() as f64
}

/// Max elementwise absolute difference.
pub fn max_abs_diff(a: &[f64], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, &y)| (x - y as f64).abs()).fold(0.0, f64::max)
}
