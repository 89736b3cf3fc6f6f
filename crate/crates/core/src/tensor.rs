//! Dense feature maps, face-parsing masks, and their four-level pyramids.
//!
//! Levels are indexed from 0 in code: level 0 is full resolution, level 3 is
//! 1/8 scale. Level `l` of a pyramid whose base is `h x w` has spatial size
//! `ceil(h / 2^l) x ceil(w / 2^l)`.

use crate::error::{Error, Result};

/// Number of pyramid levels (scales 1, 1/2, 1/4, 1/8).
pub const PYRAMID_LEVELS: usize = 4;

/// Number of face-parsing classes (CelebAMask-HQ convention).
pub const NUM_LABELS: usize = 19;

/// Spatial size of pyramid level `level` for a base dimension.
pub fn level_dim(base: usize, level: usize) -> usize {
    base.div_ceil(1 << level)
}

/// A `channels x height x width` grid of `f32`, channel-major and row-major
/// within each channel. All values are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::shape(format!(
                "feature map dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::shape(format!(
                "feature map {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    /// Builds a map without the finiteness scan. Callers guarantee the shape
    /// and that every value derives from finite inputs.
    pub(crate) fn from_parts(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), channels * height * width);
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        assert!(channels > 0 && height > 0 && width > 0, "empty feature map");
        Self::from_parts(channels, height, width, vec![0.0; channels * height * width])
    }

    /// Fills a map from `f(channel, row, col)`.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    /// Copies channels `start..end` into a new map.
    pub fn select_channels(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.channels {
            return Err(Error::shape(format!(
                "channel range {start}..{end} out of bounds for {} channels",
                self.channels
            )));
        }
        let n = self.plane_len();
        Ok(Self::from_parts(
            end - start,
            self.height,
            self.width,
            self.data[start * n..end * n].to_vec(),
        ))
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn ensure_same_shape(&self, other: &FeatureMap, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "{what}: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )))
        }
    }

    /// Elementwise combination of two equally shaped maps.
    pub fn zip_map(&self, other: &FeatureMap, f: impl Fn(f32, f32) -> f32) -> Result<Self> {
        self.ensure_same_shape(other, "elementwise combination")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        FeatureMap::new(self.channels, self.height, self.width, data)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        FeatureMap::new(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn clamp(&self, lo: f32, hi: f32) -> Self {
        Self::from_parts(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|v| v.clamp(lo, hi)).collect(),
        )
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }
}

/// Where a pyramid's features came from. Only built-in pyramids carry raw
/// color in level-0 channels 0..3, which the renderer relies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Builtin { gradients: bool },
    Imported,
}

/// Four feature maps at scales 1, 1/2, 1/4 and 1/8 of the base size.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePyramid {
    levels: Vec<FeatureMap>,
    base_height: usize,
    base_width: usize,
    provenance: Provenance,
}

impl FeaturePyramid {
    pub fn new(levels: Vec<FeatureMap>, provenance: Provenance) -> Result<Self> {
        if levels.len() != PYRAMID_LEVELS {
            return Err(Error::shape(format!(
                "pyramid needs {PYRAMID_LEVELS} levels, got {}",
                levels.len()
            )));
        }
        let base_height = levels[0].height();
        let base_width = levels[0].width();
        for (level, map) in levels.iter().enumerate() {
            let (eh, ew) = (level_dim(base_height, level), level_dim(base_width, level));
            if map.height() != eh || map.width() != ew {
                return Err(Error::Schedule {
                    level,
                    expected_h: eh,
                    expected_w: ew,
                    found_h: map.height(),
                    found_w: map.width(),
                });
            }
        }
        Ok(Self {
            levels,
            base_height,
            base_width,
            provenance,
        })
    }

    pub fn levels(&self) -> &[FeatureMap] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &FeatureMap {
        &self.levels[l]
    }

    pub fn into_levels(self) -> Vec<FeatureMap> {
        self.levels
    }

    pub fn base_height(&self) -> usize {
        self.base_height
    }

    pub fn base_width(&self) -> usize {
        self.base_width
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// True when both pyramids have identical per-level shapes.
    pub fn same_schedule(&self, other: &FeaturePyramid) -> bool {
        self.levels
            .iter()
            .zip(&other.levels)
            .all(|(a, b)| a.same_shape(b))
    }

    pub(crate) fn ensure_same_schedule(&self, other: &FeaturePyramid, what: &str) -> Result<()> {
        if self.same_schedule(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "{what}: pyramid level shapes differ ({:?} vs {:?})",
                self.levels.iter().map(FeatureMap::dims).collect::<Vec<_>>(),
                other.levels.iter().map(FeatureMap::dims).collect::<Vec<_>>()
            )))
        }
    }

    /// Applies `f` per level, keeping this pyramid's provenance.
    pub fn map_levels(
        &self,
        mut f: impl FnMut(usize, &FeatureMap) -> Result<FeatureMap>,
    ) -> Result<FeaturePyramid> {
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(l, m)| f(l, m))
            .collect::<Result<Vec<_>>>()?;
        FeaturePyramid::new(levels, self.provenance)
    }
}

/// Per-pixel face-parsing labels in `0..=18`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMask {
    height: usize,
    width: usize,
    labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(height: usize, width: usize, labels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || labels.len() != height * width {
            return Err(Error::shape(format!(
                "label mask {height}x{width} needs {} labels, got {}",
                height * width,
                labels.len()
            )));
        }
        if let Some(idx) = labels.iter().position(|&v| v as usize >= NUM_LABELS) {
            return Err(Error::InvalidLabel {
                value: labels[idx],
                row: idx / width,
                col: idx % width,
            });
        }
        Ok(Self {
            height,
            width,
            labels,
        })
    }

    pub fn uniform(height: usize, width: usize, label: u8) -> Result<Self> {
        Self::new(height, width, vec![label; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.labels[y * self.width + x]
    }
}

/// One binary plane per semantic class; exactly one plane is set per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneHotMask {
    sem_channels: usize,
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl OneHotMask {
    /// Validates that `data` is strictly one-hot along the channel axis.
    pub fn new(sem_channels: usize, height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if sem_channels == 0 || data.len() != sem_channels * height * width {
            return Err(Error::shape("one-hot mask data length mismatch"));
        }
        let plane = height * width;
        for p in 0..plane {
            let mut set = 0usize;
            for c in 0..sem_channels {
                match data[c * plane + p] {
                    0 => {}
                    1 => set += 1,
                    v => {
                        return Err(Error::shape(format!(
                            "one-hot mask value {v} at pixel {p}, expected 0 or 1"
                        )))
                    }
                }
            }
            if set != 1 {
                return Err(Error::shape(format!(
                    "pixel {p} has {set} active semantic channels, expected exactly 1"
                )));
            }
        }
        Ok(Self {
            sem_channels,
            height,
            width,
            data,
        })
    }

    pub fn sem_channels(&self) -> usize {
        self.sem_channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> u8 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// The active channel at every pixel.
    pub fn class_indices(&self) -> Vec<u8> {
        let plane = self.height * self.width;
        let mut out = vec![0u8; plane];
        for c in 0..self.sem_channels {
            for (p, slot) in out.iter_mut().enumerate() {
                if self.data[c * plane + p] == 1 {
                    *slot = c as u8;
                }
            }
        }
        out
    }

    fn from_indices(sem_channels: usize, height: usize, width: usize, idx: &[u8]) -> Self {
        let plane = height * width;
        let mut data = vec![0u8; sem_channels * plane];
        for (p, &c) in idx.iter().enumerate() {
            data[c as usize * plane + p] = 1;
        }
        Self {
            sem_channels,
            height,
            width,
            data,
        }
    }
}

/// Expands a label mask into its 19-channel one-hot form.
pub fn one_hot(mask: &LabelMask) -> OneHotMask {
    OneHotMask::from_indices(NUM_LABELS, mask.height, mask.width, &mask.labels)
}

/// Majority vote over `factor x factor` blocks of a class-index grid. Blocks
/// clipped by the border vote over their in-bounds pixels; ties go to the
/// smallest class id.
pub(crate) fn majority_downsample(
    classes: &[u8],
    height: usize,
    width: usize,
    factor: usize,
    n_classes: usize,
) -> (Vec<u8>, usize, usize) {
    if factor == 1 {
        return (classes.to_vec(), height, width);
    }
    let (oh, ow) = (height.div_ceil(factor), width.div_ceil(factor));
    let mut out = Vec::with_capacity(oh * ow);
    let mut counts = vec![0u32; n_classes];
    for by in 0..oh {
        for bx in 0..ow {
            counts.iter_mut().for_each(|c| *c = 0);
            for y in by * factor..((by + 1) * factor).min(height) {
                for x in bx * factor..((bx + 1) * factor).min(width) {
                    counts[classes[y * width + x] as usize] += 1;
                }
            }
            let mut best = 0usize;
            for (c, &n) in counts.iter().enumerate() {
                if n > counts[best] {
                    best = c;
                }
            }
            out.push(best as u8);
        }
    }
    (out, oh, ow)
}

/// Majority-vote downsampling of a one-hot mask by a power-of-two factor in
/// `{1, 2, 4, 8}`. The result stays strictly one-hot.
pub fn downsample_mask(mask: &OneHotMask, factor: usize) -> Result<OneHotMask> {
    if !matches!(factor, 1 | 2 | 4 | 8) {
        return Err(Error::Config(format!(
            "mask downsampling factor must be 1, 2, 4 or 8, got {factor}"
        )));
    }
    let idx = mask.class_indices();
    let (out, oh, ow) = majority_downsample(
        &idx,
        mask.height,
        mask.width,
        factor,
        mask.sem_channels,
    );
    Ok(OneHotMask::from_indices(mask.sem_channels, oh, ow, &out))
}

/// Per-level one-hot masks matching the feature pyramid schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskPyramid {
    levels: Vec<OneHotMask>,
}

impl MaskPyramid {
    /// Each level is voted directly from full resolution, not from the level above.
    pub fn from_labels(mask: &LabelMask) -> Self {
        let full = one_hot(mask);
        let levels = (0..PYRAMID_LEVELS)
            .map(|l| downsample_mask(&full, 1 << l).expect("factor is a power of two <= 8"))
            .collect();
        Self { levels }
    }

    pub fn new(levels: Vec<OneHotMask>) -> Result<Self> {
        if levels.len() != PYRAMID_LEVELS {
            return Err(Error::shape(format!(
                "mask pyramid needs {PYRAMID_LEVELS} levels, got {}",
                levels.len()
            )));
        }
        Ok(Self { levels })
    }

    pub fn level(&self, l: usize) -> &OneHotMask {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[OneHotMask] {
        &self.levels
    }
}

/// A single-channel 0/1 mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape("binary mask data length mismatch"));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::shape("binary mask values must be 0 or 1"));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        Self {
            height,
            width,
            data: vec![value as u8; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x) as u8);
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x] == 1
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Majority vote per block; ties resolve to 0.
    pub fn downsample(&self, factor: usize) -> BinaryMask {
        let (data, h, w) = majority_downsample(&self.data, self.height, self.width, factor, 2);
        BinaryMask {
            height: h,
            width: w,
            data,
        }
    }

    /// One mask per pyramid level.
    pub fn pyramid(&self) -> Vec<BinaryMask> {
        (0..PYRAMID_LEVELS).map(|l| self.downsample(1 << l)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_sets_exactly_one_channel() {
        let mask = LabelMask::new(2, 2, vec![1, 0, 18, 5]).unwrap();
        let oh = one_hot(&mask);
        assert_eq!(oh.get(1, 0, 0), 1);
        for c in 0..NUM_LABELS {
            if c != 1 {
                assert_eq!(oh.get(c, 0, 0), 0);
            }
            let sum: u8 = (0..2)
                .flat_map(|y| (0..2).map(move |x| (y, x)))
                .map(|(y, x)| oh.get(c, y, x))
                .sum();
            let expected = mask.labels().iter().filter(|&&l| l as usize == c).count();
            assert_eq!(sum as usize, expected);
        }
        for y in 0..2 {
            for x in 0..2 {
                let s: u32 = (0..NUM_LABELS).map(|c| oh.get(c, y, x) as u32).sum();
                assert_eq!(s, 1);
            }
        }
    }

    #[test]
    fn uniform_label_fills_its_channel() {
        let oh = one_hot(&LabelMask::uniform(3, 4, 7).unwrap());
        assert!((0..3).all(|y| (0..4).all(|x| oh.get(7, y, x) == 1)));
    }

    #[test]
    fn invalid_label_is_rejected_with_position() {
        match LabelMask::new(2, 3, vec![0, 0, 0, 0, 19, 0]) {
            Err(Error::InvalidLabel { value, row, col }) => {
                assert_eq!((value, row, col), (19, 1, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn majority_vote_breaks_ties_toward_smallest_label() {
        let m = one_hot(&LabelMask::new(2, 2, vec![1, 1, 2, 3]).unwrap());
        let d = downsample_mask(&m, 2).unwrap();
        assert_eq!(d.class_indices(), vec![1]);

        let tie = one_hot(&LabelMask::new(2, 2, vec![4, 2, 2, 4]).unwrap());
        assert_eq!(downsample_mask(&tie, 2).unwrap().class_indices(), vec![2]);
    }

    #[test]
    fn factor_one_is_identity_and_bad_factor_errors() {
        let m = one_hot(&LabelMask::new(2, 2, vec![1, 12, 12, 1]).unwrap());
        assert_eq!(downsample_mask(&m, 1).unwrap(), m);
        assert!(downsample_mask(&m, 3).is_err());
    }

    #[test]
    fn mask_pyramid_follows_ceil_schedule() {
        let m = LabelMask::uniform(10, 7, 1).unwrap();
        let p = MaskPyramid::from_labels(&m);
        let dims: Vec<_> = p.levels().iter().map(|l| (l.height(), l.width())).collect();
        assert_eq!(dims, vec![(10, 7), (5, 4), (3, 2), (2, 1)]);
    }

    #[test]
    fn pyramid_rejects_schedule_violation() {
        let levels = vec![
            FeatureMap::zeros(1, 8, 8),
            FeatureMap::zeros(1, 4, 4),
            FeatureMap::zeros(1, 3, 2),
            FeatureMap::zeros(1, 1, 1),
        ];
        match FeaturePyramid::new(levels, Provenance::Imported) {
            Err(Error::Schedule { level, .. }) => assert_eq!(level, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn feature_map_rejects_non_finite() {
        assert!(matches!(
            FeatureMap::new(1, 1, 2, vec![0.0, f32::NAN]),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn binary_downsample_ties_to_zero() {
        let m = BinaryMask::new(2, 2, vec![1, 0, 0, 1]).unwrap();
        assert_eq!(m.downsample(2).data(), &[0]);
        let m = BinaryMask::new(2, 2, vec![1, 1, 0, 1]).unwrap();
        assert_eq!(m.downsample(2).data(), &[1]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn downsampling_keeps_one_hot_and_uniformity(
                h in 1usize..20, w in 1usize..20, label in 0u8..19,
                seed in proptest::collection::vec(0u8..19, 400),
                fi in 0usize..4,
            ) {
                let factor = 1 << fi;
                let labels: Vec<u8> = seed.iter().cycle().take(h * w).copied().collect();
                let m = one_hot(&LabelMask::new(h, w, labels).unwrap());
                let d = downsample_mask(&m, factor).unwrap();
                // revalidating through the checked constructor asserts the one-hot invariant
                prop_assert!(OneHotMask::new(d.sem_channels(), d.height(), d.width(), d.data().to_vec()).is_ok());

                let u = one_hot(&LabelMask::uniform(h, w, label).unwrap());
                let du = downsample_mask(&u, factor).unwrap();
                prop_assert!(du.class_indices().iter().all(|&c| c == label));
            }
        }
    }
}
