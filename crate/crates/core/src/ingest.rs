//! Raw series handling: normalization, autocorrelation-based lag selection
//! and all-phase downsampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, real-valued series with at least two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    samples: Vec<f64>,
    sample_rate_hz: Option<f64>,
}

impl RawSeries {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::SeriesTooShort { need: 2, got: samples.len() });
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { samples, sample_rate_hz: None })
    }

    pub fn with_sample_rate(mut self, hz: f64) -> Result<Self> {
        if !(hz > 0.0 && hz.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample rate {hz} must be positive")));
        }
        self.sample_rate_hz = Some(hz);
        Ok(self)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> Option<f64> {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Population (divide-by-N) mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Subtracts the mean and divides by the population standard deviation.
pub fn normalize(series: &RawSeries) -> Result<RawSeries> {
    let (mean, std) = mean_std(&series.samples);
    if !(std > 0.0) || series.samples.iter().all(|&x| x == series.samples[0]) {
        return Err(Error::ZeroVariance);
    }
    let samples = series.samples.iter().map(|x| (x - mean) / std).collect();
    Ok(RawSeries { samples, sample_rate_hz: series.sample_rate_hz })
}

/// Default search horizon for the autocorrelation: `min(1000, N/4)`, at least 1.
pub fn default_max_lag(len: usize) -> usize {
    (len / 4).clamp(1, 1000)
}

/// Biased, normalized autocorrelation `r[0..=max_lag]` with `r[0] = 1`.
pub fn autocorrelation(series: &RawSeries, max_lag: usize) -> Result<Vec<f64>> {
    let x = &series.samples;
    let n = x.len();
    if max_lag == 0 || max_lag >= n {
        return Err(Error::LagTooLarge { max_lag, len: n });
    }
    let (mean, _) = mean_std(x);
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    acf.push(1.0);
    for k in 1..=max_lag {
        let ck: f64 = centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum();
        acf.push(ck / c0);
    }
    Ok(acf)
}

/// Which rule produced the downsampling lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagRule {
    LocalMinimum,
    ZeroCrossing,
    /// No minimum or zero crossing within the horizon; the horizon itself was used.
    MaxLag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagChoice {
    pub lag: usize,
    pub rule: LagRule,
}

impl LagChoice {
    pub fn is_warning(&self) -> bool {
        self.rule == LagRule::MaxLag
    }
}

/// Picks the first local minimum of the autocorrelation.
///
/// Falls back to the first non-positive value, then to the last lag.
pub fn find_downsampling_lag(acf: &[f64]) -> LagChoice {
    let max_lag = acf.len().saturating_sub(1).max(1);
    if let Some(k) = (1..acf.len().saturating_sub(1)).find(|&k| acf[k] < acf[k - 1] && acf[k] <= acf[k + 1]) {
        return LagChoice { lag: k, rule: LagRule::LocalMinimum };
    }
    if let Some(k) = (1..acf.len()).find(|&k| acf[k] <= 0.0) {
        return LagChoice { lag: k, rule: LagRule::ZeroCrossing };
    }
    LagChoice { lag: max_lag, rule: LagRule::MaxLag }
}

/// Downsampled series, one segment per phase offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedSeries {
    segments: Vec<Vec<f64>>,
    lag: usize,
}

impl SegmentedSeries {
    pub fn new(segments: Vec<Vec<f64>>, lag: usize) -> Result<Self> {
        if lag == 0 {
            return Err(Error::InvalidArgument("lag must be positive".into()));
        }
        Ok(Self { segments, lag })
    }

    /// A single segment holding the whole series.
    pub fn single(samples: Vec<f64>) -> Self {
        Self { segments: vec![samples], lag: 1 }
    }

    pub fn segments(&self) -> &[Vec<f64>] {
        &self.segments
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn total_len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn iter_samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flatten().copied()
    }

    /// Normalizes all segments jointly with the pooled mean and deviation.
    pub fn normalized(&self) -> Result<Self> {
        let pooled: Vec<f64> = self.iter_samples().collect();
        let (mean, std) = mean_std(&pooled);
        if !(std > 0.0) || pooled.iter().all(|&x| x == pooled[0]) {
            return Err(Error::ZeroVariance);
        }
        let segments = self
            .segments
            .iter()
            .map(|s| s.iter().map(|x| (x - mean) / std).collect())
            .collect();
        Ok(Self { segments, lag: self.lag })
    }
}

/// Segment `i` holds samples `i, i + lag, i + 2 lag, ...` for `i in 0..lag`.
pub fn downsample_all_phases(series: &RawSeries, lag: usize) -> Result<SegmentedSeries> {
    if lag == 0 {
        return Err(Error::InvalidArgument("lag must be positive".into()));
    }
    let segments = (0..lag)
        .map(|phase| series.samples.iter().skip(phase).step_by(lag).copied().collect())
        .collect();
    Ok(SegmentedSeries { segments, lag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(xs: &[f64]) -> RawSeries {
        RawSeries::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn normalize_small() {
        let z = normalize(&series(&[1.0, 2.0, 3.0])).unwrap();
        // population sigma of [1,2,3] is sqrt(2/3)
        let s = (2.0f64 / 3.0).sqrt();
        let expected = [-1.0 / s, 0.0, 1.0 / s];
        for (a, b) in z.samples().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((z.samples()[0] + 1.224744871391589).abs() < 1e-12);
        let (m, sd) = mean_std(z.samples());
        assert!(m.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_constant_fails() {
        assert_eq!(normalize(&series(&[5.0, 5.0, 5.0])), Err(Error::ZeroVariance));
    }

    #[test]
    fn raw_series_validation() {
        assert!(matches!(RawSeries::new(vec![1.0]), Err(Error::SeriesTooShort { .. })));
        assert_eq!(RawSeries::new(vec![1.0, f64::NAN]), Err(Error::NonFinite { index: 1 }));
        assert!(series(&[1.0, 2.0]).with_sample_rate(-1.0).is_err());
    }

    #[test]
    fn acf_leading_one_and_lag_check() {
        let s = series(&[1.0, 3.0, 2.0, 5.0, 4.0]);
        let r = autocorrelation(&s, 3).unwrap();
        assert_eq!(r[0], 1.0);
        assert_eq!(r.len(), 4);
        assert!(matches!(autocorrelation(&s, 5), Err(Error::LagTooLarge { .. })));
    }

    #[test]
    fn sine_acf_minimum_at_half_period() {
        let xs: Vec<f64> = (0..4000).map(|t| (2.0 * std::f64::consts::PI * t as f64 / 20.0).sin()).collect();
        let r = autocorrelation(&series(&xs), 100).unwrap();
        // cosine oracle: r[k] ~ (1 - k/N) cos(2 pi k / 20)
        for k in 0..=30 {
            let oracle = (1.0 - k as f64 / 4000.0) * (2.0 * std::f64::consts::PI * k as f64 / 20.0).cos();
            assert!((r[k] - oracle).abs() < 1e-2, "k={k}");
        }
        let choice = find_downsampling_lag(&r);
        assert_eq!(choice.rule, LagRule::LocalMinimum);
        assert!((9..=11).contains(&choice.lag));
    }

    #[test]
    fn white_noise_acf_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let r = autocorrelation(&series(&xs), 50).unwrap();
        let bound = 3.0 / (n as f64).sqrt();
        assert!(r[1..].iter().all(|v| v.abs() < bound));
    }

    #[test]
    fn lag_rules() {
        assert_eq!(find_downsampling_lag(&[1.0, 0.5, 0.2, 0.3, 0.1]).lag, 2);
        let decreasing = [1.0, 0.9, 0.7, 0.5, 0.3, 0.2, 0.1, -0.05, -0.2, -0.4];
        let c = find_downsampling_lag(&decreasing);
        assert_eq!(c, LagChoice { lag: 7, rule: LagRule::ZeroCrossing });
        let c = find_downsampling_lag(&[1.0, 0.9, 0.8, 0.7]);
        assert_eq!(c, LagChoice { lag: 3, rule: LagRule::MaxLag });
        assert!(c.is_warning());
    }

    #[test]
    fn downsample_examples() {
        let s = series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let d = downsample_all_phases(&s, 2).unwrap();
        assert_eq!(d.segments(), &[vec![1.0, 3.0, 5.0], vec![2.0, 4.0, 6.0]]);
        let d = downsample_all_phases(&s, 1).unwrap();
        assert_eq!(d.segments(), &[s.samples().to_vec()]);
        let d = downsample_all_phases(&series(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2).unwrap();
        assert_eq!(d.segments(), &[vec![1.0, 3.0, 5.0], vec![2.0, 4.0]]);
    }

    proptest! {
        #[test]
        fn downsample_is_a_permutation(xs in prop::collection::vec(-1e3f64..1e3, 2..200), lag in 1usize..20) {
            let s = RawSeries::new(xs.clone()).unwrap();
            let d = downsample_all_phases(&s, lag).unwrap();
            prop_assert_eq!(d.segments().len(), lag);
            prop_assert_eq!(d.total_len(), xs.len());
            let mut seen = vec![false; xs.len()];
            for (phase, seg) in d.segments().iter().enumerate() {
                for (j, v) in seg.iter().enumerate() {
                    let idx = phase + j * lag;
                    prop_assert_eq!(*v, xs[idx]);
                    prop_assert!(!seen[idx]);
                    seen[idx] = true;
                }
            }
            prop_assert!(seen.into_iter().all(|b| b));
        }

        #[test]
        fn normalize_idempotent(xs in prop::collection::vec(-1e3f64..1e3, 3..200)) {
            let s = RawSeries::new(xs).unwrap();
            if let Ok(z) = normalize(&s) {
                let zz = normalize(&z).unwrap();
                for (a, b) in z.samples().iter().zip(zz.samples()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn lag_within_horizon(acf in prop::collection::vec(-1.0f64..1.0, 2..100)) {
            let c = find_downsampling_lag(&acf);
            prop_assert!(c.lag >= 1 && c.lag < acf.len());
        }
    }
}
