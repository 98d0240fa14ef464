//! Divergences between behavior distributions and the signed per-label gap.

use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorDistribution, BehaviorLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    /// Multiplier converting a value in nats into this base.
    fn scale(self) -> f64 {
        match self {
            LogBase::Natural => 1.0,
            LogBase::Two => std::f64::consts::LOG2_E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsOptions {
    /// Additive KL smoothing; `None` means 1/(10·N) for a population of N.
    pub smoothing: Option<f64>,
    pub log_base: LogBase,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            smoothing: None,
            log_base: LogBase::Natural,
        }
    }
}

impl MetricsOptions {
    pub fn smoothing_for(&self, population: usize) -> f64 {
        self.smoothing
            .unwrap_or_else(|| if population == 0 { 0.0 } else { 1.0 / (10.0 * population as f64) })
    }
}

/// KL(p ‖ q) in nats after adding `smoothing` to every class of both inputs.
pub fn kl_divergence(p: &BehaviorDistribution, q: &BehaviorDistribution, smoothing: f64) -> Result<f64> {
    if !(smoothing >= 0.0) {
        return Err(Error::Config(format!("smoothing must be non-negative, got {smoothing}")));
    }
    let ps = p.smoothed(smoothing);
    let qs = q.smoothed(smoothing);
    let mut total = 0.0;
    for label in BehaviorLabel::ALL {
        let (pi, qi) = (ps.get(label), qs.get(label));
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::InfiniteDivergence(label.to_string()));
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total.max(0.0))
}

fn kl_raw(p: &[f64; 6], q: &[f64; 6]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum()
}

/// Jensen-Shannon divergence in nats, bounded by ln 2.
pub fn js_divergence(p: &BehaviorDistribution, q: &BehaviorDistribution) -> f64 {
    let (pa, qa) = (p.as_array(), q.as_array());
    let mut m = [0.0; 6];
    for i in 0..6 {
        m[i] = 0.5 * (pa[i] + qa[i]);
    }
    (0.5 * kl_raw(pa, &m) + 0.5 * kl_raw(qa, &m)).clamp(0.0, std::f64::consts::LN_2)
}

/// Square root of the JS divergence.
pub fn js_distance(p: &BehaviorDistribution, q: &BehaviorDistribution) -> f64 {
    js_divergence(p, q).sqrt()
}

/// Shannon entropy in nats with 0·ln 0 = 0.
pub fn entropy(p: &BehaviorDistribution) -> f64 {
    -p.as_array()
        .iter()
        .filter(|x| **x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>()
}

pub fn entropy_gap(p: &BehaviorDistribution, q: &BehaviorDistribution) -> f64 {
    (entropy(p) - entropy(q)).abs()
}

pub fn tv_distance(p: &BehaviorDistribution, q: &BehaviorDistribution) -> f64 {
    let l1: f64 = p
        .as_array()
        .iter()
        .zip(q.as_array())
        .map(|(a, b)| (a - b).abs())
        .sum();
    (0.5 * l1).min(1.0)
}

/// p_real − p_sim per label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedGapVector {
    gaps: [f64; 6],
}

impl SignedGapVector {
    pub fn from_array(gaps: [f64; 6]) -> Self {
        Self { gaps }
    }

    pub fn get(&self, label: BehaviorLabel) -> f64 {
        self.gaps[label.index()]
    }

    pub fn as_array(&self) -> &[f64; 6] {
        &self.gaps
    }

    pub fn sum(&self) -> f64 {
        self.gaps.iter().sum()
    }

    /// g⁺: the under-represented part, zero elsewhere.
    pub fn positive(&self) -> [f64; 6] {
        self.gaps.map(|g| g.max(0.0))
    }

    /// g⁻ as magnitudes: |g| where g < 0, zero elsewhere.
    pub fn negative(&self) -> [f64; 6] {
        self.gaps.map(|g| (-g).max(0.0))
    }
}

impl Serialize for SignedGapVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(6))?;
        for label in BehaviorLabel::ALL {
            map.serialize_entry(label.as_str(), &self.gaps[label.index()])?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for SignedGapVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = std::collections::BTreeMap::<String, f64>::deserialize(deserializer)?;
        let mut gaps = [0.0; 6];
        for (key, value) in raw {
            let label: BehaviorLabel = key.parse().map_err(D::Error::custom)?;
            gaps[label.index()] = value;
        }
        Ok(Self { gaps })
    }
}

pub fn signed_gaps(p_sim: &BehaviorDistribution, p_real: &BehaviorDistribution) -> SignedGapVector {
    let mut gaps = [0.0; 6];
    for (i, g) in gaps.iter_mut().enumerate() {
        *g = p_real.as_array()[i] - p_sim.as_array()[i];
    }
    SignedGapVector { gaps }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub iteration: usize,
    /// Smoothed KL(p_sim ‖ p_real); the convergence quantity.
    pub kl: f64,
    /// Smoothed KL(p_real ‖ p_sim), reported alongside.
    pub kl_real_sim: f64,
    pub js_distance: f64,
    pub js_divergence: f64,
    pub entropy_gap: f64,
    pub tv: f64,
    pub log_base: LogBase,
    pub smoothing: f64,
    pub per_label_sim: BehaviorDistribution,
    pub per_label_real: BehaviorDistribution,
}

impl AlignmentReport {
    pub fn compute(
        iteration: usize,
        p_sim: &BehaviorDistribution,
        p_real: &BehaviorDistribution,
        population: usize,
        options: &MetricsOptions,
    ) -> Result<Self> {
        let smoothing = options.smoothing_for(population);
        let s = options.log_base.scale();
        let jsd = js_divergence(p_sim, p_real) * s;
        Ok(Self {
            iteration,
            kl: kl_divergence(p_sim, p_real, smoothing)? * s,
            kl_real_sim: kl_divergence(p_real, p_sim, smoothing)? * s,
            js_distance: jsd.sqrt(),
            js_divergence: jsd,
            entropy_gap: entropy_gap(p_sim, p_real) * s,
            tv: tv_distance(p_sim, p_real),
            log_base: options.log_base,
            smoothing,
            per_label_sim: *p_sim,
            per_label_real: *p_real,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use BehaviorLabel::*;

    fn expert() -> BehaviorDistribution {
        BehaviorDistribution::expert_reference()
    }

    // Independent oracle: plain loops over literal arrays, no crate helpers.
    fn oracle_kl(p: [f64; 6], q: [f64; 6]) -> f64 {
        let mut s = 0.0;
        for i in 0..6 {
            if p[i] > 0.0 {
                s += p[i] * (p[i].ln() - q[i].ln());
            }
        }
        s
    }

    #[test]
    fn kl_identity_is_zero() {
        assert_eq!(kl_divergence(&expert(), &expert(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn kl_uniform_vs_expert() {
        let u = BehaviorDistribution::uniform();
        let got = kl_divergence(&u, &expert(), 0.0).unwrap();
        let want = oracle_kl([1.0 / 6.0; 6], [0.28, 0.26, 0.12, 0.12, 0.12, 0.10]);
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.0888, epsilon = 1e-3);
    }

    #[test]
    fn kl_disjoint_support_is_infinite() {
        let p = BehaviorDistribution::one_hot(Fight);
        let q = BehaviorDistribution::one_hot(Freeze);
        let err = kl_divergence(&p, &q, 0.0).unwrap_err();
        assert!(err.to_string().starts_with("infinite divergence"));
        assert!(kl_divergence(&p, &q, 0.01).unwrap().is_finite());
    }

    #[test]
    fn js_bounds() {
        let p = BehaviorDistribution::one_hot(Fight);
        let q = BehaviorDistribution::one_hot(Freeze);
        assert_abs_diff_eq!(js_distance(&p, &q), 2f64.ln().sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(js_distance(&p, &q), 0.8326, epsilon = 1e-4);
        assert_eq!(js_distance(&expert(), &expert()), 0.0);
    }

    #[test]
    fn entropy_values() {
        let u = BehaviorDistribution::uniform();
        let one = BehaviorDistribution::one_hot(HideInPlace);
        assert_abs_diff_eq!(entropy_gap(&u, &one), 6f64.ln(), epsilon = 1e-12);
        let mut h = 0.0;
        for x in [0.28f64, 0.26, 0.12, 0.12, 0.12, 0.10] {
            h -= x * x.ln();
        }
        assert_abs_diff_eq!(entropy(&expert()), h, epsilon = 1e-12);
        assert_abs_diff_eq!(entropy(&expert()), 1.7003, epsilon = 1e-4);
    }

    #[test]
    fn tv_values() {
        let u = BehaviorDistribution::uniform();
        let hand = 0.5
            * ((1.0 / 6.0 - 0.28f64).abs()
                + (1.0 / 6.0 - 0.26f64).abs()
                + 3.0 * (1.0 / 6.0 - 0.12f64).abs()
                + (1.0 / 6.0 - 0.10f64).abs());
        assert_abs_diff_eq!(tv_distance(&u, &expert()), hand, epsilon = 1e-12);
        // The summation evaluates to 0.4133 / 2.
        assert_abs_diff_eq!(tv_distance(&u, &expert()), 0.2067, epsilon = 1e-4);
        let p = BehaviorDistribution::one_hot(Fight);
        let q = BehaviorDistribution::one_hot(Freeze);
        assert_eq!(tv_distance(&p, &q), 1.0);
    }

    #[test]
    fn gaps() {
        let p_sim = BehaviorDistribution::new([0.10, 0.50, 0.10, 0.10, 0.10, 0.10]).unwrap();
        let g = signed_gaps(&p_sim, &expert());
        assert_abs_diff_eq!(g.get(HideInPlace), -0.24, epsilon = 1e-12);
        assert_abs_diff_eq!(g.sum(), 0.0, epsilon = 1e-12);
        let z = signed_gaps(&expert(), &expert());
        assert!(z.as_array().iter().all(|x| *x == 0.0));
        let u = signed_gaps(&BehaviorDistribution::uniform(), &expert());
        assert!(u.sum().abs() < 1e-12);
    }

    #[test]
    fn report_orientation_and_base() {
        let u = BehaviorDistribution::uniform();
        let opts = MetricsOptions { smoothing: Some(0.0), log_base: LogBase::Natural };
        let r = AlignmentReport::compute(1, &u, &expert(), 80, &opts).unwrap();
        assert_abs_diff_eq!(r.kl, kl_divergence(&u, &expert(), 0.0).unwrap(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.kl_real_sim, kl_divergence(&expert(), &u, 0.0).unwrap(), epsilon = 1e-15);
        let bits = MetricsOptions { smoothing: Some(0.0), log_base: LogBase::Two };
        let r2 = AlignmentReport::compute(1, &u, &expert(), 80, &bits).unwrap();
        assert_abs_diff_eq!(r2.kl, r.kl / 2f64.ln(), epsilon = 1e-12);
        assert_eq!(r2.tv, r.tv);
    }

    #[test]
    fn default_smoothing_scales_with_population() {
        assert_eq!(MetricsOptions::default().smoothing_for(80), 1.0 / 800.0);
    }
}
