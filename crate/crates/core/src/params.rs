//! Model parameters, the content library, request popularity and cache
//! replication.
//!
//! Everything in here works in linear units. The dB/dBm forms accepted by
//! configuration files are converted once, by the `*_db`/`*_dbm` builder
//! setters.

use serde::Serialize;

use crate::error::{Error, Result};

/// dB (or dBm relative to 1 mW) to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts * 1e3)
}

/// Physical-layer and geometry parameters of the two-tier network.
///
/// Construct through [`SystemParams::builder`]; the builder defaults are the
/// reference configuration used throughout the guide (43/23 dBm maximum
/// powers, `B = 1`, `beta = 0.05`, `alpha = 4`, `gamma = -10 dB`,
/// `R_SBS = 5 m`, `R_MBS = 250 m`, `lambda_MBS = 1e-4`, `lambda_SBS = 0.2`).
///
/// The intended regime `lambda_sbs >> lambda_mbs` is not enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    lambda_mbs: f64,
    lambda_sbs: f64,
    bandwidth_w: f64,
    subchannels_b: u32,
    beta: f64,
    p_max_mbs: f64,
    p_max_sbs: f64,
    alpha: f64,
    gamma: f64,
    r_sbs: f64,
    r_mbs: f64,
}

impl SystemParams {
    pub fn builder() -> SystemParamsBuilder {
        SystemParamsBuilder::default()
    }

    pub fn to_builder(&self) -> SystemParamsBuilder {
        SystemParamsBuilder { inner: *self }
    }

    /// MBS density, per m².
    pub fn lambda_mbs(&self) -> f64 {
        self.lambda_mbs
    }

    /// SBS density, per m².
    pub fn lambda_sbs(&self) -> f64 {
        self.lambda_sbs
    }

    /// Total bandwidth in Hz. Informational only; no formula uses it.
    pub fn bandwidth_w(&self) -> f64 {
        self.bandwidth_w
    }

    pub fn subchannels_b(&self) -> u32 {
        self.subchannels_b
    }

    /// Spectrum access factor: the fraction of the `B` sub-channels an SBS
    /// transmits on.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p_max_mbs(&self) -> f64 {
        self.p_max_mbs
    }

    pub fn p_max_sbs(&self) -> f64 {
        self.p_max_sbs
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// SIR threshold, linear.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_sbs(&self) -> f64 {
        self.r_sbs
    }

    pub fn r_mbs(&self) -> f64 {
        self.r_mbs
    }

    /// Per-sub-channel MBS power `p_max_mbs / B`.
    pub fn p_mbs(&self) -> f64 {
        self.p_max_mbs / f64::from(self.subchannels_b)
    }

    /// Per-sub-channel SBS power `p_max_sbs / (beta B)`; `None` when the SBSs
    /// access no spectrum.
    pub fn p_sbs(&self) -> Option<f64> {
        let share = self.beta * f64::from(self.subchannels_b);
        (share > 0.0).then(|| self.p_max_sbs / share)
    }

    /// Density of SBSs transmitting on the reference sub-channel, `beta * lambda_sbs`.
    pub fn active_sbs_density(&self) -> f64 {
        self.beta * self.lambda_sbs
    }

    fn validate(&self) -> Result<()> {
        fn finite(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite, got {v}")))
            }
        }
        for (name, v) in [
            ("lambda_mbs", self.lambda_mbs),
            ("lambda_sbs", self.lambda_sbs),
            ("bandwidth_w", self.bandwidth_w),
            ("beta", self.beta),
            ("p_max_mbs", self.p_max_mbs),
            ("p_max_sbs", self.p_max_sbs),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("r_sbs", self.r_sbs),
            ("r_mbs", self.r_mbs),
        ] {
            finite(name, v)?;
        }
        if self.lambda_mbs < 0.0 {
            return Err(Error::param("lambda_mbs", "density must be nonnegative"));
        }
        if self.lambda_sbs < 0.0 {
            return Err(Error::param("lambda_sbs", "density must be nonnegative"));
        }
        if self.bandwidth_w < 0.0 {
            return Err(Error::param("bandwidth_w", "must be nonnegative"));
        }
        if self.subchannels_b == 0 {
            return Err(Error::param("subchannels_b", "need at least one sub-channel"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param("beta", format!("must lie in [0, 1], got {}", self.beta)));
        }
        if self.p_max_mbs <= 0.0 {
            return Err(Error::param("p_max_mbs", "power must be positive"));
        }
        if self.p_max_sbs <= 0.0 {
            return Err(Error::param("p_max_sbs", "power must be positive"));
        }
        if self.alpha <= 2.0 {
            return Err(Error::param(
                "alpha",
                format!("path-loss exponent must exceed 2, got {}", self.alpha),
            ));
        }
        if self.gamma <= 0.0 {
            return Err(Error::param("gamma", "SIR threshold must be positive (linear)"));
        }
        if self.r_sbs <= 0.0 {
            return Err(Error::param("r_sbs", "radius must be positive"));
        }
        if self.r_mbs <= self.r_sbs {
            return Err(Error::param(
                "r_mbs",
                format!(
                    "must exceed r_sbs ({} <= {})",
                    self.r_mbs, self.r_sbs
                ),
            ));
        }
        Ok(())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParamsBuilder::default().inner
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SystemParamsBuilder {
    inner: SystemParams,
}

impl Default for SystemParamsBuilder {
    fn default() -> Self {
        Self {
            inner: SystemParams {
                lambda_mbs: 1e-4,
                lambda_sbs: 0.2,
                bandwidth_w: 20e6,
                subchannels_b: 1,
                beta: 0.05,
                p_max_mbs: dbm_to_watts(43.0),
                p_max_sbs: dbm_to_watts(23.0),
                alpha: 4.0,
                gamma: db_to_linear(-10.0),
                r_sbs: 5.0,
                r_mbs: 250.0,
            },
        }
    }
}

macro_rules! setter {
    ($(#[$m:meta])* $name:ident: $ty:ty) => {
        $(#[$m])*
        pub fn $name(mut self, value: $ty) -> Self {
            self.inner.$name = value;
            self
        }
    };
}

impl SystemParamsBuilder {
    setter!(lambda_mbs: f64);
    setter!(lambda_sbs: f64);
    setter!(bandwidth_w: f64);
    setter!(subchannels_b: u32);
    setter!(beta: f64);
    setter!(
        /// Watts.
        p_max_mbs: f64
    );
    setter!(
        /// Watts.
        p_max_sbs: f64
    );
    setter!(alpha: f64);
    setter!(
        /// Linear SIR threshold; see [`Self::gamma_db`].
        gamma: f64
    );
    setter!(r_sbs: f64);
    setter!(r_mbs: f64);

    pub fn gamma_db(self, db: f64) -> Self {
        self.gamma(db_to_linear(db))
    }

    pub fn p_max_mbs_dbm(self, dbm: f64) -> Self {
        self.p_max_mbs(dbm_to_watts(dbm))
    }

    pub fn p_max_sbs_dbm(self, dbm: f64) -> Self {
        self.p_max_sbs(dbm_to_watts(dbm))
    }

    pub fn build(self) -> Result<SystemParams> {
        self.inner.validate()?;
        Ok(self.inner)
    }
}

/// Library of `size` equal-sized contents, of which each SBS stores
/// `cache_slots`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContentLibrary {
    size: usize,
    cache_slots: usize,
}

impl ContentLibrary {
    pub fn new(size: usize, cache_slots: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidLibrary);
        }
        if cache_slots > size {
            return Err(Error::param(
                "cache_slots",
                format!("cache of {cache_slots} exceeds library of {size}"),
            ));
        }
        Ok(Self { size, cache_slots })
    }

    /// Library whose cache size is given as a fraction of the library; see
    /// [`cache_slots_from_normalized`] for the rounding rule.
    pub fn from_normalized(size: usize, d_tilde: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidLibrary);
        }
        if !(0.0..=1.0).contains(&d_tilde) {
            return Err(Error::param(
                "d_tilde",
                format!("normalized cache must lie in [0, 1], got {d_tilde}"),
            ));
        }
        Self::new(size, cache_slots_from_normalized(d_tilde, size))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cache_slots(&self) -> usize {
        self.cache_slots
    }

    /// `d / |C|`.
    pub fn normalized_cache(&self) -> f64 {
        self.cache_slots as f64 / self.size as f64
    }

    pub(crate) fn check_rank(&self, rank: usize) -> Result<()> {
        if rank == 0 || rank > self.size {
            Err(Error::InvalidRank {
                rank,
                size: self.size,
            })
        } else {
            Ok(())
        }
    }
}

/// Cache size in slots for a normalized size `d_tilde`: nearest integer,
/// ties to even, clamped to `[0, size]`.
pub fn cache_slots_from_normalized(d_tilde: f64, library_size: usize) -> usize {
    let exact = d_tilde * library_size as f64;
    let rounded = exact.round_ties_even();
    if rounded <= 0.0 || rounded.is_nan() {
        0
    } else {
        (rounded as usize).min(library_size)
    }
}

/// Request probabilities `q_c` over contents ranked by popularity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestDistribution {
    weights: Vec<f64>,
    skew: f64,
}

impl RequestDistribution {
    /// Every content equally likely.
    pub fn uniform(library_size: usize) -> Result<Self> {
        if library_size == 0 {
            return Err(Error::InvalidLibrary);
        }
        let w = 1.0 / library_size as f64;
        Ok(Self {
            weights: vec![w; library_size],
            skew: 0.0,
        })
    }

    /// Zipf law `q_c = c^-delta / sum_i i^-delta`. `delta = 0` reproduces
    /// [`Self::uniform`] bit for bit.
    pub fn zipf(library_size: usize, delta: f64) -> Result<Self> {
        if library_size == 0 {
            return Err(Error::InvalidLibrary);
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::param(
                "delta",
                format!("Zipf skew must be finite and nonnegative, got {delta}"),
            ));
        }
        let raw: Vec<f64> = (1..=library_size)
            .map(|c| (c as f64).powf(-delta))
            .collect();
        // Smallest terms first keeps the normalizer accurate for long tails.
        let total = neumaier_sum(raw.iter().rev().copied());
        let weights = raw.into_iter().map(|w| w / total).collect();
        Ok(Self {
            weights,
            skew: delta,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn skew(&self) -> f64 {
        self.skew
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `q_c` for 1-based rank `c`.
    pub fn probability(&self, rank: usize) -> Result<f64> {
        rank.checked_sub(1)
            .and_then(|i| self.weights.get(i))
            .copied()
            .ok_or(Error::InvalidRank {
                rank,
                size: self.weights.len(),
            })
    }

    /// Cumulative request mass of the `top` most popular contents.
    pub fn head_mass(&self, top: usize) -> f64 {
        neumaier_sum(self.weights.iter().take(top).copied())
    }
}

pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// How SBSs choose which `d` contents to store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    /// UCP: each SBS stores a uniformly random `d`-subset of the library.
    Uniform,
    /// PCP: every SBS stores the `d` most popular contents.
    Popularity,
}

impl CachePolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            CachePolicy::Uniform => "ucp",
            CachePolicy::Popularity => "pcp",
        }
    }
}

impl std::fmt::Display for CachePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CachePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ucp" | "uniform" => Ok(CachePolicy::Uniform),
            "pcp" | "popularity" => Ok(CachePolicy::Popularity),
            other => Err(Error::config(
                "policy",
                format!("unknown caching policy `{other}` (expected ucp or pcp)"),
            )),
        }
    }
}

/// Probability `P_c` that an SBS holds the content of rank `rank`.
pub fn replication_probability(
    policy: CachePolicy,
    rank: usize,
    library: &ContentLibrary,
) -> Result<f64> {
    library.check_rank(rank)?;
    Ok(match policy {
        CachePolicy::Uniform => library.normalized_cache(),
        CachePolicy::Popularity => {
            if rank <= library.cache_slots() {
                1.0
            } else {
                0.0
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zipf_two_contents() {
        let q = RequestDistribution::zipf(2, 1.0).unwrap();
        assert!((q.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((q.weights()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zipf_zero_skew_is_uniform_bitwise() {
        let z = RequestDistribution::zipf(100, 0.0).unwrap();
        let u = RequestDistribution::uniform(100).unwrap();
        assert_eq!(z, u);
        assert!(z.weights().iter().all(|&w| w == 0.01));
    }

    // Frozen from a 50-digit mpmath evaluation of c^-0.8 / sum_{i<=100} i^-0.8.
    #[test]
    fn zipf_matches_high_precision_oracle() {
        let q = RequestDistribution::zipf(100, 0.8).unwrap();
        let expected = [
            (1, 0.122_934_146_556_582_81),
            (2, 0.070_607_125_961_255_544),
            (30, 0.008_090_503_065_989_274),
            (100, 0.003_087_966_147_046_905_3),
        ];
        for (rank, want) in expected {
            let got = q.probability(rank).unwrap();
            assert!((got - want).abs() < 1e-15, "rank {rank}: {got} vs {want}");
        }
        assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_library_rejected() {
        assert!(matches!(
            RequestDistribution::zipf(0, 0.8),
            Err(Error::InvalidLibrary)
        ));
        assert!(matches!(ContentLibrary::new(0, 0), Err(Error::InvalidLibrary)));
    }

    #[test]
    fn replication_cases() {
        let lib = ContentLibrary::new(100, 5).unwrap();
        assert_eq!(replication_probability(CachePolicy::Popularity, 3, &lib).unwrap(), 1.0);
        assert_eq!(replication_probability(CachePolicy::Popularity, 7, &lib).unwrap(), 0.0);
        let lib = ContentLibrary::new(100, 30).unwrap();
        for c in [1, 42, 100] {
            assert_eq!(replication_probability(CachePolicy::Uniform, c, &lib).unwrap(), 0.30);
        }
        assert!(matches!(
            replication_probability(CachePolicy::Uniform, 0, &lib),
            Err(Error::InvalidRank { .. })
        ));
        assert!(matches!(
            replication_probability(CachePolicy::Popularity, 101, &lib),
            Err(Error::InvalidRank { .. })
        ));
    }

    #[test]
    fn normalized_rounding() {
        assert_eq!(cache_slots_from_normalized(0.3, 100), 30);
        assert_eq!(cache_slots_from_normalized(1.0, 100), 100);
        assert_eq!(cache_slots_from_normalized(0.005, 100), 0);
        assert_eq!(cache_slots_from_normalized(0.015, 100), 2);
        assert_eq!(cache_slots_from_normalized(0.025, 100), 2);
    }

    #[test]
    fn derived_powers() {
        let p = SystemParams::default();
        assert!((p.p_mbs() - 19.952_623_149_688_8).abs() < 1e-9);
        assert!((p.p_sbs().unwrap() - 0.199_526_231_496_888 / 0.05).abs() < 1e-12);
        let silent = p.to_builder().beta(0.0).build().unwrap();
        assert_eq!(silent.p_sbs(), None);
    }

    #[test]
    fn builder_rejects_invalid() {
        let b = SystemParams::builder();
        assert!(b.alpha(2.0).build().is_err());
        assert!(b.beta(1.5).build().is_err());
        assert!(b.r_mbs(4.0).build().is_err());
        assert!(b.r_sbs(0.0).build().is_err());
        assert!(b.gamma(0.0).build().is_err());
        assert!(b.subchannels_b(0).build().is_err());
        assert!(b.lambda_sbs(-1.0).build().is_err());
        assert!(b.lambda_mbs(f64::NAN).build().is_err());
        assert!(b.build().is_ok());
    }

    #[test]
    fn db_round_trip() {
        assert!((db_to_linear(-10.0) - 0.1).abs() < 1e-15);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((watts_to_dbm(dbm_to_watts(23.0)) - 23.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn zipf_normalized_and_nonincreasing(n in 1usize..400, delta in 0.0f64..3.0) {
            let q = RequestDistribution::zipf(n, delta).unwrap();
            prop_assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(q.weights().windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn replicated_mass_equals_cache_size(n in 1usize..300, frac in 0.0f64..=1.0) {
            let lib = ContentLibrary::from_normalized(n, frac).unwrap();
            let d = lib.cache_slots() as f64;
            for policy in [CachePolicy::Uniform, CachePolicy::Popularity] {
                let mass: f64 = (1..=n)
                    .map(|c| replication_probability(policy, c, &lib).unwrap())
                    .sum();
                prop_assert!((mass - d).abs() < 1e-9 * d.max(1.0));
            }
        }
    }
}
