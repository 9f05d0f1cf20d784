use rayon::prelude::*;
use serde::Serialize;

use super::realization::realize_for_content;
use super::request::{simulate_request_with, InterferenceField};
use super::rng::{Stream, Streams};
use super::window::{SimWindow, DEFAULT_GUARD};
use crate::error::{Error, Result};
use crate::params::{CachePolicy, ContentLibrary, RequestDistribution, SystemParams};

/// Monte-Carlo estimate of an outage probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Estimate from `failures` out of `trials` Bernoulli outcomes.
    pub fn from_counts(failures: u64, trials: u64, seed: u64) -> Self {
        let mean = failures as f64 / trials as f64;
        Self {
            mean,
            std_error: (mean * (1.0 - mean) / trials as f64).sqrt(),
            trials,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageEstimates {
    /// Indexed by rank - 1.
    pub per_content: Vec<McEstimate>,
    /// `sum_c q_c mean_c`, standard error `sqrt(sum_c q_c^2 se_c^2)`.
    pub average: McEstimate,
}

/// Settings of the stratified outage estimator.
///
/// Each of `realizations` network snapshots is drawn once; every content is
/// then requested `trials_per_content` times in it, each time under freshly
/// drawn fading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub window: SimWindow,
    pub guard: f64,
    pub realizations: u32,
    pub trials_per_content: u32,
    pub seed: u64,
    pub interference: InterferenceField,
}

impl MonteCarlo {
    /// Default window for `params`, 100 realizations of one trial per content.
    pub fn for_params(params: &SystemParams) -> Self {
        Self {
            window: SimWindow::default_for(params, DEFAULT_GUARD),
            guard: DEFAULT_GUARD,
            realizations: 100,
            trials_per_content: 1,
            seed: 0,
            interference: InterferenceField::All,
        }
    }

    pub fn with_budget(mut self, realizations: u32, trials_per_content: u32) -> Self {
        self.realizations = realizations;
        self.trials_per_content = trials_per_content;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_interference(mut self, field: InterferenceField) -> Self {
        self.interference = field;
        self
    }

    fn validate(&self, params: &SystemParams) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::config("realizations", "need at least one realization"));
        }
        if self.trials_per_content == 0 {
            return Err(Error::config("trials_per_content", "need at least one trial per content"));
        }
        self.window.check_covers(params, self.guard)
    }

    /// Outage failures per requested rank, summed over realizations. Each
    /// content is simulated in its own realizations (geometry path `[r, c]`),
    /// so estimates for different contents are independent.
    fn count_failures(
        &self,
        params: &SystemParams,
        policy: CachePolicy,
        library: &ContentLibrary,
        ranks: &[usize],
    ) -> Result<Vec<u64>> {
        self.validate(params)?;
        for &rank in ranks {
            library.check_rank(rank)?;
        }
        let streams = Streams::new(self.seed);
        let realizations = u64::from(self.realizations);
        let cells: Vec<u64> = (0..ranks.len() as u64 * realizations)
            .into_par_iter()
            .map(|job| {
                let (c, r) = (ranks[(job / realizations) as usize], job % realizations);
                let path = [r, c as u64];
                let net = realize_for_content(params, policy, library, c, &self.window, &streams, &path)?;
                let mut rng = streams.rng(Stream::Fading, &path);
                let mut failures = 0u64;
                for _ in 0..self.trials_per_content {
                    let out = simulate_request_with(&net, c, params, self.interference, &mut rng)?;
                    failures += u64::from(!out.success);
                }
                Ok(failures)
            })
            .collect::<Result<_>>()?;
        Ok(cells
            .chunks(self.realizations as usize)
            .map(|chunk| chunk.iter().sum())
            .collect())
    }

    fn trials_per_rank(&self) -> u64 {
        u64::from(self.realizations) * u64::from(self.trials_per_content)
    }

    /// Per-content and request-weighted outage estimates.
    pub fn estimate_outage(
        &self,
        params: &SystemParams,
        policy: CachePolicy,
        library: &ContentLibrary,
        requests: &RequestDistribution,
    ) -> Result<OutageEstimates> {
        if requests.len() != library.size() {
            return Err(Error::param(
                "library_size",
                format!(
                    "request distribution covers {} contents but the library has {}",
                    requests.len(),
                    library.size()
                ),
            ));
        }
        let ranks: Vec<usize> = (1..=library.size()).collect();
        let failures = self.count_failures(params, policy, library, &ranks)?;
        let n = self.trials_per_rank();
        let per_content: Vec<McEstimate> = failures
            .iter()
            .map(|&f| McEstimate::from_counts(f, n, self.seed))
            .collect();
        let mut mean = 0.0;
        let mut var = 0.0;
        for (q, e) in requests.weights().iter().zip(&per_content) {
            mean += q * e.mean;
            var += q * q * e.std_error * e.std_error;
        }
        let average = McEstimate {
            mean,
            std_error: var.sqrt(),
            trials: n * library.size() as u64,
            seed: self.seed,
        };
        Ok(OutageEstimates {
            per_content,
            average,
        })
    }

    /// Outage estimate for a single content rank.
    pub fn estimate_content(
        &self,
        params: &SystemParams,
        policy: CachePolicy,
        library: &ContentLibrary,
        rank: usize,
    ) -> Result<McEstimate> {
        let failures = self.count_failures(params, policy, library, &[rank])?;
        Ok(McEstimate::from_counts(failures[0], self.trials_per_rank(), self.seed))
    }
}

/// Convenience form of [`MonteCarlo::estimate_outage`].
pub fn estimate_outage(
    params: &SystemParams,
    policy: CachePolicy,
    library: &ContentLibrary,
    requests: &RequestDistribution,
    mc: &MonteCarlo,
) -> Result<OutageEstimates> {
    mc.estimate_outage(params, policy, library, requests)
}

/// Run `f` on a dedicated pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nothing_serves_means_certain_outage() {
        let p = SystemParams::builder().beta(0.0).lambda_mbs(0.0).build().unwrap();
        let lib = ContentLibrary::new(5, 2).unwrap();
        let q = RequestDistribution::zipf(5, 0.8).unwrap();
        let mc = MonteCarlo::for_params(&p).with_budget(4, 3);
        let est = mc.estimate_outage(&p, CachePolicy::Uniform, &lib, &q).unwrap();
        assert!(est.per_content.iter().all(|e| e.mean == 1.0 && e.std_error == 0.0));
        assert_eq!(est.average.mean, 1.0);
        assert_eq!(est.average.trials, 60);
    }

    #[test]
    fn invalid_budgets_rejected() {
        let p = SystemParams::default();
        let lib = ContentLibrary::new(5, 2).unwrap();
        let q = RequestDistribution::uniform(5).unwrap();
        for mc in [
            MonteCarlo::for_params(&p).with_budget(0, 1),
            MonteCarlo::for_params(&p).with_budget(1, 0),
        ] {
            let err = mc.estimate_outage(&p, CachePolicy::Uniform, &lib, &q).unwrap_err();
            assert!(err.is_configuration());
        }
        let mut small = MonteCarlo::for_params(&p);
        small.window = SimWindow::square(400.0).unwrap();
        assert!(small.estimate_outage(&p, CachePolicy::Uniform, &lib, &q).is_err());
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let p = SystemParams::builder().lambda_sbs(0.05).build().unwrap();
        let lib = ContentLibrary::new(20, 6).unwrap();
        let q = RequestDistribution::zipf(20, 0.8).unwrap();
        let mc = MonteCarlo::for_params(&p).with_budget(24, 2).with_seed(5);
        let one = with_workers(1, || mc.estimate_outage(&p, CachePolicy::Uniform, &lib, &q)).unwrap().unwrap();
        let four = with_workers(4, || mc.estimate_outage(&p, CachePolicy::Uniform, &lib, &q)).unwrap().unwrap();
        assert_eq!(one, four);
        let other = mc.with_seed(6).estimate_outage(&p, CachePolicy::Uniform, &lib, &q).unwrap();
        assert_ne!(one.average.mean, other.average.mean);
    }

    #[test]
    fn single_content_matches_full_estimate() {
        let p = SystemParams::builder().lambda_sbs(0.05).build().unwrap();
        let lib = ContentLibrary::new(10, 3).unwrap();
        let q = RequestDistribution::zipf(10, 0.8).unwrap();
        let mc = MonteCarlo::for_params(&p).with_budget(8, 2).with_seed(3);
        let all = mc.estimate_outage(&p, CachePolicy::Uniform, &lib, &q).unwrap();
        let one = mc.estimate_content(&p, CachePolicy::Uniform, &lib, 4).unwrap();
        assert_eq!(one, all.per_content[3]);
    }

    #[test]
    fn standard_error_formula() {
        let e = McEstimate::from_counts(25, 100, 0);
        assert_eq!(e.mean, 0.25);
        assert!((e.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-16);
    }
}
