//! Closed-form outage of the cache-enabled two-tier network.
//!
//! A reference user at the origin asks for content `c`. If an SBS holding `c`
//! lies within `R_SBS` the nearest such SBS serves it; otherwise the nearest
//! MBS within `R_MBS` does; otherwise the request is a miss. Conditioned on the
//! serving distance `r`, Rayleigh fading turns the success probability into
//! the Laplace transform of the interference,
//!
//! ```text
//! P(SIR > gamma | r) = exp(-pi r^2 K),
//! K_SBS = lambda_MBS k1 + beta lambda_SBS k2,
//! K_MBS = lambda_MBS k3 + beta lambda_SBS k4,
//! ```
//!
//! with dimensionless kernels `k(rho) = rho^(2/alpha) * int_{rho^(-2/alpha)}^inf du / (1 + u^(alpha/2))`
//! evaluated at the interferer-to-server power ratio times `gamma`. Averaging
//! over the truncated Rayleigh law of `r` gives the outage of each tier in
//! closed form.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{
    replication_probability, CachePolicy, ContentLibrary, RequestDistribution, SystemParams,
};
use crate::quadrature::{self, Tolerance};

/// `1 - exp(-x)` without cancellation; saturates to exactly 1 for large `x`.
#[inline]
pub(crate) fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

const KERNEL_TOLERANCE: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-10,
    max_intervals: 4000,
};

/// Interference kernel `rho^(2/alpha) * int_{rho^(-2/alpha)}^inf du / (1 + u^(alpha/2))`.
///
/// `rho` is `gamma` times the ratio of interferer power to serving power.
/// For `alpha = 4` the integral is `atan(sqrt(rho))` and the closed form is
/// used; other exponents go through [`interference_kernel_quadrature`].
pub fn interference_kernel(rho: f64, alpha: f64) -> Result<f64> {
    check_kernel_args(rho, alpha)?;
    if alpha == 4.0 {
        let s = rho.sqrt();
        return Ok(s * s.atan());
    }
    interference_kernel_quadrature(rho, alpha)
}

/// Same kernel by adaptive quadrature, for any `alpha > 2`.
pub fn interference_kernel_quadrature(rho: f64, alpha: f64) -> Result<f64> {
    check_kernel_args(rho, alpha)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let half = alpha / 2.0;
    let lower = rho.powf(-2.0 / alpha);
    let est = kernel_tail(lower, half)?;
    // The integrand is below u^-half and the whole-line integral is finite.
    let full_line = (PI / half) / (PI / half).sin();
    let tail_bound = if lower > 0.0 {
        lower.powf(1.0 - half) / (half - 1.0)
    } else {
        f64::INFINITY
    };
    let bound = full_line.min(tail_bound) * (1.0 + 1e-9);
    if !(est.value >= 0.0 && est.value <= bound) {
        return Err(Error::Quadrature {
            value: est.value,
            abs_error: est.abs_error,
            intervals: est.intervals,
        });
    }
    Ok(rho.powf(2.0 / alpha) * est.value)
}

/// `int_a^inf du / (1 + u^s)`. Beyond `b = max(a, 1)` the substitution
/// `u = b t^(-1/(s-1))` maps the tail onto a bounded integrand on `(0, 1]`,
/// which stays tractable as `s` approaches 1.
fn kernel_tail(a: f64, s: f64) -> Result<quadrature::Estimate> {
    let b = a.max(1.0);
    let head = if a < b {
        quadrature::integrate(|u: f64| 1.0 / (1.0 + u.powf(s)), a, b, KERNEL_TOLERANCE)?
    } else {
        quadrature::Estimate {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        }
    };
    let p = s / (s - 1.0);
    let bs = b.powf(s);
    let c = b / (s - 1.0);
    let tail = quadrature::integrate(|t: f64| c / (t.powf(p) + bs), 0.0, 1.0, KERNEL_TOLERANCE)?;
    Ok(quadrature::Estimate {
        value: head.value + tail.value,
        abs_error: head.abs_error + tail.abs_error,
        intervals: head.intervals + tail.intervals,
    })
}

fn check_kernel_args(rho: f64, alpha: f64) -> Result<()> {
    if !(alpha > 2.0) {
        return Err(Error::DivergentIntegral { alpha });
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::param("gamma", format!("kernel argument must be finite and nonnegative, got {rho}")));
    }
    Ok(())
}

/// The four kernels of the two interference Laplace transforms.
///
/// `k1`: MBS interferers, SBS server. `k2`: SBS interferers, SBS server.
/// `k3`: MBS interferers, MBS server. `k4`: SBS interferers, MBS server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterferenceKernels {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

/// All four kernels. Requires `beta * B > 0` so that the SBS power is defined.
pub fn kernels(params: &SystemParams) -> Result<InterferenceKernels> {
    let p_sbs = params.p_sbs().ok_or_else(|| {
        Error::param("beta", "SBS power undefined when beta * B = 0")
    })?;
    let p_mbs = params.p_mbs();
    let (g, a) = (params.gamma(), params.alpha());
    let k2 = interference_kernel(g, a)?;
    Ok(InterferenceKernels {
        k1: interference_kernel(g * p_mbs / p_sbs, a)?,
        k2,
        k3: k2,
        k4: interference_kernel(g * p_sbs / p_mbs, a)?,
    })
}

/// Probability that an SBS caching the content lies within `R_SBS`:
/// `1 - exp(-beta B lambda_SBS P_c pi R_SBS^2)`.
pub fn sbs_hit_probability(params: &SystemParams, p_c: f64) -> f64 {
    let kappa = sbs_serving_density(params, p_c);
    one_minus_exp_neg(kappa * PI * params.r_sbs() * params.r_sbs())
}

/// Probability that some MBS lies within `R_MBS`.
pub fn mbs_hit_probability(params: &SystemParams) -> f64 {
    one_minus_exp_neg(params.lambda_mbs() * PI * params.r_mbs() * params.r_mbs())
}

/// Density of SBSs able to serve a content replicated with probability `p_c`.
fn sbs_serving_density(params: &SystemParams, p_c: f64) -> f64 {
    params.beta() * f64::from(params.subchannels_b()) * params.lambda_sbs() * p_c
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(name, format!("probability must lie in [0, 1], got {p}")))
    }
}

fn sbs_density_checked(params: &SystemParams, p_c: f64) -> Result<f64> {
    check_probability("p_c", p_c)?;
    if params.beta() * p_c == 0.0 {
        return Err(Error::ContentUnreachable);
    }
    let kappa = sbs_serving_density(params, p_c);
    if kappa == 0.0 {
        return Err(Error::DegenerateNetwork("small-cell density is zero"));
    }
    Ok(kappa)
}

fn truncated_rayleigh_pdf(density: f64, radius: f64, r: f64) -> Result<f64> {
    if !(0.0..=radius).contains(&r) {
        return Err(Error::Domain { r, max: radius });
    }
    let norm = one_minus_exp_neg(density * PI * radius * radius);
    Ok(2.0 * PI * density * r * (-density * PI * r * r).exp() / norm)
}

fn truncated_rayleigh_cdf(density: f64, radius: f64, r: f64) -> Result<f64> {
    if !(0.0..=radius).contains(&r) {
        return Err(Error::Domain { r, max: radius });
    }
    Ok(one_minus_exp_neg(density * PI * r * r) / one_minus_exp_neg(density * PI * radius * radius))
}

/// Density of the distance to the nearest SBS holding the content, given one
/// exists within `R_SBS`.
pub fn serving_distance_pdf_sbs(params: &SystemParams, p_c: f64, r: f64) -> Result<f64> {
    let kappa = sbs_density_checked(params, p_c)?;
    truncated_rayleigh_pdf(kappa, params.r_sbs(), r)
}

pub fn serving_distance_cdf_sbs(params: &SystemParams, p_c: f64, r: f64) -> Result<f64> {
    let kappa = sbs_density_checked(params, p_c)?;
    truncated_rayleigh_cdf(kappa, params.r_sbs(), r)
}

/// Density of the distance to the nearest MBS, given one exists within `R_MBS`.
pub fn serving_distance_pdf_mbs(params: &SystemParams, r: f64) -> Result<f64> {
    if params.lambda_mbs() == 0.0 {
        return Err(Error::DegenerateNetwork("macro-cell density is zero"));
    }
    truncated_rayleigh_pdf(params.lambda_mbs(), params.r_mbs(), r)
}

pub fn serving_distance_cdf_mbs(params: &SystemParams, r: f64) -> Result<f64> {
    if params.lambda_mbs() == 0.0 {
        return Err(Error::DegenerateNetwork("macro-cell density is zero"));
    }
    truncated_rayleigh_cdf(params.lambda_mbs(), params.r_mbs(), r)
}

/// Interference exponents `K_SBS`, `K_MBS` from which every conditional
/// success probability follows. Computed once per parameter set.
#[derive(Debug, Clone, Copy)]
struct Exponents {
    /// `None` when SBSs access no spectrum and cannot serve.
    sbs_served: Option<f64>,
    mbs_served: f64,
}

impl Exponents {
    fn new(params: &SystemParams) -> Result<Self> {
        let lm = params.lambda_mbs();
        let active = params.active_sbs_density();
        match kernels(params) {
            Ok(k) => Ok(Self {
                sbs_served: Some(lm * k.k1 + active * k.k2),
                mbs_served: lm * k.k3 + active * k.k4,
            }),
            // beta = 0: no SBS transmits on the reference channel.
            Err(Error::InvalidParameter { name: "beta", .. }) => Ok(Self {
                sbs_served: None,
                mbs_served: lm * interference_kernel(params.gamma(), params.alpha())?,
            }),
            Err(e) => Err(e),
        }
    }
}

/// `1 - kappa (1 - e^{-A (K + kappa)}) / ((K + kappa)(1 - e^{-A kappa}))`, `A = pi R^2`.
fn tier_outage(kappa: f64, exponent: f64, radius: f64, what: &'static str) -> Result<f64> {
    let area = PI * radius * radius;
    let combined = exponent + kappa;
    let x_hit = area * kappa;
    let x_all = area * combined;
    let success = kappa * one_minus_exp_neg(x_all) / (combined * one_minus_exp_neg(x_hit));
    let outage = 1.0 - success;
    // Rounding may leave a few ulps outside [0, 1]; anything more is a bug.
    if !(-1e-12..=1.0 + 1e-12).contains(&outage) || outage.is_nan() {
        return Err(Error::OutOfRange {
            what,
            value: outage,
        });
    }
    Ok(outage.clamp(0.0, 1.0))
}

/// Success probability of an SBS link of length `r`, i.e. the interference
/// Laplace transform at `gamma r^alpha / p_SBS`.
pub fn success_given_distance_sbs(params: &SystemParams, r: f64) -> Result<f64> {
    let k = Exponents::new(params)?
        .sbs_served
        .ok_or(Error::ContentUnreachable)?;
    Ok((-PI * r * r * k).exp())
}

/// Success probability of an MBS link of length `r`.
pub fn success_given_distance_mbs(params: &SystemParams, r: f64) -> Result<f64> {
    let k = Exponents::new(params)?.mbs_served;
    Ok((-PI * r * r * k).exp())
}

/// Outage of a request for a content with replication `p_c`, given an SBS
/// holding it lies within `R_SBS`.
pub fn outage_sbs(params: &SystemParams, p_c: f64) -> Result<f64> {
    let kappa = sbs_density_checked(params, p_c)?;
    let k = Exponents::new(params)?
        .sbs_served
        .ok_or(Error::ContentUnreachable)?;
    tier_outage(kappa, k, params.r_sbs(), "SBS outage")
}

/// Outage of a request served by the macro tier, given an MBS within `R_MBS`.
pub fn outage_mbs(params: &SystemParams) -> Result<f64> {
    if params.lambda_mbs() == 0.0 {
        return Err(Error::DegenerateNetwork("macro-cell density is zero"));
    }
    let k = Exponents::new(params)?.mbs_served;
    tier_outage(params.lambda_mbs(), k, params.r_mbs(), "MBS outage")
}

/// Per-content outage and the terms it is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageBreakdown {
    pub p_hit_sbs: f64,
    pub p_hit_mbs: f64,
    pub p_out_sbs: f64,
    pub p_out_mbs: f64,
    pub p_out_total: f64,
}

impl OutageBreakdown {
    /// Mixture of the two tiers and the miss event.
    pub fn combine(p_hit_sbs: f64, p_out_sbs: f64, p_hit_mbs: f64, p_out_mbs: f64) -> Self {
        let p_out_total =
            p_hit_sbs * p_out_sbs + (1.0 - p_hit_sbs) * (p_hit_mbs * p_out_mbs + (1.0 - p_hit_mbs));
        Self {
            p_hit_sbs,
            p_hit_mbs,
            p_out_sbs,
            p_out_mbs,
            p_out_total,
        }
    }
}

/// Evaluator that computes the kernels once and reuses them across contents.
#[derive(Debug, Clone, Copy)]
pub struct OutageModel {
    params: SystemParams,
    exponents: Exponents,
    p_hit_mbs: f64,
    p_out_mbs: f64,
}

impl OutageModel {
    pub fn new(params: &SystemParams) -> Result<Self> {
        let exponents = Exponents::new(params)?;
        let p_out_mbs = if params.lambda_mbs() > 0.0 {
            tier_outage(params.lambda_mbs(), exponents.mbs_served, params.r_mbs(), "MBS outage")?
        } else {
            // Never weighted: the MBS hit probability is zero.
            1.0
        };
        Ok(Self {
            params: *params,
            exponents,
            p_hit_mbs: mbs_hit_probability(params),
            p_out_mbs,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Breakdown for a content with replication probability `p_c`. When no SBS
    /// can hold the content the SBS outage is irrelevant and reported as 1.
    pub fn breakdown(&self, p_c: f64) -> Result<OutageBreakdown> {
        check_probability("p_c", p_c)?;
        let kappa = sbs_serving_density(&self.params, p_c);
        let p_hit_sbs = sbs_hit_probability(&self.params, p_c);
        let p_out_sbs = match self.exponents.sbs_served {
            Some(k) if kappa > 0.0 => tier_outage(kappa, k, self.params.r_sbs(), "SBS outage")?,
            _ => 1.0,
        };
        Ok(OutageBreakdown::combine(
            p_hit_sbs,
            p_out_sbs,
            self.p_hit_mbs,
            self.p_out_mbs,
        ))
    }

    pub fn average(
        &self,
        policy: CachePolicy,
        library: &ContentLibrary,
        requests: &RequestDistribution,
    ) -> Result<f64> {
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
        let mut total = 0.0;
        for (i, q) in requests.weights().iter().enumerate() {
            let p_c = replication_probability(policy, i + 1, library)?;
            total += q * self.breakdown(p_c)?.p_out_total;
        }
        Ok(total)
    }
}

/// Outage breakdown for one content.
pub fn total_outage(params: &SystemParams, p_c: f64) -> Result<OutageBreakdown> {
    OutageModel::new(params)?.breakdown(p_c)
}

/// Request-weighted outage `sum_c q_c P_out(c)`.
pub fn average_outage(
    params: &SystemParams,
    policy: CachePolicy,
    library: &ContentLibrary,
    requests: &RequestDistribution,
) -> Result<f64> {
    OutageModel::new(params)?.average(policy, library, requests)
}

/// The tier outages computed from their defining integrals,
/// `int_0^R [1 - P(SIR > gamma | r)] f(r) dr`, by quadrature.
pub mod integral {
    use super::*;

    const TOL: Tolerance = Tolerance {
        abs: 1e-14,
        rel: 1e-12,
        max_intervals: 4000,
    };

    pub fn outage_sbs(params: &SystemParams, p_c: f64) -> Result<f64> {
        // Validates reachability before integrating.
        serving_distance_pdf_sbs(params, p_c, 0.0)?;
        let est = quadrature::integrate(
            |r| {
                let link = success_given_distance_sbs(params, r).unwrap_or(f64::NAN);
                (1.0 - link) * serving_distance_pdf_sbs(params, p_c, r).unwrap_or(f64::NAN)
            },
            0.0,
            params.r_sbs(),
            TOL,
        )?;
        Ok(est.value)
    }

    pub fn outage_mbs(params: &SystemParams) -> Result<f64> {
        serving_distance_pdf_mbs(params, 0.0)?;
        let est = quadrature::integrate(
            |r| {
                let link = success_given_distance_mbs(params, r).unwrap_or(f64::NAN);
                (1.0 - link) * serving_distance_pdf_mbs(params, r).unwrap_or(f64::NAN)
            },
            0.0,
            params.r_mbs(),
            TOL,
        )?;
        Ok(est.value)
    }
}
