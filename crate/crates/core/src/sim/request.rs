use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::realization::NetworkRealization;
use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tier {
    Sbs,
    Mbs,
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServiceOutcome {
    pub tier: Tier,
    pub server_distance: Option<f64>,
    pub sir: Option<f64>,
    pub success: bool,
}

impl ServiceOutcome {
    const MISS: Self = Self {
        tier: Tier::Miss,
        server_distance: None,
        sir: None,
        success: false,
    };
}

/// Which transmitters count as interference at the reference user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceField {
    /// Every MBS and every active SBS except the server.
    #[default]
    All,
    /// Only transmitters farther than the server. This is the geometry the
    /// closed-form Laplace transforms integrate over; useful to separate
    /// model error from estimator error.
    BeyondServer,
}

/// Serve one request for `content` in `net` and decide success under fresh
/// Rayleigh fading.
///
/// Association: nearest active SBS caching the content within `R_SBS`, else
/// nearest MBS within `R_MBS`, else a miss. `rng` supplies the serving-link
/// gain and one seed per tier; each tier's interferer gains come from its own
/// stream in stored order, so appending stations to either tier leaves the
/// draws for existing ones unchanged.
pub fn simulate_request<R: Rng + ?Sized>(
    net: &NetworkRealization,
    content: usize,
    params: &SystemParams,
    rng: &mut R,
) -> Result<ServiceOutcome> {
    simulate_request_with(net, content, params, InterferenceField::All, rng)
}

pub fn simulate_request_with<R: Rng + ?Sized>(
    net: &NetworkRealization,
    content: usize,
    params: &SystemParams,
    field: InterferenceField,
    rng: &mut R,
) -> Result<ServiceOutcome> {
    if content == 0 || content > net.library_size() {
        return Err(Error::InvalidRank {
            rank: content,
            size: net.library_size(),
        });
    }
    let server = match associate(net, content, params) {
        Some(s) => s,
        None => return Ok(ServiceOutcome::MISS),
    };

    let gains = net.path_gains(params.alpha());
    let p_mbs = params.p_mbs();
    // Active SBSs exist only when beta > 0, so the power is defined whenever used.
    let p_sbs = params.p_sbs().unwrap_or(0.0);

    let h: f64 = rng.sample(Exp1);
    let mut mbs_fading = ChaCha8Rng::seed_from_u64(rng.random());
    let mut sbs_fading = ChaCha8Rng::seed_from_u64(rng.random());
    let (tier, index, distance) = server;
    let signal = match tier {
        Tier::Sbs => p_sbs * h * gains.sbs[index],
        Tier::Mbs => p_mbs * h * gains.mbs[index],
        Tier::Miss => unreachable!(),
    };

    let cutoff = match field {
        InterferenceField::All => 0.0,
        InterferenceField::BeyondServer => distance,
    };
    let mut interference = 0.0;
    for (i, (&g, &d)) in gains.mbs.iter().zip(net.mbs_distances()).enumerate() {
        let h: f64 = mbs_fading.sample(Exp1);
        if (tier == Tier::Mbs && i == index) || d < cutoff {
            continue;
        }
        interference += p_mbs * h * g;
    }
    for (i, (&g, &d)) in gains.sbs.iter().zip(net.sbs_distances()).enumerate() {
        let h: f64 = sbs_fading.sample(Exp1);
        if (tier == Tier::Sbs && i == index) || d < cutoff {
            continue;
        }
        interference += p_sbs * h * g;
    }

    let sir = if interference > 0.0 {
        signal / interference
    } else {
        f64::INFINITY
    };
    Ok(ServiceOutcome {
        tier,
        server_distance: Some(distance),
        sir: Some(sir),
        success: sir > params.gamma(),
    })
}

/// Serving station for `content`: (tier, index in that tier's list, distance).
pub(crate) fn associate(
    net: &NetworkRealization,
    content: usize,
    params: &SystemParams,
) -> Option<(Tier, usize, f64)> {
    let nearest = |dists: &[f64], radius: f64, eligible: &dyn Fn(usize) -> bool| {
        dists
            .iter()
            .enumerate()
            .filter(|&(i, &d)| d <= radius && eligible(i))
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &d)| (i, d))
    };
    if let Some((i, d)) = nearest(net.sbs_distances(), params.r_sbs(), &|i| net.caches(i, content)) {
        return Some((Tier::Sbs, i, d));
    }
    nearest(net.mbs_distances(), params.r_mbs(), &|_| true).map(|(i, d)| (Tier::Mbs, i, d))
}
