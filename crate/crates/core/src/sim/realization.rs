use std::sync::OnceLock;

use rand::seq::index;
use rand::Rng;

use super::rng::{Stream, Streams};
use super::window::{sample_ppp, Point, SimWindow};
use crate::error::{Error, Result};
use crate::params::{CachePolicy, ContentLibrary, SystemParams};

/// Set of content ranks held by one SBS, as a bitset over the library.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheSet {
    bits: Box<[u64]>,
    len: usize,
}

impl CacheSet {
    pub fn empty(library_size: usize) -> Self {
        Self {
            bits: vec![0; library_size.div_ceil(64)].into_boxed_slice(),
            len: 0,
        }
    }

    /// The `d` most popular contents, ranks `1..=d`.
    pub fn top(d: usize, library_size: usize) -> Self {
        Self::from_ranks(1..=d.min(library_size), library_size)
    }

    pub fn from_ranks(ranks: impl IntoIterator<Item = usize>, library_size: usize) -> Self {
        let mut set = Self::empty(library_size);
        for r in ranks {
            set.insert(r);
        }
        set
    }

    fn insert(&mut self, rank: usize) {
        assert!(rank >= 1 && rank <= self.bits.len() * 64, "rank {rank} out of range");
        let (w, b) = ((rank - 1) / 64, (rank - 1) % 64);
        if self.bits[w] & (1 << b) == 0 {
            self.bits[w] |= 1 << b;
            self.len += 1;
        }
    }

    pub fn contains(&self, rank: usize) -> bool {
        if rank == 0 {
            return false;
        }
        let (w, b) = ((rank - 1) / 64, (rank - 1) % 64);
        self.bits.get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ranks(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter(move |b| word & (1 << b) != 0).map(move |b| w * 64 + b + 1)
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PathGains {
    pub alpha: f64,
    pub mbs: Vec<f64>,
    pub sbs: Vec<f64>,
}

/// One snapshot of the network: MBS locations, SBSs active on the reference
/// sub-channel, and what each active SBS caches.
#[derive(Debug)]
pub struct NetworkRealization {
    mbs_points: Vec<Point>,
    active_sbs_points: Vec<Point>,
    sbs_caches: Vec<CacheSet>,
    /// Set for realizations drawn to serve one content only: which active SBSs
    /// hold it. `sbs_caches` is then empty.
    holders: Option<(usize, Vec<bool>)>,
    library_size: usize,
    mbs_dist: Vec<f64>,
    sbs_dist: Vec<f64>,
    gains: OnceLock<PathGains>,
}

impl NetworkRealization {
    pub fn new(
        mbs_points: Vec<Point>,
        active_sbs_points: Vec<Point>,
        sbs_caches: Vec<CacheSet>,
        library_size: usize,
    ) -> Result<Self> {
        if library_size == 0 {
            return Err(Error::InvalidLibrary);
        }
        if sbs_caches.len() != active_sbs_points.len() {
            return Err(Error::param(
                "sbs_caches",
                format!(
                    "{} caches for {} active SBSs",
                    sbs_caches.len(),
                    active_sbs_points.len()
                ),
            ));
        }
        Ok(Self::assemble(mbs_points, active_sbs_points, sbs_caches, None, library_size))
    }

    fn assemble(
        mbs_points: Vec<Point>,
        active_sbs_points: Vec<Point>,
        sbs_caches: Vec<CacheSet>,
        holders: Option<(usize, Vec<bool>)>,
        library_size: usize,
    ) -> Self {
        let mbs_dist = mbs_points.iter().map(Point::norm).collect();
        let sbs_dist = active_sbs_points.iter().map(Point::norm).collect();
        Self {
            mbs_points,
            active_sbs_points,
            sbs_caches,
            holders,
            library_size,
            mbs_dist,
            sbs_dist,
            gains: OnceLock::new(),
        }
    }

    pub fn mbs_points(&self) -> &[Point] {
        &self.mbs_points
    }

    pub fn active_sbs_points(&self) -> &[Point] {
        &self.active_sbs_points
    }

    pub fn sbs_caches(&self) -> &[CacheSet] {
        &self.sbs_caches
    }

    /// Whether active SBS `i` caches `content`.
    pub fn caches(&self, i: usize, content: usize) -> bool {
        match &self.holders {
            Some((c, holds)) => {
                assert_eq!(*c, content, "realization was drawn for content {c}");
                holds[i]
            }
            None => self.sbs_caches[i].contains(content),
        }
    }

    pub fn library_size(&self) -> usize {
        self.library_size
    }

    pub(crate) fn mbs_distances(&self) -> &[f64] {
        &self.mbs_dist
    }

    pub(crate) fn sbs_distances(&self) -> &[f64] {
        &self.sbs_dist
    }

    /// `d^-alpha` for every station, cached for the first exponent asked for.
    pub(crate) fn path_gains(&self, alpha: f64) -> std::borrow::Cow<'_, PathGains> {
        let gain = |d: &f64| {
            if alpha == 4.0 {
                let d2 = d * d;
                1.0 / (d2 * d2)
            } else {
                d.powf(-alpha)
            }
        };
        let compute = || PathGains {
            alpha,
            mbs: self.mbs_dist.iter().map(gain).collect(),
            sbs: self.sbs_dist.iter().map(gain).collect(),
        };
        let cached = self.gains.get_or_init(compute);
        if cached.alpha == alpha {
            std::borrow::Cow::Borrowed(cached)
        } else {
            std::borrow::Cow::Owned(compute())
        }
    }
}

/// Draw the network realization addressed by `path`.
///
/// Active SBSs are sampled directly at density `beta * lambda_SBS`, which is
/// the law of an independently thinned PPP. Under PCP every active SBS caches
/// the top `d` contents; under UCP each draws its own uniform `d`-subset.
pub fn realize_network(
    params: &SystemParams,
    policy: CachePolicy,
    library: &ContentLibrary,
    window: &SimWindow,
    streams: &Streams,
    path: &[u64],
) -> Result<NetworkRealization> {
    let mut geometry = streams.rng(Stream::Geometry, path);
    let mbs = sample_ppp(params.lambda_mbs(), window, &mut geometry);
    let sbs = sample_ppp(params.active_sbs_density(), window, &mut geometry);

    let (n, d) = (library.size(), library.cache_slots());
    let caches = match policy {
        CachePolicy::Popularity => vec![CacheSet::top(d, n); sbs.len()],
        CachePolicy::Uniform => {
            let mut rng = streams.rng(Stream::Caches, path);
            (0..sbs.len())
                .map(|_| {
                    let picked = index::sample(&mut rng, n, d);
                    CacheSet::from_ranks(picked.into_iter().map(|i| i + 1), n)
                })
                .collect()
        }
    };
    NetworkRealization::new(mbs, sbs, caches, n)
}

/// Realization for a request of `content` only. Instead of whole cache sets,
/// each active SBS gets just the indicator of holding `content`: a constant
/// under PCP, independent Bernoulli(d/|C|) under UCP, which is the marginal law
/// of a uniform `d`-subset.
pub(crate) fn realize_for_content(
    params: &SystemParams,
    policy: CachePolicy,
    library: &ContentLibrary,
    content: usize,
    window: &SimWindow,
    streams: &Streams,
    path: &[u64],
) -> Result<NetworkRealization> {
    library.check_rank(content)?;
    let mut geometry = streams.rng(Stream::Geometry, path);
    let mbs = sample_ppp(params.lambda_mbs(), window, &mut geometry);
    let sbs = sample_ppp(params.active_sbs_density(), window, &mut geometry);
    let holds = match policy {
        CachePolicy::Popularity => vec![content <= library.cache_slots(); sbs.len()],
        CachePolicy::Uniform => {
            let p = library.normalized_cache();
            let mut rng = streams.rng(Stream::Caches, path);
            (0..sbs.len()).map(|_| rng.random_bool(p)).collect()
        }
    };
    Ok(NetworkRealization::assemble(mbs, sbs, Vec::new(), Some((content, holds)), library.size()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_set_basics() {
        let s = CacheSet::from_ranks([1, 64, 65, 100, 64], 100);
        assert_eq!(s.len(), 4);
        assert!(s.contains(64) && s.contains(65) && !s.contains(2) && !s.contains(0));
        assert!(!s.contains(101));
        assert_eq!(s.ranks().collect::<Vec<_>>(), vec![1, 64, 65, 100]);
        assert_eq!(CacheSet::top(3, 100).ranks().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    fn setup(policy: CachePolicy, d: usize) -> NetworkRealization {
        let p = SystemParams::default();
        let lib = ContentLibrary::new(100, d).unwrap();
        let w = SimWindow::default_for(&p, 250.0);
        realize_network(&p, policy, &lib, &w, &Streams::new(3), &[0]).unwrap()
    }

    #[test]
    fn popularity_caches_are_identical() {
        let net = setup(CachePolicy::Popularity, 30);
        assert!(!net.sbs_caches().is_empty());
        let top = CacheSet::top(30, 100);
        assert!(net.sbs_caches().iter().all(|c| *c == top));
    }

    #[test]
    fn uniform_full_cache_is_whole_library() {
        let net = setup(CachePolicy::Uniform, 100);
        assert!(net.sbs_caches().iter().all(|c| c.len() == 100));
    }

    #[test]
    fn uniform_inclusion_frequency() {
        let net = setup(CachePolicy::Uniform, 30);
        let n = net.sbs_caches().len();
        assert!(n > 9000, "{n} SBSs");
        assert!(net.sbs_caches().iter().all(|c| c.len() == 30));
        let sigma = (0.3 * 0.7 / n as f64).sqrt();
        for rank in [1, 17, 50, 100] {
            let freq = net.sbs_caches().iter().filter(|c| c.contains(rank)).count() as f64 / n as f64;
            assert!((freq - 0.3).abs() < 3.0 * sigma, "rank {rank}: {freq}");
        }
    }

    #[test]
    fn mismatched_caches_rejected() {
        let r = NetworkRealization::new(vec![], vec![Point::new(1.0, 0.0)], vec![], 10);
        assert!(r.is_err());
    }

    #[test]
    fn single_content_realization_holder_law() {
        let p = SystemParams::default();
        let lib = ContentLibrary::new(100, 30).unwrap();
        let w = SimWindow::default_for(&p, 250.0);
        let streams = Streams::new(8);
        let net = realize_for_content(&p, CachePolicy::Uniform, &lib, 7, &w, &streams, &[0, 7]).unwrap();
        let n = net.active_sbs_points().len();
        let held = (0..n).filter(|&i| net.caches(i, 7)).count() as f64 / n as f64;
        assert!((held - 0.3).abs() < 3.0 * (0.3 * 0.7 / n as f64).sqrt(), "{held}");
        // Same geometry as the full realization on the same path.
        let full = realize_network(&p, CachePolicy::Uniform, &lib, &w, &streams, &[0, 7]).unwrap();
        assert_eq!(full.active_sbs_points(), net.active_sbs_points());
        for (rank, want) in [(30, true), (31, false)] {
            let pcp = realize_for_content(&p, CachePolicy::Popularity, &lib, rank, &w, &streams, &[1]).unwrap();
            assert!((0..pcp.active_sbs_points().len()).all(|i| pcp.caches(i, rank) == want));
        }
    }
}
