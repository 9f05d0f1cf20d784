use hetcache::sim::{
    sample_ppp, simulate_request, CacheSet, MonteCarlo, NetworkRealization, Point, SimWindow, Stream, Streams,
};
use hetcache::{CachePolicy, ContentLibrary, RequestDistribution, SystemParams};

#[test]
fn outage_without_caching_grows_with_density() {
    let lib = ContentLibrary::new(100, 0).unwrap();
    let q = RequestDistribution::zipf(100, 0.8).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for lambda in [0.002, 0.01, 0.03, 0.1] {
        let p = SystemParams::builder().lambda_sbs(lambda).build().unwrap();
        let mc = MonteCarlo::for_params(&p).with_budget(20, 1).with_seed(4);
        let est = mc.estimate_outage(&p, CachePolicy::Popularity, &lib, &q).unwrap().average;
        if let Some((m, se)) = prev {
            let slack = (se * se + est.std_error * est.std_error).sqrt();
            assert!(est.mean >= m - slack, "lambda {lambda}: {} after {m}", est.mean);
        }
        prev = Some((est.mean, est.std_error));
    }
}

#[test]
fn same_seed_same_estimate() {
    let p = SystemParams::builder().lambda_sbs(0.02).build().unwrap();
    let lib = ContentLibrary::from_normalized(50, 0.2).unwrap();
    let q = RequestDistribution::zipf(50, 1.2).unwrap();
    let mc = MonteCarlo::for_params(&p).with_budget(5, 2).with_seed(99);
    let a = mc.estimate_outage(&p, CachePolicy::Uniform, &lib, &q).unwrap();
    let b = mc.estimate_outage(&p, CachePolicy::Uniform, &lib, &q).unwrap();
    assert_eq!(a, b);
    assert!(a.per_content.iter().all(|e| (0.0..=1.0).contains(&e.mean)));
}

/// Stations inside `inner` first, in sampled order, then the rest.
fn inner_first(points: Vec<Point>, inner: &SimWindow) -> (Vec<Point>, usize) {
    let (mut inside, outside): (Vec<Point>, Vec<Point>) = points.into_iter().partition(|p| inner.contains(*p));
    let n = inside.len();
    inside.extend(outside);
    (inside, n)
}

/// Doubling the window changes the estimate by less than 0.005. Both windows
/// share every station and fading draw of the smaller one (the larger adds
/// the annulus), so the difference is the fraction of requests the extra
/// interference flips.
#[test]
fn window_doubling_sensitivity() {
    let p = SystemParams::default();
    let lib = ContentLibrary::from_normalized(100, 0.3).unwrap();
    let q = RequestDistribution::zipf(100, 0.8).unwrap();
    let small = SimWindow::default_for(&p, 250.0);
    let large = small.doubled();
    let streams = Streams::new(12);
    let trials = 2000u64;
    let (mut ok_small, mut ok_large) = (0u64, 0u64);
    for t in 0..trials {
        let mut geo = streams.rng(Stream::Geometry, &[t]);
        let (mbs, n_mbs) = inner_first(sample_ppp(p.lambda_mbs(), &large, &mut geo), &small);
        let (sbs, n_sbs) = inner_first(sample_ppp(p.active_sbs_density(), &large, &mut geo), &small);
        let top = CacheSet::top(lib.cache_slots(), lib.size());
        let big = NetworkRealization::new(mbs.clone(), sbs.clone(), vec![top.clone(); sbs.len()], lib.size()).unwrap();
        let net = NetworkRealization::new(
            mbs[..n_mbs].to_vec(),
            sbs[..n_sbs].to_vec(),
            vec![top; n_sbs],
            lib.size(),
        )
        .unwrap();
        // Alternate a head content (SBS-served) and a tail one (MBS-served),
        // in proportion to their request mass.
        let content = if (t as f64 / trials as f64) < q.head_mass(lib.cache_slots()) { 1 } else { 60 };
        let a = simulate_request(&net, content, &p, &mut streams.rng(Stream::Fading, &[t])).unwrap();
        let b = simulate_request(&big, content, &p, &mut streams.rng(Stream::Fading, &[t])).unwrap();
        assert_eq!(a.tier, b.tier);
        assert!(b.sir.unwrap_or(0.0) <= a.sir.unwrap_or(0.0));
        ok_small += u64::from(a.success);
        ok_large += u64::from(b.success);
    }
    let shift = (ok_small - ok_large) as f64 / trials as f64;
    assert!(shift < 0.005, "shift {shift}");
}
