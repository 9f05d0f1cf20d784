//! Parameter sweeps over one or two configuration fields, evaluated with the
//! closed form, the simulator, or both, and serialised as CSV.
//!
//! A sweep file uses the same `key = value` format as a model configuration
//! plus the sweep keys:
//!
//! ```text
//! sweep = density                  # density | storage_bandwidth | sir_threshold
//! axis1 = lambda_sbs
//! axis1_values = 0.001, 0.01, 0.1, 1
//! series = ucp:0, pcp:0.8          # policy[:zipf skew], or `none`
//! engines = analytic, montecarlo
//! ```

use std::fmt;
use std::io;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::average_outage;
use crate::config::{Entry, Field, KeyValues, ModelConfig};
use crate::error::{Error, Result};
use crate::params::CachePolicy;
use crate::sim::Streams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Density,
    StorageBandwidth,
    SirThreshold,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Density => "density",
            SweepKind::StorageBandwidth => "storage_bandwidth",
            SweepKind::SirThreshold => "sir_threshold",
        }
    }

    fn expected_axes(self) -> (Field, Option<Field>) {
        match self {
            SweepKind::Density => (Field::LambdaSbs, None),
            SweepKind::StorageBandwidth => (Field::DTilde, Some(Field::Beta)),
            SweepKind::SirThreshold => (Field::Gamma, None),
        }
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "density" => Ok(SweepKind::Density),
            "storage_bandwidth" => Ok(SweepKind::StorageBandwidth),
            "sir_threshold" => Ok(SweepKind::SirThreshold),
            other => Err(Error::config("sweep", format!("unknown sweep kind `{other}`"))),
        }
    }
}

/// A swept field and its grid, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    field: Field,
    values: Vec<f64>,
}

impl Axis {
    pub fn new(field: Field, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config(field.name(), "axis needs at least one value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(field.name(), "axis values must be finite"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(field.name(), "axis values must be strictly increasing"));
        }
        Ok(Self { field, values })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One curve: a caching policy with a Zipf request skew, or no caching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Series {
    /// `None` means no caching (zero cache slots).
    pub policy: Option<CachePolicy>,
    pub delta: f64,
}

impl Series {
    pub const NO_CACHE: Series = Series {
        policy: None,
        delta: 0.0,
    };

    pub fn new(policy: CachePolicy, delta: f64) -> Self {
        Self {
            policy: Some(policy),
            delta,
        }
    }

    fn apply(&self, cfg: &ModelConfig) -> Result<ModelConfig> {
        match self.policy {
            None => {
                let mut cfg = cfg.with_field(Field::DTilde, 0.0)?;
                cfg.policy = CachePolicy::Popularity;
                Ok(cfg)
            }
            Some(policy) => {
                let mut cfg = cfg.with_field(Field::Delta, self.delta)?;
                cfg.policy = policy;
                Ok(cfg)
            }
        }
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.policy {
            None => f.write_str("none"),
            Some(p) => write!(f, "{}:{}", p.as_str(), self.delta),
        }
    }
}

impl FromStr for Series {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(Series::NO_CACHE);
        }
        let (policy, delta) = match s.split_once(':') {
            Some((p, d)) => (p, d.trim().parse::<f64>().map_err(|e| Error::config("series", format!("bad skew in `{s}`: {e}")))?),
            None => (s, 0.0),
        };
        let policy = policy
            .parse::<CachePolicy>()
            .map_err(|_| Error::config("series", format!("unknown policy in `{s}`")))?;
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::config("series", format!("skew must be finite and nonnegative in `{s}`")));
        }
        Ok(Series::new(policy, delta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    MonteCarlo,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::MonteCarlo => "montecarlo",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "analytic" => Ok(Engine::Analytic),
            "montecarlo" | "mc" => Ok(Engine::MonteCarlo),
            other => Err(Error::config("engines", format!("unknown engine `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// Base operating point; each grid point overrides the axis fields.
    pub base: ModelConfig,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub series: Vec<Series>,
    pub engines: Vec<Engine>,
}

fn required(kv: &mut KeyValues, key: &str) -> Result<Entry> {
    kv.take(key)
        .ok_or_else(|| Error::config(key, "missing required key"))
}

fn axis_from(kv: &mut KeyValues, name: &str, values: &str) -> Result<Option<Axis>> {
    let Some(e) = kv.take(name) else {
        return match kv.take(values) {
            Some(v) => Err(Error::Config {
                key: Some(v.key),
                line: Some(v.line),
                message: format!("set without `{name}`"),
            }),
            None => Ok(None),
        };
    };
    let field: Field = e.value.parse().map_err(|_| Error::Config {
        key: Some(e.key.clone()),
        line: Some(e.line),
        message: format!("`{}` is not a configuration field", e.value),
    })?;
    let v = required(kv, values)?;
    let axis = Axis::new(field, v.list()?).map_err(|err| Error::Config {
        key: Some(v.key.clone()),
        line: Some(v.line),
        message: err.to_string(),
    })?;
    Ok(Some(axis))
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let kind: SweepKind = {
            let e = required(&mut kv, "sweep")?;
            e.value.parse().map_err(|err: Error| Error::Config {
                key: Some(e.key.clone()),
                line: Some(e.line),
                message: err.to_string(),
            })?
        };
        let axis1 = axis_from(&mut kv, "axis1", "axis1_values")?
            .ok_or_else(|| Error::config("axis1", "missing required key"))?;
        let axis2 = axis_from(&mut kv, "axis2", "axis2_values")?;
        let series = match kv.take("series") {
            Some(e) => e.list::<Series>()?,
            None => Vec::new(),
        };
        let engines = match kv.take("engines") {
            Some(e) => e.list::<Engine>()?,
            None => vec![Engine::Analytic],
        };
        let base = ModelConfig::from_entries(&mut kv)?;
        kv.finish()?;
        let series = if series.is_empty() {
            vec![Series::new(base.policy, base.delta)]
        } else {
            series
        };
        let spec = SweepSpec {
            kind,
            base,
            axis1,
            axis2,
            series,
            engines,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl SweepSpec {
    /// Shape checks shared by all sweeps, then the kind-specific axis contract.
    pub fn validate(&self) -> Result<()> {
        if self.engines.is_empty() {
            return Err(Error::config("engines", "need at least one engine"));
        }
        if self.series.is_empty() {
            return Err(Error::config("series", "need at least one series"));
        }
        for (i, e) in self.engines.iter().enumerate() {
            if self.engines[..i].contains(e) {
                return Err(Error::config("engines", format!("engine `{e}` listed twice")));
            }
        }
        for (i, s) in self.series.iter().enumerate() {
            if self.series[..i].contains(s) {
                return Err(Error::config("series", format!("series `{s}` listed twice")));
            }
        }
        if let Some(a2) = &self.axis2 {
            if a2.field == self.axis1.field {
                return Err(Error::config("axis2", "both axes sweep the same field"));
            }
        }
        let (want1, want2) = self.kind.expected_axes();
        if self.axis1.field != want1 {
            return Err(Error::config(
                "axis1",
                format!("a {} sweep runs over `{want1}`, not `{}`", self.kind.as_str(), self.axis1.field),
            ));
        }
        match (want2, &self.axis2) {
            (None, Some(_)) => {
                return Err(Error::config("axis2", format!("a {} sweep has one axis", self.kind.as_str())));
            }
            (Some(f), None) => {
                return Err(Error::config("axis2", format!("a {} sweep needs `axis2 = {f}`", self.kind.as_str())));
            }
            (Some(f), Some(a)) if a.field != f => {
                return Err(Error::config(
                    "axis2",
                    format!("a {} sweep runs over `{f}`, not `{}`", self.kind.as_str(), a.field),
                ));
            }
            _ => {}
        }
        if self.kind == SweepKind::StorageBandwidth && self.series.contains(&Series::NO_CACHE) {
            return Err(Error::config("series", "`none` fixes the cache size, which this sweep varies"));
        }
        // Every grid point must be a valid model before anything runs.
        for point in self.grid() {
            self.point_config(&point, &self.series[0])?;
        }
        Ok(())
    }

    pub fn axis_names(&self) -> Vec<String> {
        std::iter::once(&self.axis1)
            .chain(&self.axis2)
            .map(|a| a.field.name().to_owned())
            .collect()
    }

    /// Grid points in row-major order (axis1 outer).
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for &a in &self.axis1.values {
            match &self.axis2 {
                None => out.push(vec![a]),
                Some(ax2) => out.extend(ax2.values.iter().map(|&b| vec![a, b])),
            }
        }
        out
    }

    fn point_config(&self, point: &[f64], series: &Series) -> Result<ModelConfig> {
        let mut cfg = series.apply(&self.base)?;
        for (axis, &v) in std::iter::once(&self.axis1).chain(&self.axis2).zip(point) {
            cfg = cfg.with_field(axis.field, v)?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: Vec<f64>,
    /// Series label (`ucp:0`, `pcp:0.8`, `none`).
    pub policy: String,
    pub engine: Engine,
    pub avg_outage: f64,
    /// Present for simulated rows only.
    pub std_error: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

const TRAILING_COLUMNS: [&str; 5] = ["policy", "engine", "avg_outage", "std_error", "wall_ms"];

/// 17 significant digits: enough to round-trip any `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl SweepResult {
    pub fn header(&self) -> Vec<String> {
        self.axis_names
            .iter()
            .cloned()
            .chain(TRAILING_COLUMNS.iter().map(|s| (*s).to_owned()))
            .collect()
    }

    /// Rows matching a series label and engine, in grid order.
    pub fn select<'a>(&'a self, policy: &'a str, engine: Engine) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.policy == policy && r.engine == engine)
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.axis.iter().map(|&v| fmt_f64(v)).collect();
            rec.push(row.policy.clone());
            rec.push(row.engine.as_str().to_owned());
            rec.push(fmt_f64(row.avg_outage));
            rec.push(row.std_error.map(fmt_f64).unwrap_or_default());
            rec.push(fmt_f64(row.wall_ms));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let n_axes = headers
            .len()
            .checked_sub(TRAILING_COLUMNS.len())
            .filter(|_| headers.ends_with(&TRAILING_COLUMNS.map(String::from)))
            .ok_or_else(|| Error::config("header", format!("unexpected columns {headers:?}")))?;
        let num = |s: &str, line: usize| -> Result<f64> {
            s.parse().map_err(|_| Error::Config {
                key: None,
                line: Some(line),
                message: format!("bad number `{s}`"),
            })
        };
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let axis = (0..n_axes).map(|k| num(&rec[k], line)).collect::<Result<Vec<_>>>()?;
            let std_error = match &rec[n_axes + 3] {
                "" => None,
                s => Some(num(s, line)?),
            };
            rows.push(SweepRow {
                axis,
                policy: rec[n_axes].to_owned(),
                engine: rec[n_axes + 1].parse()?,
                avg_outage: num(&rec[n_axes + 2], line)?,
                std_error,
                wall_ms: num(&rec[n_axes + 4], line)?,
            });
        }
        Ok(Self {
            axis_names: headers[..n_axes].to_vec(),
            rows,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    /// Record wall time per row; off gives `wall_ms = 0` and byte-stable output.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: 0, timing: true }
    }
}

/// Run any sweep. Rows come out ordered by grid point, then series, then engine.
/// Simulated rows of one series share their seed across the grid.
pub fn run_sweep(spec: &SweepSpec, opts: RunOptions) -> Result<SweepResult> {
    spec.validate()?;
    let mut series = spec.series.clone();
    if matches!(spec.kind, SweepKind::Density | SweepKind::SirThreshold) && !series.contains(&Series::NO_CACHE) {
        series.push(Series::NO_CACHE);
    }
    let grid = spec.grid();
    let streams = Streams::new(opts.seed);
    let jobs: Vec<(usize, usize, Engine)> = (0..grid.len())
        .flat_map(|g| (0..series.len()).flat_map(move |s| spec.engines.iter().map(move |&e| (g, s, e))))
        .collect();

    let rows = jobs
        .into_par_iter()
        .map(|(g, s, engine)| {
            let start = Instant::now();
            let cfg = spec.point_config(&grid[g], &series[s])?;
            let library = cfg.library()?;
            let requests = cfg.requests()?;
            let (avg_outage, std_error) = match engine {
                Engine::Analytic => (average_outage(&cfg.params, cfg.policy, &library, &requests)?, None),
                Engine::MonteCarlo => {
                    // One seed per series: grid points share random numbers, so a
                    // curve moves only where the model does.
                    let seed = streams.derive_seed(&[s as u64]);
                    let est = cfg
                        .monte_carlo(seed)?
                        .estimate_outage(&cfg.params, cfg.policy, &library, &requests)?;
                    (est.average.mean, Some(est.average.std_error))
                }
            };
            let wall_ms = if opts.timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            Ok(SweepRow {
                axis: grid[g].clone(),
                policy: series[s].to_string(),
                engine,
                avg_outage,
                std_error,
                wall_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis_names: spec.axis_names(),
        rows,
    })
}

fn run_kind(spec: &SweepSpec, kind: SweepKind, opts: RunOptions) -> Result<SweepResult> {
    if spec.kind != kind {
        return Err(Error::config(
            "sweep",
            format!("expected a {} sweep, got {}", kind.as_str(), spec.kind.as_str()),
        ));
    }
    run_sweep(spec, opts)
}

/// Outage against SBS density; a no-caching series is always included.
pub fn sweep_density(spec: &SweepSpec, opts: RunOptions) -> Result<SweepResult> {
    run_kind(spec, SweepKind::Density, opts)
}

/// Average outage over the (normalised cache size, spectrum access) grid.
pub fn sweep_storage_bandwidth(spec: &SweepSpec, opts: RunOptions) -> Result<SweepResult> {
    run_kind(spec, SweepKind::StorageBandwidth, opts)
}

/// Outage against SIR threshold in dB; a no-caching series is always included.
pub fn sweep_sir_threshold(spec: &SweepSpec, opts: RunOptions) -> Result<SweepResult> {
    run_kind(spec, SweepKind::SirThreshold, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DENSITY: &str = "
        sweep = density
        axis1 = lambda_sbs
        axis1_values = 0.01, 0.1
        series = ucp:0, pcp:0.8
        engines = analytic
    ";

    #[test]
    fn density_rows_include_baseline() {
        let spec: SweepSpec = DENSITY.parse().unwrap();
        let res = sweep_density(&spec, RunOptions::default()).unwrap();
        assert_eq!(res.axis_names, ["lambda_sbs"]);
        assert_eq!(res.rows.len(), 2 * 3);
        let labels: Vec<&str> = res.rows[..3].iter().map(|r| r.policy.as_str()).collect();
        assert_eq!(labels, ["ucp:0", "pcp:0.8", "none"]);
        assert!(res.rows.iter().all(|r| r.std_error.is_none()));
    }

    #[test]
    fn single_point_gives_one_row_per_engine() {
        let spec: SweepSpec = "
            sweep = sir_threshold
            axis1 = gamma
            axis1_values = -10
            series = none
            engines = analytic, montecarlo
            realizations = 2
        "
        .parse()
        .unwrap();
        let res = sweep_sir_threshold(&spec, RunOptions::default()).unwrap();
        assert_eq!(res.rows.len(), 2);
        assert_eq!(res.rows[1].engine, Engine::MonteCarlo);
        assert!(res.rows[0].std_error.is_none() && res.rows[1].std_error.is_some());
    }

    #[test]
    fn simulated_threshold_curve_is_pathwise_monotone() {
        let spec: SweepSpec = "
            sweep = sir_threshold
            axis1 = gamma
            axis1_values = -20, -5, 0, 5
            series = ucp:0.8
            engines = montecarlo
            lambda_sbs = 0.01
            realizations = 3
        "
        .parse()
        .unwrap();
        let res = run_sweep(&spec, RunOptions { seed: 5, timing: false }).unwrap();
        for label in ["ucp:0.8", "none"] {
            let curve: Vec<f64> = res.select(label, Engine::MonteCarlo).map(|r| r.avg_outage).collect();
            assert_eq!(curve.len(), 4);
            assert!(curve.windows(2).all(|w| w[0] <= w[1]), "{label}: {curve:?}");
        }
    }

    #[test]
    fn axis_misconfiguration_rejected() {
        for (text, needle) in [
            ("sweep = density\naxis1 = beta\naxis1_values = 0.1", "axis1"),
            ("sweep = density\naxis1 = lambda_sbs\naxis1_values = 0.2, 0.1", "increasing"),
            ("sweep = density\naxis1 = lambda_sbs\naxis1_values =", "at least one"),
            ("sweep = density\naxis1 = lambda_sbz\naxis1_values = 0.1", "lambda_sbz"),
            ("sweep = density\naxis1 = lambda_sbs", "axis1_values"),
            ("sweep = storage_bandwidth\naxis1 = d_tilde\naxis1_values = 0.1", "axis2"),
            ("sweep = density\naxis1 = lambda_sbs\naxis1_values = -1", "lambda_sbs"),
            ("sweep = sweepy\naxis1 = gamma\naxis1_values = 1", "sweepy"),
            ("sweep = density\naxis1 = lambda_sbs\naxis1_values = 0.1\nengines = mcmc", "mcmc"),
            ("sweep = density\naxis1 = lambda_sbs\naxis1_values = 0.1\nbogus = 1", "bogus"),
        ] {
            let err = text.parse::<SweepSpec>().unwrap_err();
            assert!(err.is_configuration(), "{text}: {err}");
            assert!(err.to_string().contains(needle), "{text}: {err}");
        }
    }

    #[test]
    fn wrong_kind_runner_rejected() {
        let spec: SweepSpec = DENSITY.parse().unwrap();
        assert!(sweep_sir_threshold(&spec, RunOptions::default()).unwrap_err().is_configuration());
    }

    #[test]
    fn storage_grid_full_cache_row_policy_independent() {
        let spec: SweepSpec = "
            sweep = storage_bandwidth
            axis1 = d_tilde
            axis1_values = 0.5, 1
            axis2 = beta
            axis2_values = 0.1, 1
            series = ucp:0.8, pcp:0.8
        "
        .parse()
        .unwrap();
        let res = sweep_storage_bandwidth(&spec, RunOptions::default()).unwrap();
        assert_eq!(res.rows.len(), 4 * 2);
        for pair in res.rows.chunks(2).filter(|c| c[0].axis[0] == 1.0) {
            assert_eq!(pair[0].avg_outage.to_bits(), pair[1].avg_outage.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let res = SweepResult {
            axis_names: vec!["d_tilde".into(), "beta".into()],
            rows: vec![
                SweepRow {
                    axis: vec![0.1, 1.0 / 3.0],
                    policy: "pcp:0.8".into(),
                    engine: Engine::Analytic,
                    avg_outage: 0.123_456_789_012_345_67,
                    std_error: None,
                    wall_ms: 0.25,
                },
                SweepRow {
                    axis: vec![f64::MIN_POSITIVE, 1e300],
                    policy: "ucp:0".into(),
                    engine: Engine::MonteCarlo,
                    avg_outage: std::f64::consts::PI / 7.0,
                    std_error: Some(5e-3 + f64::EPSILON),
                    wall_ms: 12.0,
                },
            ],
        };
        let text = res.to_csv_string().unwrap();
        assert!(text.starts_with("d_tilde,beta,policy,engine,avg_outage,std_error,wall_ms\n"));
        let back = SweepResult::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, res);
        assert_eq!(back.to_csv_string().unwrap(), text);
    }

    #[test]
    fn series_tokens() {
        assert_eq!("pcp:0.8".parse::<Series>().unwrap(), Series::new(CachePolicy::Popularity, 0.8));
        assert_eq!("ucp".parse::<Series>().unwrap(), Series::new(CachePolicy::Uniform, 0.0));
        assert_eq!("none".parse::<Series>().unwrap().to_string(), "none");
        assert_eq!(Series::new(CachePolicy::Uniform, 1.2).to_string(), "ucp:1.2");
        assert!("lru:1".parse::<Series>().is_err());
        assert!("pcp:-1".parse::<Series>().is_err());
    }
}
