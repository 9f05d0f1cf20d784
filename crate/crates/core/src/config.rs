//! Plain-text `key = value` configuration.
//!
//! One assignment per line; `#` starts a comment, blank lines are ignored.
//! Keys mirror the model's field names. Units at this boundary: densities per
//! m², radii in m, powers in dBm, `gamma` in dB. Keys left out keep the
//! reference configuration's value.
//!
//! ```text
//! # reference point
//! lambda_mbs = 1e-4
//! lambda_sbs = 0.2
//! gamma = -10        # dB
//! p_max_mbs = 43     # dBm
//! policy = pcp
//! d_tilde = 0.3
//! delta = 0.8
//! ```

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{
    watts_to_dbm, linear_to_db, CachePolicy, ContentLibrary, RequestDistribution, SystemParams,
};
use crate::sim::{InterferenceField, MonteCarlo, SimWindow, DEFAULT_GUARD};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl Entry {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Config {
            key: Some(self.key.clone()),
            line: Some(self.line),
            message: message.into(),
        }
    }

    pub fn parse<T: FromStr>(&self) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.value
            .parse()
            .map_err(|e: T::Err| self.error(format!("cannot parse `{}`: {e}", self.value)))
    }

    pub fn list<T: FromStr>(&self) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        self.value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e: T::Err| self.error(format!("cannot parse list item `{s}`: {e}")))
            })
            .collect()
    }
}

/// Parsed assignments, consumed key by key.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: Vec<Entry>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                key: None,
                line: Some(line),
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config {
                    key: None,
                    line: Some(line),
                    message: "missing key".into(),
                });
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(Error::Config {
                    key: Some(key.into()),
                    line: Some(line),
                    message: format!("duplicate key (first set on line {})", prev.line),
                });
            }
            entries.push(Entry {
                line,
                key: key.into(),
                value: value.trim().into(),
            });
        }
        Ok(Self { entries })
    }

    pub fn take(&mut self, key: &str) -> Option<Entry> {
        let pos = self.entries.iter().position(|e| e.key == key)?;
        Some(self.entries.remove(pos))
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            Some(e) => Err(e.error("unknown key")),
            None => Ok(()),
        }
    }
}

/// A configuration field that can be set from a file or swept along an axis.
/// Values are in configuration units (dB, dBm).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    LambdaMbs,
    LambdaSbs,
    BandwidthW,
    SubchannelsB,
    Beta,
    PMaxMbs,
    PMaxSbs,
    Alpha,
    Gamma,
    RSbs,
    RMbs,
    LibrarySize,
    DTilde,
    Delta,
}

impl Field {
    pub const ALL: [Field; 14] = [
        Field::LambdaMbs,
        Field::LambdaSbs,
        Field::BandwidthW,
        Field::SubchannelsB,
        Field::Beta,
        Field::PMaxMbs,
        Field::PMaxSbs,
        Field::Alpha,
        Field::Gamma,
        Field::RSbs,
        Field::RMbs,
        Field::LibrarySize,
        Field::DTilde,
        Field::Delta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::LambdaMbs => "lambda_mbs",
            Field::LambdaSbs => "lambda_sbs",
            Field::BandwidthW => "bandwidth_w",
            Field::SubchannelsB => "subchannels_b",
            Field::Beta => "beta",
            Field::PMaxMbs => "p_max_mbs",
            Field::PMaxSbs => "p_max_sbs",
            Field::Alpha => "alpha",
            Field::Gamma => "gamma",
            Field::RSbs => "r_sbs",
            Field::RMbs => "r_mbs",
            Field::LibrarySize => "library_size",
            Field::DTilde => "d_tilde",
            Field::Delta => "delta",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(s, "not a configuration field"))
    }
}

fn integral(field: Field, value: f64) -> Result<u64> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as u64)
    } else {
        Err(Error::config(field.name(), format!("expected a nonnegative integer, got {value}")))
    }
}

impl FromStr for InterferenceField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(InterferenceField::All),
            "beyond-server" => Ok(InterferenceField::BeyondServer),
            other => Err(Error::config(
                "interference",
                format!("expected `all` or `beyond-server`, got `{other}`"),
            )),
        }
    }
}

/// Everything needed to evaluate one operating point with either engine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    pub params: SystemParams,
    pub library_size: usize,
    pub d_tilde: f64,
    pub policy: CachePolicy,
    /// Zipf skew of the requests; 0 is uniform.
    pub delta: f64,
    pub realizations: u32,
    pub trials_per_content: u32,
    pub guard: f64,
    /// Side of the square window; `None` picks the default for the radii.
    pub window_side: Option<f64>,
    pub interference: InterferenceField,
    pub seed: Option<u64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            library_size: 100,
            d_tilde: 0.3,
            policy: CachePolicy::Popularity,
            delta: 0.8,
            realizations: 100,
            trials_per_content: 1,
            guard: DEFAULT_GUARD,
            window_side: None,
            interference: InterferenceField::All,
            seed: None,
        }
    }
}

impl FromStr for ModelConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let cfg = Self::from_entries(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }
}

impl ModelConfig {
    /// Consume every model key present in `kv`, leaving others in place.
    pub fn from_entries(kv: &mut KeyValues) -> Result<Self> {
        let mut cfg = Self::default();
        for field in Field::ALL {
            if let Some(e) = kv.take(field.name()) {
                let v: f64 = e.parse()?;
                cfg = cfg.with_field(field, v).map_err(|err| match err {
                    Error::InvalidParameter { reason, .. } | Error::Config { message: reason, .. } => {
                        e.error(reason)
                    }
                    Error::InvalidLibrary => e.error("library must hold at least one content"),
                    other => other,
                })?;
            }
        }
        if let Some(e) = kv.take("policy") {
            cfg.policy = e.value.parse().map_err(|_| e.error(format!("unknown caching policy `{}`", e.value)))?;
        }
        if let Some(e) = kv.take("realizations") {
            cfg.realizations = e.parse()?;
        }
        if let Some(e) = kv.take("trials_per_content") {
            cfg.trials_per_content = e.parse()?;
        }
        if let Some(e) = kv.take("guard") {
            cfg.guard = e.parse()?;
        }
        if let Some(e) = kv.take("window_side") {
            cfg.window_side = Some(e.parse()?);
        }
        if let Some(e) = kv.take("interference") {
            cfg.interference = e.value.parse().map_err(|_| e.error(format!("unknown interference field `{}`", e.value)))?;
        }
        if let Some(e) = kv.take("seed") {
            cfg.seed = Some(e.parse()?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::config("realizations", "need at least one realization"));
        }
        if self.trials_per_content == 0 {
            return Err(Error::config("trials_per_content", "need at least one trial per content"));
        }
        self.window()?.check_covers(&self.params, self.guard)?;
        Ok(())
    }

    /// Copy with one field replaced; `value` is in configuration units.
    pub fn with_field(&self, field: Field, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        let b = self.params.to_builder();
        cfg.params = match field {
            Field::LambdaMbs => b.lambda_mbs(value).build()?,
            Field::LambdaSbs => b.lambda_sbs(value).build()?,
            Field::BandwidthW => b.bandwidth_w(value).build()?,
            Field::SubchannelsB => b.subchannels_b(integral(field, value)? as u32).build()?,
            Field::Beta => b.beta(value).build()?,
            Field::PMaxMbs => b.p_max_mbs_dbm(value).build()?,
            Field::PMaxSbs => b.p_max_sbs_dbm(value).build()?,
            Field::Alpha => b.alpha(value).build()?,
            Field::Gamma => b.gamma_db(value).build()?,
            Field::RSbs => b.r_sbs(value).build()?,
            Field::RMbs => b.r_mbs(value).build()?,
            Field::LibrarySize => {
                cfg.library_size = integral(field, value)? as usize;
                self.params
            }
            Field::DTilde => {
                cfg.d_tilde = value;
                self.params
            }
            Field::Delta => {
                cfg.delta = value;
                self.params
            }
        };
        cfg.library()?;
        cfg.requests()?;
        Ok(cfg)
    }

    /// Current value of `field` in configuration units.
    pub fn field(&self, field: Field) -> f64 {
        let p = &self.params;
        match field {
            Field::LambdaMbs => p.lambda_mbs(),
            Field::LambdaSbs => p.lambda_sbs(),
            Field::BandwidthW => p.bandwidth_w(),
            Field::SubchannelsB => f64::from(p.subchannels_b()),
            Field::Beta => p.beta(),
            Field::PMaxMbs => watts_to_dbm(p.p_max_mbs()),
            Field::PMaxSbs => watts_to_dbm(p.p_max_sbs()),
            Field::Alpha => p.alpha(),
            Field::Gamma => linear_to_db(p.gamma()),
            Field::RSbs => p.r_sbs(),
            Field::RMbs => p.r_mbs(),
            Field::LibrarySize => self.library_size as f64,
            Field::DTilde => self.d_tilde,
            Field::Delta => self.delta,
        }
    }

    pub fn library(&self) -> Result<ContentLibrary> {
        ContentLibrary::from_normalized(self.library_size, self.d_tilde)
    }

    pub fn requests(&self) -> Result<RequestDistribution> {
        RequestDistribution::zipf(self.library_size, self.delta)
    }

    pub fn window(&self) -> Result<SimWindow> {
        match self.window_side {
            Some(side) => SimWindow::square(side),
            None => Ok(SimWindow::default_for(&self.params, self.guard)),
        }
    }

    pub fn monte_carlo(&self, seed: u64) -> Result<MonteCarlo> {
        let mc = MonteCarlo {
            window: self.window()?,
            guard: self.guard,
            realizations: self.realizations,
            trials_per_content: self.trials_per_content,
            seed,
            interference: self.interference,
        };
        Ok(mc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_reference_file() {
        let cfg: ModelConfig = "
            # comment line
            lambda_mbs = 1e-4
            lambda_sbs = 0.05   # trailing comment
            gamma = -10
            p_max_mbs = 43
            p_max_sbs = 23
            policy = ucp
            d_tilde = 0.3
            delta = 0
            seed = 9
        "
        .parse()
        .unwrap();
        assert_eq!(cfg.params.lambda_sbs(), 0.05);
        assert!((cfg.params.gamma() - 0.1).abs() < 1e-15);
        assert_eq!(cfg.policy, CachePolicy::Uniform);
        assert_eq!(cfg.library().unwrap().cache_slots(), 30);
        assert_eq!(cfg.requests().unwrap(), RequestDistribution::uniform(100).unwrap());
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.params, SystemParams::builder().lambda_sbs(0.05).build().unwrap());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = "lambda_sbs = 0.1\nlambda_sbbs = 0.2\n".parse::<ModelConfig>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("lambda_sbbs") && msg.contains("line 2"), "{msg}");
        assert!(err.is_configuration());
    }

    #[test]
    fn malformed_lines_rejected() {
        for (text, needle) in [
            ("beta 0.1", "line 1"),
            ("beta = abc", "beta"),
            ("beta = 2", "beta"),
            ("alpha = 2", "alpha"),
            ("beta = 0.1\nbeta = 0.2", "duplicate"),
            ("policy = lru", "policy"),
            ("r_mbs = 3", "r_mbs"),
            ("library_size = 0", "library_size"),
            ("subchannels_b = 1.5", "subchannels_b"),
            ("realizations = 0", "realizations"),
            ("window_side = 500", "window_side"),
        ] {
            let err = text.parse::<ModelConfig>().unwrap_err();
            assert!(err.is_configuration(), "{text}: {err}");
            assert!(err.to_string().contains(needle), "{text}: {err}");
        }
    }

    #[test]
    fn fields_round_trip_through_config_units() {
        let cfg = ModelConfig::default();
        for f in Field::ALL {
            let v = cfg.field(f);
            let again = cfg.with_field(f, v).unwrap();
            assert!((again.field(f) - v).abs() <= 1e-12 * v.abs().max(1.0), "{f}");
        }
        assert_eq!("gamma".parse::<Field>().unwrap(), Field::Gamma);
        assert!("gama".parse::<Field>().is_err());
    }
}
