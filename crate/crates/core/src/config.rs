//! Scenario files and built-in presets.
//!
//! A scenario is a small TOML document:
//!
//! ```toml
//! [model]
//! byclaims = true
//! r = 0.1
//! t = 10
//! T = 10
//!
//! [main_claim]
//! law = "pareto(2, 2.3)"
//!
//! [by_claim]
//! law = "pareto(2, 2.3)"
//!
//! [interarrival]
//! law = "exp(0.2)"
//!
//! [delay]
//! law = "exp(0.2)"
//!
//! [run]
//! samples = 100000
//! seed = 1
//! workers = 4
//! x_grid = "logspace:20:500:15"
//! quad_tol = 1e-8
//! ```
//!
//! Unknown keys are rejected; `T` defaults to `t` and `[run]` is optional.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::asym::Scenario;
use crate::dist::ClaimDistribution;
use crate::quad::Tolerance;
use crate::renewal::RenewalSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown preset {0:?}; available: pareto-s4, weibull-s4")]
    UnknownPreset(String),
}

fn invalid(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    main_claim: RawLaw,
    by_claim: Option<RawLaw>,
    interarrival: RawLaw,
    delay: Option<RawLaw>,
    run: Option<RawRun>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    byclaims: bool,
    r: f64,
    t: f64,
    #[serde(rename = "T")]
    horizon_cap: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLaw {
    law: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    samples: Option<u64>,
    seed: Option<u64>,
    workers: Option<usize>,
    x_grid: Option<String>,
    quad_tol: Option<f64>,
}

/// Monte-Carlo and quadrature settings that travel with a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub x_grid: Vec<f64>,
    pub quad_tol: f64,
}

pub const DEFAULT_X_GRID: &str = "logspace:20:500:15";

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 1,
            workers: 4,
            x_grid: parse_x_grid(DEFAULT_X_GRID).expect("default grid"),
            quad_tol: Tolerance::DEFAULT.rel,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub run: RunOptions,
}

/// `"a, b, c"` or `"logspace:lo:hi:count"`.
pub fn parse_x_grid(text: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |why: &str| invalid("x_grid", format!("{why} in {text:?}"));
    let grid: Vec<f64> = if let Some(spec) = text.trim().strip_prefix("logspace:") {
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(bad("expected logspace:lo:hi:count"));
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad("bad lower end"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad("bad upper end"))?;
        let count: usize = count.trim().parse().map_err(|_| bad("bad count"))?;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
            return Err(bad("need 0 < lo <= hi and count >= 1"));
        }
        if count == 1 {
            vec![lo]
        } else {
            let step = (hi / lo).ln() / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { hi } else { lo * (step * i as f64).exp() })
                .collect()
        }
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<_, _>>()?
    };
    if grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(bad("thresholds must be finite and > 0"));
    }
    Ok(grid)
}

fn law(section: &str, raw: &RawLaw) -> Result<ClaimDistribution, ConfigError> {
    raw.law.parse().map_err(|e| invalid(&format!("{section}.law"), e))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a scenario document.
pub fn parse_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let m = &raw.model;
    let horizon_cap = m.horizon_cap.unwrap_or(m.t);
    let main = law("main_claim", &raw.main_claim)?;
    let arrivals = law("interarrival", &raw.interarrival)?;
    let renewal = RenewalSpec::new(arrivals, horizon_cap).map_err(|e| invalid("interarrival.law", e))?;
    let scenario = if m.byclaims {
        let by = raw.by_claim.as_ref().ok_or_else(|| invalid("by_claim", "required when byclaims = true"))?;
        let delay = raw.delay.as_ref().ok_or_else(|| invalid("delay", "required when byclaims = true"))?;
        Scenario::with_byclaims(
            main,
            law("by_claim", by)?,
            renewal,
            law("delay", delay)?,
            m.r,
            m.t,
            horizon_cap,
        )
    } else {
        for (name, present) in [("by_claim", raw.by_claim.is_some()), ("delay", raw.delay.is_some())] {
            if present {
                return Err(invalid(name, "given but byclaims = false"));
            }
        }
        Scenario::without_byclaims(main, renewal, m.r, m.t, horizon_cap)
    }
    .map_err(|e| invalid("model", e))?;

    let r = raw.run.unwrap_or_default();
    let d = RunOptions::default();
    let run = RunOptions {
        samples: r.samples.unwrap_or(d.samples),
        seed: r.seed.unwrap_or(d.seed),
        workers: r.workers.unwrap_or(d.workers),
        x_grid: match r.x_grid {
            Some(g) => parse_x_grid(&g)?,
            None => d.x_grid,
        },
        quad_tol: r.quad_tol.unwrap_or(d.quad_tol),
    };
    if run.samples == 0 {
        return Err(invalid("run.samples", "must be >= 1"));
    }
    if run.workers == 0 {
        return Err(invalid("run.workers", "must be >= 1"));
    }
    if !(run.quad_tol > 0.0 && run.quad_tol < 1.0) {
        return Err(invalid("run.quad_tol", "must lie in (0, 1)"));
    }
    let scenario = scenario.with_tolerance(Tolerance::relative(run.quad_tol));
    Ok(ScenarioConfig { scenario, run })
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_str(&text)
}

const PARETO_S4: &str = r#"# Pareto claims and by-claims with exponential delays
[model]
byclaims = true
r = 0.1
t = 10
T = 10

[main_claim]
law = "pareto(2, 2.3)"

[by_claim]
law = "pareto(2, 2.3)"

[interarrival]
law = "exp(0.2)"

[delay]
law = "exp(0.2)"

[run]
samples = 100000
seed = 1
workers = 4
x_grid = "logspace:20:500:15"
"#;

const WEIBULL_S4: &str = r#"# Weibull claims and by-claims with exponential delays
[model]
byclaims = true
r = 0.1
t = 10
T = 10

[main_claim]
law = "weibull(1, 0.3)"

[by_claim]
law = "weibull(1, 0.3)"

[interarrival]
law = "exp(0.1)"

[delay]
law = "exp(0.1)"

[run]
samples = 100000
seed = 1
workers = 4
x_grid = "logspace:20:2000:15"
"#;

/// Built-in scenarios as `(name, document)`.
pub const PRESETS: [(&str, &str); 2] = [("pareto-s4", PARETO_S4), ("weibull-s4", WEIBULL_S4)];

pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_str(preset_text(name)?)
}
