//! Claim, delay and inter-arrival laws.
//!
//! Every law is supported on `[0, ∞)`. Tail and local-increment evaluations go
//! through log-space intermediates (`ln1p`, `expm1`) so that increments
//! `F(x, x+h]` keep full relative precision even when `F̄(x)` is of order
//! `1e-20` and `h/x` is of order `1e-5`.

use std::fmt;
use std::str::FromStr;

use rand::distributions::Open01;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid parameter for {family}: {reason}")]
    InvalidParameter { family: &'static str, reason: String },
    #[error("mean is infinite (Pareto shape {alpha} <= 1)")]
    InfiniteMean { alpha: f64 },
    #[error("density of {0} is not finite at x = {1}")]
    SingularDensity(String, f64),
    #[error("{0} has no density")]
    NoDensity(String),
    #[error("uniform variate {0} outside (0, 1)")]
    UniformOutOfRange(f64),
    #[error("cannot parse distribution literal `{0}`: {1}")]
    Parse(String, String),
}

/// Piecewise-linear tail on a grid starting at 0 with `tail = 1` there and
/// ending at `tail = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTail {
    xs: Vec<f64>,
    tails: Vec<f64>,
}

impl TabulatedTail {
    pub fn new(xs: Vec<f64>, tails: Vec<f64>) -> Result<Self, DistError> {
        let bad = |reason: &str| {
            Err(DistError::InvalidParameter {
                family: "tabulated",
                reason: reason.to_string(),
            })
        };
        if xs.len() != tails.len() || xs.len() < 2 {
            return bad("need at least two nodes and equal-length grids");
        }
        if xs[0] != 0.0 {
            return bad("grid must start at x = 0 (nonnegative support)");
        }
        if tails[0] != 1.0 || *tails.last().unwrap() != 0.0 {
            return bad("tail must start at 1 and end at 0");
        }
        if xs.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return bad("grid must be finite and strictly increasing");
        }
        if tails.windows(2).any(|w| w[1] > w[0]) || tails.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return bad("tail values must be nonincreasing in [0, 1]");
        }
        Ok(Self { xs, tails })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    fn segment(&self, x: f64) -> usize {
        // index i with xs[i] <= x < xs[i+1], clamped to the last segment
        match self.xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 0.0;
        }
        let i = self.segment(x);
        let w = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.tails[i] + w * (self.tails[i + 1] - self.tails[i])
    }

    fn density(&self, x: f64) -> f64 {
        if x < 0.0 || x >= *self.xs.last().unwrap() {
            return 0.0;
        }
        let i = self.segment(x);
        (self.tails[i] - self.tails[i + 1]) / (self.xs[i + 1] - self.xs[i])
    }

    fn mean(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.tails.windows(2))
            .map(|(x, q)| 0.5 * (q[0] + q[1]) * (x[1] - x[0]))
            .sum()
    }

    /// Smallest `y` with `tail(y) <= q`.
    fn quantile_from_tail(&self, q: f64) -> f64 {
        if q >= 1.0 {
            return 0.0;
        }
        // tails are nonincreasing: find first node with tail <= q
        let j = self.tails.iter().position(|&t| t <= q).unwrap();
        if j == 0 {
            return 0.0;
        }
        let (t0, t1) = (self.tails[j - 1], self.tails[j]);
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        if t0 == t1 {
            return x1;
        }
        x0 + (t0 - q) / (t0 - t1) * (x1 - x0)
    }
}

/// The parametric family behind a [`ClaimDistribution`].
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    /// `F̄(x) = (κ/(x+κ))^α`
    Pareto { kappa: f64, alpha: f64 },
    /// `F̄(x) = exp(-(x/κ)^α)`
    Weibull { kappa: f64, alpha: f64 },
    /// `F̄(x) = exp(-rate·x)`
    Exponential { rate: f64 },
    /// All mass at `at >= 0`.
    PointMass { at: f64 },
    Tabulated(TabulatedTail),
}

/// A validated, immutable law on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimDistribution {
    law: Law,
}

fn positive(family: &'static str, name: &str, v: f64) -> Result<(), DistError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DistError::InvalidParameter {
            family,
            reason: format!("{name} must be finite and > 0, got {v}"),
        })
    }
}

impl ClaimDistribution {
    pub fn pareto(kappa: f64, alpha: f64) -> Result<Self, DistError> {
        positive("pareto", "kappa", kappa)?;
        positive("pareto", "alpha", alpha)?;
        Ok(Self {
            law: Law::Pareto { kappa, alpha },
        })
    }

    pub fn weibull(kappa: f64, alpha: f64) -> Result<Self, DistError> {
        positive("weibull", "kappa", kappa)?;
        positive("weibull", "alpha", alpha)?;
        Ok(Self {
            law: Law::Weibull { kappa, alpha },
        })
    }

    pub fn exponential(rate: f64) -> Result<Self, DistError> {
        positive("exp", "rate", rate)?;
        Ok(Self {
            law: Law::Exponential { rate },
        })
    }

    /// Degenerate law; `point_mass(0.0)` models instantaneous delays or a
    /// by-claim that is identically zero.
    pub fn point_mass(at: f64) -> Result<Self, DistError> {
        if !(at.is_finite() && at >= 0.0) {
            return Err(DistError::InvalidParameter {
                family: "point",
                reason: format!("location must be finite and >= 0, got {at}"),
            });
        }
        Ok(Self {
            law: Law::PointMass { at },
        })
    }

    pub fn tabulated(table: TabulatedTail) -> Self {
        Self {
            law: Law::Tabulated(table),
        }
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self.law, Law::PointMass { .. })
    }

    /// Pareto shape, when the law is Pareto.
    pub fn pareto_alpha(&self) -> Option<f64> {
        match self.law {
            Law::Pareto { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// `ln F̄(x)`; `-∞` where the tail vanishes.
    pub fn log_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return match self.law {
                Law::PointMass { at } if at <= x => f64::NEG_INFINITY,
                _ => 0.0,
            };
        }
        match &self.law {
            Law::Pareto { kappa, alpha } => -alpha * (x / kappa).ln_1p(),
            Law::Weibull { kappa, alpha } => -(x / kappa).powf(*alpha),
            Law::Exponential { rate } => -rate * x,
            Law::PointMass { at } => {
                if x < *at {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Law::Tabulated(t) => t.tail(x).ln(),
        }
    }

    /// `F̄(x) = P(X > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        match &self.law {
            Law::PointMass { at } => {
                if x < *at {
                    1.0
                } else {
                    0.0
                }
            }
            Law::Tabulated(t) => t.tail(x),
            _ => self.log_tail(x).exp(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.law {
            Law::Pareto { kappa, alpha } if x > 0.0 => -(-alpha * (x / kappa).ln_1p()).exp_m1(),
            Law::Weibull { kappa, alpha } if x > 0.0 => -(-(x / kappa).powf(*alpha)).exp_m1(),
            Law::Exponential { rate } if x > 0.0 => -(-rate * x).exp_m1(),
            _ => 1.0 - self.tail(x),
        }
    }

    /// `F(x, x+h] = F̄(x) - F̄(x+h)`, evaluated without cancellation.
    pub fn local_increment(&self, x: f64, h: f64) -> f64 {
        if !(h > 0.0) {
            return 0.0;
        }
        if x < 0.0 {
            // the tail is flat at 1 on (-∞, 0) for every law except a point mass
            return match self.law {
                Law::PointMass { .. } => self.tail(x) - self.tail(x + h),
                _ if x + h <= 0.0 => 0.0,
                _ => self.local_increment(0.0, x + h),
            };
        }
        match &self.law {
            Law::Pareto { kappa, alpha } => {
                let log_ratio = -alpha * (h / (x + kappa)).ln_1p();
                self.tail(x) * -log_ratio.exp_m1()
            }
            Law::Weibull { kappa, alpha } => {
                let gap = if x == 0.0 {
                    (h / kappa).powf(*alpha)
                } else {
                    (x / kappa).powf(*alpha) * (alpha * (h / x).ln_1p()).exp_m1()
                };
                self.tail(x) * -(-gap).exp_m1()
            }
            Law::Exponential { rate } => self.tail(x) * -(-rate * h).exp_m1(),
            Law::PointMass { at } => {
                if x < *at && *at <= x + h {
                    1.0
                } else {
                    0.0
                }
            }
            Law::Tabulated(t) => (t.tail(x) - t.tail(x + h)).max(0.0),
        }
    }

    pub fn density(&self, x: f64) -> Result<f64, DistError> {
        if x < 0.0 {
            return Ok(0.0);
        }
        match &self.law {
            Law::Pareto { kappa, alpha } => {
                Ok((alpha.ln() + alpha * kappa.ln() - (alpha + 1.0) * (x + kappa).ln()).exp())
            }
            Law::Weibull { kappa, alpha } => {
                if x == 0.0 {
                    return match *alpha {
                        a if a < 1.0 => Err(DistError::SingularDensity(self.to_string(), x)),
                        a if a == 1.0 => Ok(1.0 / kappa),
                        _ => Ok(0.0),
                    };
                }
                let z = x / kappa;
                Ok(((alpha / kappa).ln() + (alpha - 1.0) * z.ln() - z.powf(*alpha)).exp())
            }
            Law::Exponential { rate } => Ok(rate * (-rate * x).exp()),
            Law::PointMass { .. } => Err(DistError::NoDensity(self.to_string())),
            Law::Tabulated(t) => Ok(t.density(x)),
        }
    }

    pub fn mean(&self) -> Result<f64, DistError> {
        match &self.law {
            Law::Pareto { kappa, alpha } => {
                if *alpha <= 1.0 {
                    Err(DistError::InfiniteMean { alpha: *alpha })
                } else {
                    Ok(kappa / (alpha - 1.0))
                }
            }
            Law::Weibull { kappa, alpha } => Ok(kappa * libm::tgamma(1.0 + 1.0 / alpha)),
            Law::Exponential { rate } => Ok(1.0 / rate),
            Law::PointMass { at } => Ok(*at),
            Law::Tabulated(t) => Ok(t.mean()),
        }
    }

    /// Inverse of the tail: the point `y` with `F̄(y) = q`, for `q ∈ (0, 1]`.
    pub fn quantile_from_tail(&self, q: f64) -> f64 {
        match &self.law {
            Law::Pareto { kappa, alpha } => kappa * (-q.ln() / alpha).exp_m1(),
            Law::Weibull { kappa, alpha } => kappa * (-q.ln()).powf(1.0 / alpha),
            Law::Exponential { rate } => -q.ln() / rate,
            Law::PointMass { at } => *at,
            Law::Tabulated(t) => t.quantile_from_tail(q),
        }
    }

    /// `F⁻¹(p)` for `p ∈ [0, 1)`, accurate for small `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        match &self.law {
            Law::Pareto { kappa, alpha } => kappa * (-(-p).ln_1p() / alpha).exp_m1(),
            Law::Weibull { kappa, alpha } => kappa * (-(-p).ln_1p()).powf(1.0 / alpha),
            Law::Exponential { rate } => -(-p).ln_1p() / rate,
            _ => self.quantile_from_tail(1.0 - p),
        }
    }

    /// Inverse-CDF transform of a uniform variate `u ∈ (0, 1)`.
    pub fn sample(&self, u: f64) -> Result<f64, DistError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(DistError::UniformOutOfRange(u));
        }
        Ok(self.quantile(u))
    }

    /// One variate from `rng`. Point masses consume no randomness, so a
    /// degenerate component leaves the rest of the stream untouched.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.law {
            Law::PointMass { at } => at,
            _ => {
                let u: f64 = rng.sample(Open01);
                self.sample(u).expect("Open01 yields u in (0, 1)")
            }
        }
    }
}

impl fmt::Display for ClaimDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            Law::Pareto { kappa, alpha } => write!(f, "pareto({kappa}, {alpha})"),
            Law::Weibull { kappa, alpha } => write!(f, "weibull({kappa}, {alpha})"),
            Law::Exponential { rate } => write!(f, "exp({rate})"),
            Law::PointMass { at } => write!(f, "point({at})"),
            Law::Tabulated(t) => write!(f, "tabulated({} nodes)", t.xs.len()),
        }
    }
}

/// Parses `pareto(kappa, alpha)`, `weibull(kappa, alpha)`, `exp(rate)` and
/// `point(at)`.
impl FromStr for ClaimDistribution {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |msg: &str| DistError::Parse(s.to_string(), msg.to_string());
        let text = s.trim();
        let open = text.find('(').ok_or_else(|| err("expected `name(args)`"))?;
        if !text.ends_with(')') {
            return Err(err("missing closing parenthesis"));
        }
        let name = text[..open].trim().to_ascii_lowercase();
        let args = text[open + 1..text.len() - 1]
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| err(&format!("`{}` is not a number", a.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(err(&format!("`{name}` takes {n} argument(s), got {}", args.len())))
            }
        };
        match name.as_str() {
            "pareto" => {
                arity(2)?;
                Self::pareto(args[0], args[1])
            }
            "weibull" => {
                arity(2)?;
                Self::weibull(args[0], args[1])
            }
            "exp" | "exponential" => {
                arity(1)?;
                Self::exponential(args[0])
            }
            "point" => {
                arity(1)?;
                Self::point_mass(args[0])
            }
            other => Err(err(&format!("unknown family `{other}`"))),
        }
    }
}
