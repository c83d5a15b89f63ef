//! Claim-arrival renewal processes: the renewal function `λ(t) = E N(t)`,
//! the delayed measure `(λ*H)(t) = ∫ H(t-s) λ(ds)`, and path sampling.
//!
//! Exponential inter-arrivals take a closed-form Poisson path. Any other
//! continuous law is handled by solving the renewal equation
//! `λ(t) = F_θ(t) + ∫_0^t λ(t-s) F_θ(ds)` once on a uniform grid up to a fixed
//! horizon; the solved table is shared between clones.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::dist::{ClaimDistribution, Law};
use crate::quad::{adaptive_simpson, DensityMeasure, Measure, QuadError, Tolerance};

/// Initial grid size of the renewal-equation solver.
const INITIAL_CELLS: usize = 2048;
/// Refinement stops here even if the sup-norm target is not met.
const MAX_CELLS: usize = 1 << 17;
/// Sup-norm change between successive grids that counts as converged.
const SOLVER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenewalError {
    #[error("inter-arrival law {0} has an atom; only continuous laws are supported")]
    Degenerate(String),
    #[error("horizon must be finite and > 0, got {0}")]
    BadHorizon(f64),
    #[error("renewal equation did not converge: sup-norm change {change:e} with {cells} cells")]
    NoConvergence { change: f64, cells: usize },
}

/// Values and derivatives of a solved function on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl GridTable {
    fn from_values(step: f64, values: Vec<f64>) -> Self {
        let n = values.len() - 1;
        let slopes = (0..=n)
            .map(|i| match i {
                0 => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step),
                i if i == n => (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * step),
                i => (values[i + 1] - values[i - 1]) / (2.0 * step),
            })
            .map(|d: f64| d.max(0.0))
            .collect();
        Self { step, values, slopes }
    }

    pub fn horizon(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        assert!(
            t <= self.horizon() * (1.0 + 1e-12),
            "t = {t} beyond the solved horizon {}",
            self.horizon()
        );
        let pos = (t / self.step).max(0.0);
        let i = (pos.floor() as usize).min(self.cells() - 1);
        (i, (pos - i as f64).min(1.0))
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (i, w) = self.locate(t);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    pub fn slope(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let (i, w) = self.locate(t);
        self.slopes[i] + w * (self.slopes[i + 1] - self.slopes[i])
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Poisson { rate: f64 },
    General(Arc<GridTable>),
}

/// Inter-arrival law plus its renewal function.
#[derive(Debug, Clone)]
pub struct RenewalSpec {
    interarrival: ClaimDistribution,
    kind: Kind,
}

/// Arrival times `τ_1 < … < τ_N(t)` and one delay per arrival.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrivalPath {
    pub arrivals: Vec<f64>,
    pub delays: Vec<f64>,
}

impl ArrivalPath {
    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }
}

fn check_continuous(d: &ClaimDistribution) -> Result<(), RenewalError> {
    if d.is_point_mass() {
        Err(RenewalError::Degenerate(d.to_string()))
    } else {
        Ok(())
    }
}

impl RenewalSpec {
    /// Poisson fast path for exponential inter-arrivals, otherwise the
    /// renewal equation is solved on `[0, horizon]`.
    pub fn new(interarrival: ClaimDistribution, horizon: f64) -> Result<Self, RenewalError> {
        check_continuous(&interarrival)?;
        if let Law::Exponential { rate } = *interarrival.law() {
            return Ok(Self {
                interarrival,
                kind: Kind::Poisson { rate },
            });
        }
        Self::general(interarrival, horizon)
    }

    pub fn poisson(rate: f64) -> Result<Self, RenewalError> {
        let d = ClaimDistribution::exponential(rate).map_err(|_| RenewalError::Degenerate(format!("exp({rate})")))?;
        Self::new(d, f64::INFINITY)
    }

    /// Always goes through the numerical solver, even for exponential laws.
    pub fn general(interarrival: ClaimDistribution, horizon: f64) -> Result<Self, RenewalError> {
        check_continuous(&interarrival)?;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(RenewalError::BadHorizon(horizon));
        }
        let table = solve_renewal_equation(&interarrival, horizon)?;
        Ok(Self {
            interarrival,
            kind: Kind::General(Arc::new(table)),
        })
    }

    pub fn interarrival(&self) -> &ClaimDistribution {
        &self.interarrival
    }

    /// Rate of the Poisson fast path, if this spec uses it.
    pub fn poisson_rate(&self) -> Option<f64> {
        match self.kind {
            Kind::Poisson { rate } => Some(rate),
            Kind::General(_) => None,
        }
    }

    /// Largest `t` the renewal function is available for.
    pub fn horizon(&self) -> f64 {
        match &self.kind {
            Kind::Poisson { .. } => f64::INFINITY,
            Kind::General(table) => table.horizon(),
        }
    }

    /// Solved grid, for the general path.
    pub fn table(&self) -> Option<&GridTable> {
        match &self.kind {
            Kind::Poisson { .. } => None,
            Kind::General(table) => Some(table),
        }
    }

    /// `λ(t) = E N(t)`.
    pub fn renewal_function(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Poisson { rate } => rate * t,
            Kind::General(table) => table.value(t),
        }
    }

    /// Density of `λ(du)`.
    pub fn renewal_density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Poisson { rate } => *rate,
            Kind::General(table) => table.slope(t),
        }
    }

    /// Arrival times up to `t`, each with a delay drawn from `delay`.
    pub fn sample_path<R: Rng + ?Sized>(&self, delay: &ClaimDistribution, t: f64, rng: &mut R) -> ArrivalPath {
        let mut path = ArrivalPath::default();
        let mut clock = 0.0;
        loop {
            clock += self.interarrival.draw(rng);
            if clock > t {
                return path;
            }
            path.arrivals.push(clock);
            path.delays.push(delay.draw(rng));
        }
    }
}

impl Measure for RenewalSpec {
    fn integrate(&self, f: &dyn Fn(f64) -> f64, upper: f64, tol: Tolerance) -> Result<f64, QuadError> {
        match &self.kind {
            Kind::Poisson { rate } => Ok(rate * adaptive_simpson(f, 0.0, upper, tol)?),
            Kind::General(table) => DensityMeasure::new(|u| table.slope(u)).integrate(f, upper, tol),
        }
    }
}

/// Product-trapezoid discretisation of the renewal equation on `cells`
/// uniform cells; `O(cells²)`.
fn renewal_on_grid(interarrival: &ClaimDistribution, horizon: f64, cells: usize) -> Vec<f64> {
    let h = horizon / cells as f64;
    let cdf: Vec<f64> = (0..=cells).map(|j| interarrival.cdf(h * j as f64)).collect();
    let mass: Vec<f64> = cdf.windows(2).map(|w| w[1] - w[0]).collect();
    let mut m = vec![0.0; cells + 1];
    let lead = 1.0 - 0.5 * mass[0];
    for n in 1..=cells {
        // ∫_0^{t_n} λ(t_n - s) F(ds) ≈ Σ_j ½(λ_{n-j} + λ_{n-j+1}) ΔF_j
        let mut acc = cdf[n] + 0.5 * m[n - 1] * mass[0];
        for j in 2..=n {
            acc += 0.5 * (m[n - j] + m[n - j + 1]) * mass[j - 1];
        }
        m[n] = acc / lead;
    }
    m
}

/// Richardson step on the coarse nodes: the scheme is second order.
fn extrapolated(interarrival: &ClaimDistribution, horizon: f64, cells: usize) -> Vec<f64> {
    let coarse = renewal_on_grid(interarrival, horizon, cells);
    let fine = renewal_on_grid(interarrival, horizon, 2 * cells);
    coarse
        .iter()
        .enumerate()
        .map(|(i, c)| fine[2 * i] + (fine[2 * i] - c) / 3.0)
        .collect()
}

fn solve_renewal_equation(interarrival: &ClaimDistribution, horizon: f64) -> Result<GridTable, RenewalError> {
    let mut cells = INITIAL_CELLS;
    let mut coarse = extrapolated(interarrival, horizon, cells);
    loop {
        let fine = extrapolated(interarrival, horizon, 2 * cells);
        let change = coarse
            .iter()
            .enumerate()
            .map(|(i, c)| (fine[2 * i] - c).abs())
            .fold(0.0, f64::max);
        if change < SOLVER_TOL {
            return Ok(GridTable::from_values(horizon / (2 * cells) as f64, fine));
        }
        if 4 * cells >= MAX_CELLS {
            return Err(RenewalError::NoConvergence { change, cells: 4 * cells });
        }
        cells *= 2;
        coarse = fine;
    }
}

#[derive(Debug, Clone)]
enum DelayKind {
    /// `(λ*H)(t) = λ ∫_0^t H(u) du`
    Poisson { rate: f64 },
    General(Arc<GridTable>),
}

/// Expected number of by-claims paid by time `t`.
#[derive(Debug, Clone)]
pub struct DelayedMeasure {
    base: RenewalSpec,
    delay: ClaimDistribution,
    kind: DelayKind,
}

impl DelayedMeasure {
    pub fn new(base: RenewalSpec, delay: ClaimDistribution) -> Self {
        let kind = match &base.kind {
            Kind::Poisson { rate } => DelayKind::Poisson { rate: *rate },
            Kind::General(table) => {
                let h = table.step;
                let n = table.cells();
                let m = &table.values;
                let hcdf: Vec<f64> = (0..=n).map(|k| delay.cdf(h * k as f64)).collect();
                let values = (0..=n)
                    .map(|i| {
                        (1..=i)
                            .map(|j| 0.5 * (hcdf[i - j + 1] + hcdf[i - j]) * (m[j] - m[j - 1]))
                            .sum::<f64>()
                    })
                    .collect();
                DelayKind::General(Arc::new(GridTable::from_values(h, values)))
            }
        };
        Self { base, delay, kind }
    }

    pub fn base(&self) -> &RenewalSpec {
        &self.base
    }

    pub fn delay(&self) -> &ClaimDistribution {
        &self.delay
    }

    /// `(λ*H)(t)`.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            DelayKind::Poisson { rate } => rate * integrated_cdf(&self.delay, t),
            DelayKind::General(table) => table.value(t),
        }
    }

    /// Density of `(λ*H)(du)`.
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.kind {
            DelayKind::Poisson { rate } => rate * self.delay.cdf(t),
            DelayKind::General(table) => table.slope(t),
        }
    }
}

/// `∫_0^t H(u) du`.
fn integrated_cdf(h: &ClaimDistribution, t: f64) -> f64 {
    match *h.law() {
        // t - (1 - e^{-λ̂t})/λ̂
        Law::Exponential { rate } => t + (-rate * t).exp_m1() / rate,
        Law::PointMass { at } => (t - at).max(0.0),
        _ => adaptive_simpson(&|u| h.cdf(u), 0.0, t, Tolerance::relative(1e-12)).unwrap_or(f64::NAN),
    }
}

impl Measure for DelayedMeasure {
    fn integrate(&self, f: &dyn Fn(f64) -> f64, upper: f64, tol: Tolerance) -> Result<f64, QuadError> {
        match &self.kind {
            DelayKind::Poisson { rate } => {
                let breaks = match *self.delay.law() {
                    Law::PointMass { at } => vec![at],
                    _ => Vec::new(),
                };
                let m = DensityMeasure::new(|u| rate * self.delay.cdf(u)).with_breaks(breaks);
                m.integrate(f, upper, tol)
            }
            DelayKind::General(table) => DensityMeasure::new(|u| table.slope(u)).integrate(f, upper, tol),
        }
    }
}
