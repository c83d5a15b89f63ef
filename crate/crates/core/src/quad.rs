//! Adaptive Simpson quadrature against Stieltjes measures on `[0, t]`, with
//! iterated 2-d and 3-d rules over the triangular regions
//! `{0 <= v <= t, 0 <= u <= t - v}` and `{0 <= v <= t, 0 <= u, s <= t - v}`.
//!
//! Measures are integrated through the [`Measure`] trait. Lower limits are
//! closed (`0-` in Stieltjes notation), so an atom at the origin is counted.

use std::cell::Cell;

use thiserror::Error;

use crate::dist::{ClaimDistribution, Law};

/// Maximum bisection depth of the adaptive rule.
pub const MAX_DEPTH: u32 = 40;

/// Panels of the initial composite rule; each is refined independently.
const INITIAL_PANELS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("adaptive Simpson did not converge within {depth} levels on [{a}, {b}] (residual {residual:e})")]
    NoConvergence {
        a: f64,
        b: f64,
        depth: u32,
        residual: f64,
    },
    #[error("integrand is not finite at {at} (value {value})")]
    NonFinite { at: f64, value: f64 },
}

/// Acceptance rule: a panel converges once its error estimate is below
/// `max(abs, rel * |I|)` scaled to the panel width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    /// Relative 1e-8. The absolute floor is tiny because the functionals of
    /// interest are routinely smaller than 1e-12.
    pub const DEFAULT: Tolerance = Tolerance {
        abs: 1e-300,
        rel: 1e-8,
    };

    pub fn relative(rel: f64) -> Self {
        Tolerance {
            abs: Self::DEFAULT.abs,
            rel,
        }
    }

    /// Tolerance for one nesting level deeper.
    pub fn inner(self) -> Self {
        Tolerance {
            abs: self.abs,
            rel: self.rel / 10.0,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

struct Simpson<'f> {
    f: &'f dyn Fn(f64) -> f64,
    failure: Option<QuadError>,
}

impl Simpson<'_> {
    fn eval(&mut self, x: f64) -> f64 {
        let y = (self.f)(x);
        if !y.is_finite() && self.failure.is_none() {
            self.failure = Some(QuadError::NonFinite { at: x, value: y });
        }
        y
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, budget: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let h = (b - a) / 12.0;
        let left = h * (fa + 4.0 * flm + fm);
        let right = h * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        let sum = left + right;
        if self.failure.is_some()
            || diff.abs() <= 15.0 * eps
            || diff.abs() <= 1e-15 * sum.abs()
            || !(lm > a && rm < b)
        {
            return sum + diff / 15.0;
        }
        if depth >= MAX_DEPTH {
            // a jump or kink leaves a residual that no longer shrinks with eps;
            // it is harmless once it fits in the panel's whole budget
            if diff.abs() <= 15.0 * budget {
                return sum + diff / 15.0;
            }
            self.failure = Some(QuadError::NoConvergence {
                a,
                b,
                depth,
                residual: diff.abs() / 15.0,
            });
            return sum + diff / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, 0.5 * eps, budget, depth + 1)
            + self.refine(m, b, fm, frm, fb, right, 0.5 * eps, budget, depth + 1)
    }
}

/// `∫_a^b f(x) dx` by adaptive Simpson.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<f64, QuadError> {
    if !(b > a) {
        return Ok(0.0);
    }
    let mut s = Simpson { f, failure: None };
    let n = 2 * INITIAL_PANELS;
    let h = (b - a) / n as f64;
    let ys: Vec<f64> = (0..=n)
        .map(|i| s.eval(if i == n { b } else { a + h * i as f64 }))
        .collect();
    if let Some(e) = s.failure.take() {
        return Err(e);
    }
    let panel = |i: usize| h / 3.0 * (ys[2 * i] + 4.0 * ys[2 * i + 1] + ys[2 * i + 2]);
    let coarse: f64 = (0..INITIAL_PANELS).map(panel).sum();
    let eps = tol.abs.max(tol.rel * coarse.abs()) / INITIAL_PANELS as f64;
    let mut total = 0.0;
    for i in 0..INITIAL_PANELS {
        let (pa, pb) = (a + 2.0 * h * i as f64, if i + 1 == INITIAL_PANELS { b } else { a + 2.0 * h * (i + 1) as f64 });
        total += s.refine(pa, pb, ys[2 * i], ys[2 * i + 1], ys[2 * i + 2], panel(i), eps, eps * 1e-3, 1);
    }
    match s.failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// A nonnegative measure on `[0, ∞)`.
pub trait Measure: Sync {
    /// `∫_{[0, upper]} f dμ`.
    fn integrate(&self, f: &dyn Fn(f64) -> f64, upper: f64, tol: Tolerance) -> Result<f64, QuadError>;
}

/// Lebesgue measure `du`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lebesgue;

impl Measure for Lebesgue {
    fn integrate(&self, f: &dyn Fn(f64) -> f64, upper: f64, tol: Tolerance) -> Result<f64, QuadError> {
        adaptive_simpson(f, 0.0, upper, tol)
    }
}

/// Absolutely continuous measure `ρ(u) du`, optionally split at points where
/// `ρ` is not smooth.
pub struct DensityMeasure<F> {
    density: F,
    breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> DensityMeasure<F> {
    pub fn new(density: F) -> Self {
        Self {
            density,
            breaks: Vec::new(),
        }
    }

    pub fn with_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.breaks = breaks;
        self
    }
}

impl<F: Fn(f64) -> f64 + Sync> Measure for DensityMeasure<F> {
    fn integrate(&self, f: &dyn Fn(f64) -> f64, upper: f64, tol: Tolerance) -> Result<f64, QuadError> {
        let g = |u: f64| {
            let d = (self.density)(u);
            if d == 0.0 {
                0.0
            } else {
                f(u) * d
            }
        };
        integrate_pieces(&g, 0.0, upper, &self.breaks, tol)
    }
}

/// Integrates over `[a, b]` split at the interior `breaks`.
pub(crate) fn integrate_pieces(
    g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<f64, QuadError> {
    let mut lo = a;
    let mut acc = 0.0;
    for &k in breaks.iter().filter(|&&k| k > a && k < b) {
        acc += adaptive_simpson(g, lo, k, tol)?;
        lo = k;
    }
    Ok(acc + adaptive_simpson(g, lo, b, tol)?)
}

/// The law of `X` as an integrator, `∫ f(s) H(ds)`.
///
/// Continuous laws are integrated in probability space `p = F(s)` below the
/// median (removing density singularities at the origin) and on a
/// logarithmic scale above it (keeping heavy tails smooth).
impl Measure for ClaimDistribution {
    fn integrate(&self, f: &dyn Fn(f64) -> f64, upper: f64, tol: Tolerance) -> Result<f64, QuadError> {
        if upper < 0.0 {
            return Ok(0.0);
        }
        match self.law() {
            Law::PointMass { at } => Ok(if *at <= upper { f(*at) } else { 0.0 }),
            Law::Tabulated(t) => {
                let g = |s: f64| f(s) * self.density(s).unwrap_or(0.0);
                integrate_pieces(&g, 0.0, upper, t.nodes(), tol)
            }
            _ => {
                let median = self.quantile_from_tail(0.5);
                let lower = upper.min(median);
                let body = |p: f64| f(self.quantile(p).min(lower));
                let mut acc = adaptive_simpson(&body, 0.0, self.cdf(lower), tol)?;
                if upper > median {
                    let tail = |w: f64| {
                        let s = w.exp();
                        f(s) * self.density(s).unwrap_or(0.0) * s
                    };
                    acc += adaptive_simpson(&tail, median.ln(), upper.ln(), tol)?;
                }
                Ok(acc)
            }
        }
    }
}

/// `∫_{[0,t]} f(u) μ(du)`.
pub fn integrate_1d<M: Measure + ?Sized>(
    f: impl Fn(f64) -> f64,
    measure: &M,
    t: f64,
    tol: Tolerance,
) -> Result<f64, QuadError> {
    measure.integrate(&f, t, tol)
}

fn record(slot: &Cell<Option<QuadError>>, r: Result<f64, QuadError>) -> f64 {
    match r {
        Ok(v) => v,
        Err(e) => {
            let prev = slot.take();
            slot.set(prev.or(Some(e)));
            0.0
        }
    }
}

/// `∫_{[0,t]} ∫_{[0,t-v]} f(u, v) μ_u(du) μ_v(dv)`.
pub fn integrate_triangular_2d<U, V>(
    f: impl Fn(f64, f64) -> f64,
    measure_u: &U,
    measure_v: &V,
    t: f64,
    tol: Tolerance,
) -> Result<f64, QuadError>
where
    U: Measure + ?Sized,
    V: Measure + ?Sized,
{
    let failed = Cell::new(None);
    let inner_tol = tol.inner();
    let outer = |v: f64| {
        let inner = |u: f64| f(u, v);
        record(&failed, measure_u.integrate(&inner, t - v, inner_tol))
    };
    let value = measure_v.integrate(&outer, t, tol)?;
    match failed.take() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// `∫_{[0,t]} ∫_{[0,t-v]} ∫_{[0,t-v]} f(u, s, v) μ_s(ds) μ_u(du) μ_v(dv)`.
pub fn integrate_triangular_3d<U, S, V>(
    f: impl Fn(f64, f64, f64) -> f64,
    measure_u: &U,
    measure_s: &S,
    measure_v: &V,
    t: f64,
    tol: Tolerance,
) -> Result<f64, QuadError>
where
    U: Measure + ?Sized,
    S: Measure + ?Sized,
    V: Measure + ?Sized,
{
    let failed = Cell::new(None);
    let (mid_tol, inner_tol) = (tol.inner(), tol.inner().inner());
    let outer = |v: f64| {
        let middle = |u: f64| {
            let inner = |s: f64| f(u, s, v);
            record(&failed, measure_s.integrate(&inner, t - v, inner_tol))
        };
        record(&failed, measure_u.integrate(&middle, t - v, mid_tol))
    };
    let value = measure_v.integrate(&outer, t, tol)?;
    match failed.take() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAM: f64 = 0.2;
    const LAM_HAT: f64 = 0.2;
    const R: f64 = 0.1;
    const ALPHA: f64 = 2.3;
    const T: f64 = 10.0;

    fn rel_gap(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn poisson() -> DensityMeasure<impl Fn(f64) -> f64 + Sync> {
        DensityMeasure::new(|_| LAM)
    }

    #[test]
    fn simpson_basics() {
        let tol = Tolerance::DEFAULT;
        assert_eq!(adaptive_simpson(&|x| x, 1.0, 1.0, tol).unwrap(), 0.0);
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, tol).unwrap();
        assert!(rel_gap(v, 2.0) < 1e-9);
        let tiny = adaptive_simpson(&|x: f64| 1e-20 * (-x).exp(), 0.0, 5.0, tol).unwrap();
        assert!(rel_gap(tiny, 1e-20 * (1.0 - (-5.0f64).exp())) < 1e-9);
    }

    #[test]
    fn simpson_reports_non_finite_values() {
        let err = adaptive_simpson(&|x: f64| 1.0 / x, 0.0, 1.0, Tolerance::DEFAULT).unwrap_err();
        assert!(matches!(err, QuadError::NonFinite { .. }));
    }

    #[test]
    fn simpson_reports_non_convergence() {
        // |x|^-0.99 near an interior point never meets a 1e-14 relative target
        let f = |x: f64| (x - 0.3f64.sqrt()).abs().powf(-0.99).min(1e300);
        let err = adaptive_simpson(&f, 0.0, 1.0, Tolerance::relative(1e-14)).unwrap_err();
        assert!(matches!(err, QuadError::NoConvergence { depth: MAX_DEPTH, .. }), "{err:?}");
    }

    #[test]
    fn constant_against_poisson() {
        let v = integrate_1d(|_| 3.0, &poisson(), T, Tolerance::DEFAULT).unwrap();
        assert!(rel_gap(v, 3.0 * LAM * T) < 1e-12);
    }

    #[test]
    fn discount_kernel_against_poisson() {
        let v = integrate_1d(|u| (-ALPHA * R * u).exp(), &poisson(), T, Tolerance::DEFAULT).unwrap();
        assert!(rel_gap(v, 0.782_383_614_154_083_7) < 1e-9);
    }

    #[test]
    fn discount_kernel_against_delayed_poisson() {
        let delayed = DensityMeasure::new(|u: f64| LAM * -(-LAM_HAT * u).exp_m1());
        let v = integrate_1d(|u| (-ALPHA * R * u).exp(), &delayed, T, Tolerance::DEFAULT).unwrap();
        let z = ALPHA * R;
        let closed = LAM * ((1.0 - (-z * T).exp()) / z - (1.0 - (-(z + LAM_HAT) * T).exp()) / (z + LAM_HAT));
        assert!(rel_gap(v, closed) < 1e-9);
        assert!(rel_gap(v, 0.323_578_292_764_409_7) < 1e-9);
    }

    #[test]
    fn triangle_area() {
        let v = integrate_triangular_2d(|_, _| 1.0, &poisson(), &poisson(), T, Tolerance::DEFAULT).unwrap();
        assert!(rel_gap(v, LAM * LAM * T * T / 2.0) < 1e-12);
    }

    #[test]
    fn second_order_coefficient_integrand() {
        let f = |u: f64, v: f64| {
            (-R * v).exp() * (-ALPHA * R * (u + v)).exp() + (-R * (u + v)).exp() * (-ALPHA * R * v).exp()
        };
        let v = integrate_triangular_2d(f, &Lebesgue, &Lebesgue, T, Tolerance::DEFAULT).unwrap();
        // λ² ∫∫ f = λ²(1-e^{-rt})(1-e^{-αrt})/(αr²)
        assert!(rel_gap(LAM * LAM * v, 0.989_121_534_794_772_1) < 1e-8);
    }

    #[test]
    fn triangular_prism_3d() {
        let v = integrate_triangular_3d(|_, _, _| 1.0, &poisson(), &poisson(), &poisson(), T, Tolerance::DEFAULT)
            .unwrap();
        assert!(rel_gap(v, LAM.powi(3) * T.powi(3) / 3.0) < 1e-10);
        let zero = integrate_triangular_3d(|_, _, _| 1.0, &poisson(), &poisson(), &poisson(), 0.0, Tolerance::DEFAULT)
            .unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn by_claim_term_3d() {
        let f = |u: f64, s: f64, v: f64| {
            (-R * (u + v)).exp() * (-ALPHA * R * (v + s)).exp() * LAM_HAT * (-LAM_HAT * s).exp()
        };
        let v = integrate_triangular_3d(f, &poisson(), &Lebesgue, &poisson(), T, Tolerance::DEFAULT).unwrap();
        assert!(rel_gap(v, 0.261_531_796_494_446_3) < 1e-8, "{v}");
        // same integral with the delay law as integrator
        let h = ClaimDistribution::exponential(LAM_HAT).unwrap();
        let g = |u: f64, s: f64, v: f64| (-R * (u + v)).exp() * (-ALPHA * R * (v + s)).exp();
        let w = integrate_triangular_3d(g, &poisson(), &h, &poisson(), T, Tolerance::DEFAULT).unwrap();
        assert!(rel_gap(w, 0.261_531_796_494_446_3) < 1e-8, "{w}");
    }

    #[test]
    fn law_measures() {
        let tol = Tolerance::DEFAULT;
        let e = ClaimDistribution::exponential(0.2).unwrap();
        let mass = e.integrate(&|_| 1.0, 10.0, tol).unwrap();
        assert!(rel_gap(mass, 1.0 - (-2.0f64).exp()) < 1e-10);
        // Weibull with a singular density at 0, over both sides of the median
        let w = ClaimDistribution::weibull(1.0, 0.3).unwrap();
        for upper in [1e-3, 0.1, 5.0, 1e4] {
            let m = w.integrate(&|_| 1.0, upper, tol).unwrap();
            assert!(rel_gap(m, w.cdf(upper)) < 1e-9, "{upper}");
        }
        let p = ClaimDistribution::pareto(2.0, 2.3).unwrap();
        let mean_part = p.integrate(&|s| s, 1e12, tol).unwrap();
        assert!(rel_gap(mean_part, p.mean().unwrap()) < 1e-6);
        let atom = ClaimDistribution::point_mass(0.0).unwrap();
        assert_eq!(atom.integrate(&|s| s + 2.0, 0.0, tol).unwrap(), 2.0);
        assert_eq!(atom.integrate(&|s| s + 2.0, -1.0, tol).unwrap(), 0.0);
    }

    #[test]
    fn fubini_on_product_integrands() {
        let g = |u: f64| (-0.3 * u).exp();
        let h = |v: f64| 1.0 + v * v;
        let tol = Tolerance::DEFAULT;
        let two_d = integrate_triangular_2d(|u, v| g(u) * h(v), &poisson(), &poisson(), T, tol).unwrap();
        let iterated = integrate_1d(
            |v| h(v) * integrate_1d(g, &poisson(), T - v, tol.inner()).unwrap(),
            &poisson(),
            T,
            tol,
        )
        .unwrap();
        assert!(rel_gap(two_d, iterated) < 1e-8);
    }

    #[test]
    fn linearity() {
        let tol = Tolerance::DEFAULT;
        let f = |u: f64, v: f64| (-(u + 2.0 * v) * 0.1).exp();
        let g = |u: f64, v: f64| (1.0 + u * v).ln();
        let (a, b) = (2.5, -0.75);
        let lhs = integrate_triangular_2d(|u, v| a * f(u, v) + b * g(u, v), &poisson(), &Lebesgue, T, tol).unwrap();
        let rf = integrate_triangular_2d(f, &poisson(), &Lebesgue, T, tol).unwrap();
        let rg = integrate_triangular_2d(g, &poisson(), &Lebesgue, T, tol).unwrap();
        assert!(rel_gap(lhs, a * rf + b * rg) < 1e-7);
    }

    #[test]
    fn refinement_is_stable() {
        // a tighter target moves the answer by less than the looser tolerance
        let f = |u: f64, v: f64| (-R * v).exp() * (1.0 + (u * 0.7).sin().powi(2));
        let coarse = integrate_triangular_2d(f, &poisson(), &poisson(), T, Tolerance::relative(1e-8)).unwrap();
        let fine = integrate_triangular_2d(f, &poisson(), &poisson(), T, Tolerance::relative(1e-11)).unwrap();
        assert!(rel_gap(coarse, fine) < 1e-8);
    }

    #[test]
    fn inner_failures_propagate() {
        let f = |u: f64, _v: f64| if u < 1.0 { f64::NAN } else { 1.0 };
        let err = integrate_triangular_2d(f, &Lebesgue, &Lebesgue, 3.0, Tolerance::DEFAULT).unwrap_err();
        assert!(matches!(err, QuadError::NonFinite { .. }));
    }
}
