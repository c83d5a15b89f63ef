//! Second-order tail asymptotics of discounted aggregate claims.
//!
//! Without by-claims the expansion is
//! `∫F̄(xe^{ru})λ(du) + μ_F φ_{F;λ,λ}(x;t)`; with by-claims it is
//! `φ₀ + μ_F(φ_{F;λ,λ} + φ̃_G) + μ_G(φ_{G;λ*H,λ} + φ̃_F)`.
//! Every functional is a nested Stieltjes integral of the increment kernel
//! `K(w) = F(xe^{rw}, (x+1)e^{rw}]`. Replacing `K` by `e^{-αrw}` turns the same
//! integrals into the coefficients of the regularly varying closed forms.

use thiserror::Error;

use crate::dist::{ClaimDistribution, DistError, Law};
use crate::quad::{integrate_1d, integrate_triangular_2d, integrate_triangular_3d, QuadError, Tolerance};
use crate::renewal::{DelayedMeasure, RenewalSpec};

/// `remainder_scale > REGIME_RATIO * first_order` raises the regime flag.
pub const REGIME_RATIO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("threshold must be finite and > 0, got {0}")]
    BadThreshold(f64),
    #[error("{0} requires a scenario {1} by-claims")]
    WrongModel(&'static str, &'static str),
    #[error("closed form not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug, Clone)]
struct ByClaims {
    claim: ClaimDistribution,
    delay: ClaimDistribution,
    delayed: DelayedMeasure,
}

/// Claim laws, arrival process, interest force and horizon.
#[derive(Debug, Clone)]
pub struct Scenario {
    main_claim: ClaimDistribution,
    by_claims: Option<ByClaims>,
    renewal: RenewalSpec,
    r: f64,
    t: f64,
    horizon_cap: f64,
    tol: Tolerance,
}

impl Scenario {
    pub fn without_byclaims(
        main_claim: ClaimDistribution,
        renewal: RenewalSpec,
        r: f64,
        t: f64,
        horizon_cap: f64,
    ) -> Result<Self, AsymError> {
        let s = Self {
            main_claim,
            by_claims: None,
            renewal,
            r,
            t,
            horizon_cap,
            tol: Tolerance::DEFAULT,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_byclaims(
        main_claim: ClaimDistribution,
        by_claim: ClaimDistribution,
        renewal: RenewalSpec,
        delay: ClaimDistribution,
        r: f64,
        t: f64,
        horizon_cap: f64,
    ) -> Result<Self, AsymError> {
        let delayed = DelayedMeasure::new(renewal.clone(), delay.clone());
        let s = Self {
            main_claim,
            by_claims: Some(ByClaims {
                claim: by_claim,
                delay,
                delayed,
            }),
            renewal,
            r,
            t,
            horizon_cap,
            tol: Tolerance::DEFAULT,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), AsymError> {
        let bad = |m: String| Err(AsymError::InvalidScenario(m));
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return bad(format!("interest force r = {} must be finite and >= 0", self.r));
        }
        if !(self.horizon_cap > 0.0 && self.horizon_cap.is_finite()) {
            return bad(format!("horizon cap T = {} must be finite and > 0", self.horizon_cap));
        }
        if !(self.t >= 0.0 && self.t <= self.horizon_cap) {
            return bad(format!("horizon t = {} must lie in [0, T = {}]", self.t, self.horizon_cap));
        }
        if self.renewal.horizon() < self.horizon_cap {
            return bad(format!(
                "renewal function solved up to {} only, below T = {}",
                self.renewal.horizon(),
                self.horizon_cap
            ));
        }
        Ok(())
    }

    /// Same model at another horizon `t <= T`.
    pub fn at_time(&self, t: f64) -> Result<Self, AsymError> {
        let mut s = self.clone();
        s.t = t;
        s.validate()?;
        Ok(s)
    }

    /// Drops the by-claims, keeping main claims and arrivals.
    pub fn main_claims_only(&self) -> Self {
        Self {
            by_claims: None,
            ..self.clone()
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn main_claim(&self) -> &ClaimDistribution {
        &self.main_claim
    }

    pub fn by_claim(&self) -> Option<&ClaimDistribution> {
        self.by_claims.as_ref().map(|b| &b.claim)
    }

    pub fn delay(&self) -> Option<&ClaimDistribution> {
        self.by_claims.as_ref().map(|b| &b.delay)
    }

    pub fn delayed_measure(&self) -> Option<&DelayedMeasure> {
        self.by_claims.as_ref().map(|b| &b.delayed)
    }

    pub fn renewal(&self) -> &RenewalSpec {
        &self.renewal
    }

    pub fn has_byclaims(&self) -> bool {
        self.by_claims.is_some()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn horizon_cap(&self) -> f64 {
        self.horizon_cap
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    fn by(&self, op: &'static str) -> Result<&ByClaims, AsymError> {
        self.by_claims.as_ref().ok_or(AsymError::WrongModel(op, "with"))
    }

    fn no_by(&self, op: &'static str) -> Result<(), AsymError> {
        match self.by_claims {
            Some(_) => Err(AsymError::WrongModel(op, "without")),
            None => Ok(()),
        }
    }
}

/// One μ-weighted second-order term.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub name: &'static str,
    pub weight: f64,
    pub value: f64,
}

impl Correction {
    pub fn contribution(&self) -> f64 {
        self.weight * self.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticBreakdown {
    pub x: f64,
    pub first_order: f64,
    pub corrections: Vec<Correction>,
    pub remainder_scale: f64,
    pub total_second_order: f64,
    pub regime_flag: bool,
}

impl AsymptoticBreakdown {
    fn new(x: f64, first_order: f64, corrections: Vec<Correction>, remainder_scale: f64) -> Self {
        let total_second_order = first_order + corrections.iter().map(Correction::contribution).sum::<f64>();
        Self {
            x,
            first_order,
            corrections,
            remainder_scale,
            total_second_order,
            regime_flag: remainder_scale > REGIME_RATIO * first_order,
        }
    }

    pub fn correction(&self, name: &str) -> Option<&Correction> {
        self.corrections.iter().find(|c| c.name == name)
    }

    /// Weighted contribution of a named term, zero if absent.
    pub fn contribution(&self, name: &str) -> f64 {
        self.correction(name).map_or(0.0, Correction::contribution)
    }
}

pub const CORR_F: &str = "corr_F";
pub const CORR_G_TILDE: &str = "corr_G_tilde";
pub const CORR_G: &str = "corr_G";
pub const CORR_F_TILDE: &str = "corr_F_tilde";

fn check_x(x: f64) -> Result<(), AsymError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(AsymError::BadThreshold(x))
    }
}

/// `w ↦ F(xe^{rw}, (x+1)e^{rw}]`.
fn increment_kernel(d: &ClaimDistribution, x: f64, r: f64) -> impl Fn(f64) -> f64 + '_ {
    move |w| {
        let e = (r * w).exp();
        d.local_increment(x * e, e)
    }
}

/// `w ↦ e^{-αrw}`, the increment kernel divided by its density at `x` in the
/// large-`x` limit for densities in `RV_{-(α+1)}`.
fn power_kernel(alpha: f64, r: f64) -> impl Fn(f64) -> f64 {
    move |w| (-alpha * r * w).exp()
}

/// The measures and discounting shared by every nested integral.
struct Frame<'a> {
    r: f64,
    t: f64,
    tol: Tolerance,
    lambda: &'a RenewalSpec,
    by: Option<&'a ByClaims>,
}

impl<'a> Frame<'a> {
    fn of(s: &'a Scenario) -> Self {
        Self {
            r: s.r,
            t: s.t,
            tol: s.tol,
            lambda: &s.renewal,
            by: s.by_claims.as_ref(),
        }
    }

    fn by(&self) -> &'a ByClaims {
        self.by.expect("by-claims frame")
    }

    fn disc(&self, w: f64) -> f64 {
        (-self.r * w).exp()
    }

    /// `∫ k(u) λ(du)`.
    fn single(&self, k: &dyn Fn(f64) -> f64) -> Result<f64, QuadError> {
        integrate_1d(k, self.lambda, self.t, self.tol)
    }

    /// `∫ k(u) (λ*H)(du)`.
    fn single_delayed(&self, k: &dyn Fn(f64) -> f64) -> Result<f64, QuadError> {
        integrate_1d(k, &self.by().delayed, self.t, self.tol)
    }

    /// `φ_{F;λ,λ}` with kernel `k`.
    fn phi_lambda_lambda(&self, k: &dyn Fn(f64) -> f64) -> Result<f64, QuadError> {
        integrate_triangular_2d(
            |u, v| self.disc(v) * k(u + v) + self.disc(u + v) * k(v),
            self.lambda,
            self.lambda,
            self.t,
            self.tol,
        )
    }

    /// `φ_{G;λ*H,λ}` with kernel `k`.
    fn phi_delayed_lambda(&self, k: &dyn Fn(f64) -> f64) -> Result<f64, QuadError> {
        integrate_triangular_2d(
            |u, v| self.disc(v) * k(u + v) + self.disc(u + v) * k(u),
            &self.by().delayed,
            self.lambda,
            self.t,
            self.tol,
        )
    }

    /// The three terms of `φ̃_G` with kernel `k`.
    fn phi_tilde_g_terms(&self, k: &dyn Fn(f64) -> f64) -> Result<[f64; 3], QuadError> {
        let by = self.by();
        let a = integrate_triangular_2d(|u, v| self.disc(v) * k(u + v), &by.delayed, self.lambda, self.t, self.tol)?;
        let b = integrate_triangular_2d(|s, v| self.disc(v) * k(v + s), &by.delay, self.lambda, self.t, self.tol)?;
        let c = integrate_triangular_3d(
            |u, s, v| self.disc(u + v) * k(v + s),
            self.lambda,
            &by.delay,
            self.lambda,
            self.t,
            self.tol,
        )?;
        Ok([a, b, c])
    }

    /// The three terms of `φ̃_F` with kernel `k`.
    fn phi_tilde_f_terms(&self, k: &dyn Fn(f64) -> f64) -> Result<[f64; 3], QuadError> {
        let by = self.by();
        // outer variable u against λ, inner v against λ*H
        let a = integrate_triangular_2d(|v, u| self.disc(u + v) * k(u), &by.delayed, self.lambda, self.t, self.tol)?;
        let b = integrate_triangular_2d(|s, v| self.disc(v + s) * k(v), &by.delay, self.lambda, self.t, self.tol)?;
        let c = integrate_triangular_3d(
            |u, s, v| self.disc(v + s) * k(u + v),
            self.lambda,
            &by.delay,
            self.lambda,
            self.t,
            self.tol,
        )?;
        Ok([a, b, c])
    }
}

fn tail_term(f: &Frame, d: &ClaimDistribution, x: f64, delayed: bool) -> Result<f64, QuadError> {
    let k = |u: f64| d.tail(x * (f.r * u).exp());
    if delayed {
        f.single_delayed(&k)
    } else {
        f.single(&k)
    }
}

/// `∫F̄(xe^{ru}) λ(du)`.
pub fn first_order_no_byclaims(s: &Scenario, x: f64) -> Result<f64, AsymError> {
    s.no_by("first_order_no_byclaims")?;
    check_x(x)?;
    Ok(tail_term(&Frame::of(s), &s.main_claim, x, false)?)
}

/// `φ_{F;λ,λ}(x;t)`. Uses only the main claims and arrivals, so it accepts
/// either model.
pub fn phi_f_lambda_lambda(s: &Scenario, x: f64) -> Result<f64, AsymError> {
    check_x(x)?;
    let k = increment_kernel(&s.main_claim, x, s.r);
    Ok(Frame::of(s).phi_lambda_lambda(&k)?)
}

pub fn second_order_no_byclaims(s: &Scenario, x: f64) -> Result<AsymptoticBreakdown, AsymError> {
    s.no_by("second_order_no_byclaims")?;
    check_x(x)?;
    let mu = s.main_claim.mean()?;
    let frame = Frame::of(s);
    let k = increment_kernel(&s.main_claim, x, s.r);
    let first = tail_term(&frame, &s.main_claim, x, false)?;
    let corr = frame.phi_lambda_lambda(&k)?;
    let remainder = frame.single(&k)?;
    Ok(AsymptoticBreakdown::new(
        x,
        first,
        vec![Correction {
            name: CORR_F,
            weight: mu,
            value: corr,
        }],
        remainder,
    ))
}

/// `φ₀(x;t) = ∫F̄(xe^{ru})λ(du) + ∫Ḡ(xe^{ru})(λ*H)(du)`.
pub fn phi0(s: &Scenario, x: f64) -> Result<f64, AsymError> {
    let by = s.by("phi0")?;
    check_x(x)?;
    let frame = Frame::of(s);
    Ok(tail_term(&frame, &s.main_claim, x, false)? + tail_term(&frame, &by.claim, x, true)?)
}

pub fn phi_tilde_f(s: &Scenario, x: f64) -> Result<f64, AsymError> {
    s.by("phi_tilde_f")?;
    check_x(x)?;
    let k = increment_kernel(&s.main_claim, x, s.r);
    Ok(Frame::of(s).phi_tilde_f_terms(&k)?.iter().sum())
}

pub fn phi_tilde_g(s: &Scenario, x: f64) -> Result<f64, AsymError> {
    let by = s.by("phi_tilde_g")?;
    check_x(x)?;
    let k = increment_kernel(&by.claim, x, s.r);
    Ok(Frame::of(s).phi_tilde_g_terms(&k)?.iter().sum())
}

pub fn phi_g_lambda_h_lambda(s: &Scenario, x: f64) -> Result<f64, AsymError> {
    let by = s.by("phi_g_lambda_h_lambda")?;
    check_x(x)?;
    let k = increment_kernel(&by.claim, x, s.r);
    Ok(Frame::of(s).phi_delayed_lambda(&k)?)
}

/// `Δ(x;t) = ∫F(xe^{ru},(x+1)e^{ru}]λ(du) + ∫G(xe^{ru},(x+1)e^{ru}](λ*H)(du)`.
pub fn remainder_scale(s: &Scenario, x: f64) -> Result<f64, AsymError> {
    check_x(x)?;
    let frame = Frame::of(s);
    let mut total = frame.single(&increment_kernel(&s.main_claim, x, s.r))?;
    if let Some(by) = &s.by_claims {
        total += frame.single_delayed(&increment_kernel(&by.claim, x, s.r))?;
    }
    Ok(total)
}

pub fn second_order_with_byclaims(s: &Scenario, x: f64) -> Result<AsymptoticBreakdown, AsymError> {
    let by = s.by("second_order_with_byclaims")?;
    check_x(x)?;
    let (mu_f, mu_g) = (s.main_claim.mean()?, by.claim.mean()?);
    let frame = Frame::of(s);
    let kf = increment_kernel(&s.main_claim, x, s.r);
    let kg = increment_kernel(&by.claim, x, s.r);
    let first = tail_term(&frame, &s.main_claim, x, false)? + tail_term(&frame, &by.claim, x, true)?;
    let corrections = vec![
        Correction {
            name: CORR_F,
            weight: mu_f,
            value: frame.phi_lambda_lambda(&kf)?,
        },
        Correction {
            name: CORR_G_TILDE,
            weight: mu_f,
            value: frame.phi_tilde_g_terms(&kg)?.iter().sum(),
        },
        Correction {
            name: CORR_G,
            weight: mu_g,
            value: frame.phi_delayed_lambda(&kg)?,
        },
        Correction {
            name: CORR_F_TILDE,
            weight: mu_g,
            value: frame.phi_tilde_f_terms(&kf)?.iter().sum(),
        },
    ];
    let remainder = frame.single(&kf)? + frame.single_delayed(&kg)?;
    Ok(AsymptoticBreakdown::new(x, first, corrections, remainder))
}

/// Dispatches on the scenario's model.
pub fn second_order(s: &Scenario, x: f64) -> Result<AsymptoticBreakdown, AsymError> {
    if s.has_byclaims() {
        second_order_with_byclaims(s, x)
    } else {
        second_order_no_byclaims(s, x)
    }
}

/// `(1 - e^{-zt}) / z`, equal to `t` at `z = 0`.
fn decay_integral(z: f64, t: f64) -> f64 {
    if z == 0.0 {
        t
    } else {
        -(-z * t).exp_m1() / z
    }
}

fn poisson_rate(s: &Scenario) -> Result<f64, AsymError> {
    s.renewal
        .poisson_rate()
        .ok_or_else(|| AsymError::NotApplicable("arrivals are not a Poisson process".into()))
}

fn pareto_index(d: &ClaimDistribution, role: &str) -> Result<f64, AsymError> {
    match d.pareto_alpha() {
        Some(a) if a > 1.0 => Ok(a),
        Some(a) => Err(AsymError::NotApplicable(format!("{role} law has index α = {a} <= 1"))),
        None => Err(AsymError::NotApplicable(format!(
            "{role} law {d} has no regularly varying density"
        ))),
    }
}

/// Regularly varying closed form without by-claims:
/// `λ(1-e^{-αrt})/(αr) F̄(x) + μ_F ζ(t) f(x)`.
pub fn closed_form_no_byclaims(s: &Scenario, x: f64) -> Result<AsymptoticBreakdown, AsymError> {
    s.no_by("closed_form_no_byclaims")?;
    check_x(x)?;
    let lambda = poisson_rate(s)?;
    let alpha = pareto_index(&s.main_claim, "claim")?;
    let (r, t) = (s.r, s.t);
    let c1 = lambda * decay_integral(alpha * r, t);
    let zeta = printed_zeta(lambda, r, alpha, t);
    let f = &s.main_claim;
    let fx = f.density(x)?;
    Ok(AsymptoticBreakdown::new(
        x,
        c1 * f.tail(x),
        vec![Correction {
            name: CORR_F,
            weight: f.mean()?,
            value: zeta * fx,
        }],
        c1 * fx,
    ))
}

/// `ζ(t) = λ²(1-e^{-rt})(1-e^{-αrt})/(αr²)`.
fn printed_zeta(lambda: f64, r: f64, alpha: f64, t: f64) -> f64 {
    lambda * lambda * decay_integral(r, t) * decay_integral(alpha * r, t)
}

/// The four coefficient functions of the by-claims closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub zeta: f64,
    pub chi: f64,
    pub omega: f64,
    pub pi: f64,
}

impl Coefficients {
    pub fn named(&self) -> [(&'static str, f64); 4] {
        [("zeta", self.zeta), ("chi", self.chi), ("omega", self.omega), ("pi", self.pi)]
    }
}

struct ClosedParams {
    lambda: f64,
    rate: f64,
    alpha: f64,
}

fn closed_params(s: &Scenario) -> Result<ClosedParams, AsymError> {
    let by = s.by("closed_form_with_byclaims")?;
    let lambda = poisson_rate(s)?;
    let alpha = pareto_index(&s.main_claim, "main claim")?;
    let alpha_g = pareto_index(&by.claim, "by-claim")?;
    if alpha != alpha_g {
        return Err(AsymError::NotApplicable(format!(
            "main and by-claim indices differ ({alpha} vs {alpha_g})"
        )));
    }
    let Law::Exponential { rate } = *by.delay.law() else {
        return Err(AsymError::NotApplicable(format!("delay law {} is not exponential", by.delay)));
    };
    let r = s.r;
    if r <= 0.0 {
        return Err(AsymError::NotApplicable("interest force must be > 0".into()));
    }
    for (what, v) in [("r", r), ("αr", alpha * r)] {
        if ((rate - v) / v).abs() < 1e-12 {
            return Err(AsymError::NotApplicable(format!("delay rate {rate} equals {what}")));
        }
    }
    Ok(ClosedParams { lambda, rate, alpha })
}

/// ζ, χ, ω, π exactly as printed alongside the by-claims closed form.
/// Only ζ agrees with its defining integral; see [`coefficient_report`].
pub fn printed_coefficients(s: &Scenario) -> Result<Coefficients, AsymError> {
    let ClosedParams { lambda: l, rate: h, alpha: a } = closed_params(s)?;
    let (r, t) = (s.r, s.t);
    let e = |z: f64| (-z).exp();
    let ar = a * r;
    let chi = l * h * ((a + 1.0) * l + ar) / (a * r * r * (ar + h) * (a + 1.0))
        + l * r * ((a + 1.0) * r + a * h) * e((a + 1.0) * r * t) / (a * r * r * (a + 1.0) * (r - h))
        + l * (h - 2.0 * l) * e((ar + h) * t) / ((ar + h) * (r - h))
        - l * l * h * e(r * t) / (a * r * r * (ar + h))
        - l * l * e(ar * t) / (a * r * r);
    let omega = l * l * (1.0 - e(r * t)) * (1.0 - e(ar * t)) / (a * r * r)
        + l * l * e(ar + h) * (1.0 - e((r - h) * t)) / ((r - h) * (ar + h))
        + l * l * e(r * t) * (1.0 - e((ar + h) * t)) / ((ar + h) * (r + ar + h))
        - l * l * (1.0 - e((a + 1.0) * r * t)) / ((a + 1.0) * r * (ar + h))
        - l * l * (1.0 - e(r * t)) / (r * (r + ar + h));
    let pi = l * h * (l + a * l + ar) / (a * r * r * (h + r)) + l * l * e(r * t) / (a * r * r)
        - l * l * h * e(ar * t) / (a * r * r * (h + r))
        + l * (l * (h - ar) + a * h * r) * e((h + r) * t) / (a * r * (h + r) * (h - ar))
        + l * h * ((a + 1.0) * (l * h - ar) + l * r * (h - ar)) * e((a + 1.0) * r * t)
            / (a * (a + 1.0) * r * r * (h + r) * (h - ar))
        - l * l * e((h + ar + r) * t) / (a * r * (h + r));
    Ok(Coefficients {
        zeta: printed_zeta(l, r, a, t),
        chi,
        omega,
        pi,
    })
}

/// ζ, χ, ω, π from their defining integrals: the φ functionals evaluated
/// with the kernel `e^{-αrw}` in place of the claim increments.
pub fn quadrature_coefficients(s: &Scenario) -> Result<Coefficients, AsymError> {
    let ClosedParams { alpha, .. } = closed_params(s)?;
    let frame = Frame::of(s);
    let k = power_kernel(alpha, s.r);
    Ok(Coefficients {
        zeta: frame.phi_lambda_lambda(&k)?,
        chi: frame.phi_tilde_g_terms(&k)?.iter().sum(),
        omega: frame.phi_delayed_lambda(&k)?,
        pi: frame.phi_tilde_f_terms(&k)?.iter().sum(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientCheck {
    pub name: &'static str,
    pub printed: f64,
    pub quadrature: f64,
    pub rel_gap: f64,
}

/// Printed against integrated coefficients.
pub fn coefficient_report(s: &Scenario) -> Result<Vec<CoefficientCheck>, AsymError> {
    let printed = printed_coefficients(s)?;
    let quad = quadrature_coefficients(s)?;
    Ok(printed
        .named()
        .iter()
        .zip(quad.named())
        .map(|(&(name, p), (_, q))| CoefficientCheck {
            name,
            printed: p,
            quadrature: q,
            rel_gap: (p - q).abs() / q.abs(),
        })
        .collect())
}

/// Regularly varying closed form with by-claims, using the integrated
/// coefficients:
/// `λ(1-e^{-αrt})/(αr)(F̄+Ḡ) - λ(1-e^{-(αr+λ̂)t})/(αr+λ̂) Ḡ + μ_F(ζf + χg) + μ_G(ωg + πf)`.
pub fn closed_form_with_byclaims(s: &Scenario, x: f64) -> Result<AsymptoticBreakdown, AsymError> {
    check_x(x)?;
    let coef = quadrature_coefficients(s)?;
    closed_form_from(s, x, &coef)
}

/// The by-claims closed form with caller-supplied coefficients.
pub fn closed_form_from(s: &Scenario, x: f64, coef: &Coefficients) -> Result<AsymptoticBreakdown, AsymError> {
    check_x(x)?;
    let ClosedParams { lambda, rate, alpha } = closed_params(s)?;
    let by = s.by("closed_form_with_byclaims")?;
    let (f, g) = (&s.main_claim, &by.claim);
    let (r, t) = (s.r, s.t);
    let c1 = lambda * decay_integral(alpha * r, t);
    let cg = c1 - lambda * decay_integral(alpha * r + rate, t);
    let (fx, gx) = (f.density(x)?, g.density(x)?);
    let (mu_f, mu_g) = (f.mean()?, g.mean()?);
    let corrections = vec![
        Correction {
            name: CORR_F,
            weight: mu_f,
            value: coef.zeta * fx,
        },
        Correction {
            name: CORR_G_TILDE,
            weight: mu_f,
            value: coef.chi * gx,
        },
        Correction {
            name: CORR_G,
            weight: mu_g,
            value: coef.omega * gx,
        },
        Correction {
            name: CORR_F_TILDE,
            weight: mu_g,
            value: coef.pi * fx,
        },
    ];
    Ok(AsymptoticBreakdown::new(
        x,
        c1 * f.tail(x) + cg * g.tail(x),
        corrections,
        c1 * fx + cg * gx,
    ))
}

/// Closed form for whichever model the scenario carries.
pub fn closed_form(s: &Scenario, x: f64) -> Result<AsymptoticBreakdown, AsymError> {
    if s.has_byclaims() {
        closed_form_with_byclaims(s, x)
    } else {
        closed_form_no_byclaims(s, x)
    }
}
