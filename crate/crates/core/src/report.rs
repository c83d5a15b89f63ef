//! Pipelines behind the command-line tool and their CSV tables.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::asym::{
    closed_form_from, closed_form_no_byclaims, quadrature_coefficients, second_order, AsymError,
    AsymptoticBreakdown, Coefficients, Scenario, CORR_F, CORR_F_TILDE, CORR_G, CORR_G_TILDE,
};
use crate::config::RunOptions;
use crate::mc::{estimate_tail, McError, TailEstimate, WeightBox};
use crate::validate::{
    byclaim_identity_check, kesten_growth, s2_defining_ratio, weighted_sum_expansion_check, Identity, Outcome,
    ValidateError,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Asym(#[from] AsymError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Second-order breakdowns over the grid, evaluated in parallel.
pub fn breakdowns(s: &Scenario, x_grid: &[f64]) -> Result<Vec<AsymptoticBreakdown>, AsymError> {
    x_grid.par_iter().map(|&x| second_order(s, x)).collect()
}

/// Closed-form breakdowns, or `None` when the scenario has no closed form.
pub fn closed_breakdowns(s: &Scenario, x_grid: &[f64]) -> Result<Option<Vec<AsymptoticBreakdown>>, AsymError> {
    let attempt = |x_grid: &[f64]| -> Result<Vec<AsymptoticBreakdown>, AsymError> {
        if s.has_byclaims() {
            let coef: Coefficients = quadrature_coefficients(s)?;
            x_grid.iter().map(|&x| closed_form_from(s, x, &coef)).collect()
        } else {
            x_grid.iter().map(|&x| closed_form_no_byclaims(s, x)).collect()
        }
    };
    match attempt(x_grid) {
        Ok(rows) => Ok(Some(rows)),
        Err(AsymError::NotApplicable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub mc: TailEstimate,
    pub first_order: f64,
    pub second_order: f64,
    pub closed_first: Option<f64>,
    pub closed_second: Option<f64>,
    pub regime_flag: bool,
}

/// Monte-Carlo estimates beside the first- and second-order asymptotics.
pub fn run_compare(s: &Scenario, run: &RunOptions) -> Result<Vec<CompareRow>, ReportError> {
    let mc = estimate_tail(s, &run.x_grid, run.samples, run.seed, run.workers)?;
    let asym = breakdowns(s, &run.x_grid)?;
    let closed = closed_breakdowns(s, &run.x_grid)?;
    Ok(mc
        .into_iter()
        .zip(asym)
        .enumerate()
        .map(|(i, (mc, b))| {
            let c = closed.as_ref().map(|c| &c[i]);
            CompareRow {
                mc,
                first_order: b.first_order,
                second_order: b.total_second_order,
                closed_first: c.map(|c| c.first_order),
                closed_second: c.map(|c| c.total_second_order),
                regime_flag: b.regime_flag,
            }
        })
        .collect())
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub const ASYMPTOTICS_HEADER: [&str; 9] = [
    "x",
    "first_order",
    "corr_F",
    "corr_G_tilde",
    "corr_G",
    "corr_F_tilde",
    "remainder_scale",
    "total_second_order",
    "regime_flag",
];

/// Correction columns hold μ-weighted contributions, so each row satisfies
/// `total_second_order = first_order + Σ corr_*`.
pub fn write_asymptotics_csv<W: Write>(w: W, rows: &[AsymptoticBreakdown]) -> Result<(), ReportError> {
    let mut out = writer(w);
    out.write_record(ASYMPTOTICS_HEADER)?;
    for b in rows {
        out.write_record([
            num(b.x),
            num(b.first_order),
            num(b.contribution(CORR_F)),
            num(b.contribution(CORR_G_TILDE)),
            num(b.contribution(CORR_G)),
            num(b.contribution(CORR_F_TILDE)),
            num(b.remainder_scale),
            num(b.total_second_order),
            b.regime_flag.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub const SIMULATE_HEADER: [&str; 6] = ["x", "p_hat", "ci_low", "ci_high", "n", "seed"];

pub fn write_simulate_csv<W: Write>(w: W, rows: &[TailEstimate]) -> Result<(), ReportError> {
    let mut out = writer(w);
    out.write_record(SIMULATE_HEADER)?;
    for e in rows {
        out.write_record([
            num(e.x),
            num(e.p_hat),
            num(e.ci_low),
            num(e.ci_high),
            e.n.to_string(),
            e.seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub const COMPARE_HEADER: [&str; 9] = [
    "x",
    "mc_p",
    "mc_lo",
    "mc_hi",
    "first_order",
    "second_order",
    "closed_first",
    "closed_second",
    "regime_flag",
];

/// Closed-form columns stay empty when the scenario has no closed form.
pub fn write_compare_csv<W: Write>(w: W, rows: &[CompareRow]) -> Result<(), ReportError> {
    let mut out = writer(w);
    out.write_record(COMPARE_HEADER)?;
    for r in rows {
        out.write_record([
            num(r.mc.x),
            num(r.mc.p_hat),
            num(r.mc.ci_low),
            num(r.mc.ci_high),
            num(r.first_order),
            num(r.second_order),
            opt(r.closed_first),
            opt(r.closed_second),
            r.regime_flag.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One line of a validation table.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub check: String,
    pub x: f64,
    pub statistic: f64,
    pub reference: f64,
    pub outcome: Outcome,
    pub detail: String,
}

pub const VALIDATION_HEADER: [&str; 6] = ["check", "x", "statistic", "reference", "outcome", "detail"];

pub fn write_validation_csv<W: Write>(w: W, rows: &[ValidationRow]) -> Result<(), ReportError> {
    let mut out = writer(w);
    out.write_record(VALIDATION_HEADER)?;
    for r in rows {
        out.write_record([
            r.check.clone(),
            num(r.x),
            num(r.statistic),
            num(r.reference),
            r.outcome.to_string(),
            r.detail.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// The validation checks the command-line tool can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    S2,
    Kesten,
    Lemma62,
    Lemma63,
    Lemma64,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::S2, Check::Kesten, Check::Lemma62, Check::Lemma63, Check::Lemma64];

    pub fn name(self) -> &'static str {
        match self {
            Check::S2 => "s2",
            Check::Kesten => "kesten",
            Check::Lemma62 => "lemma62",
            Check::Lemma63 => "lemma63",
            Check::Lemma64 => "lemma64",
        }
    }

    /// Thresholds used when the caller gives none.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Check::S2 => vec![1e2, 1e3, 1e4, 1e5],
            Check::Kesten | Check::Lemma62 => vec![1e3],
            Check::Lemma63 | Check::Lemma64 => vec![50.0],
        }
    }
}

fn inconclusive(check: &str, x: f64, e: &ValidateError) -> ValidationRow {
    ValidationRow {
        check: check.to_string(),
        x,
        statistic: f64::NAN,
        reference: f64::NAN,
        outcome: Outcome::Inconclusive,
        detail: e.to_string(),
    }
}

/// Runs one check on the scenario's main-claim law (and by-claim structure
/// for the identities). `mc_n` draws per Monte-Carlo estimate.
pub fn run_check(
    check: Check,
    s: &Scenario,
    x_grid: &[f64],
    mc_n: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<ValidationRow>, ReportError> {
    let f = s.main_claim();
    let mut rows = Vec::new();
    match check {
        Check::S2 => {
            let d = s2_defining_ratio(f, x_grid)?;
            for (&x, &q) in d.x_grid.iter().zip(&d.ratios) {
                rows.push(ValidationRow {
                    check: "s2".into(),
                    x,
                    statistic: q,
                    reference: 1.0,
                    outcome: Outcome::from_bool(q > 0.9 && q < 1.1),
                    detail: format!("{f}"),
                });
            }
            rows.push(ValidationRow {
                check: "s2-verdict".into(),
                x: *x_grid.last().unwrap_or(&f64::NAN),
                statistic: *d.ratios.last().unwrap_or(&f64::NAN),
                reference: 1.0,
                outcome: Outcome::from_bool(d.approaching_one),
                detail: "last three ratios in (0.9, 1.1) and |ratio - 1| decreasing".into(),
            });
        }
        Check::Kesten => {
            let bounds = WeightBox::new(0.5, 2.0)?;
            let ns: Vec<usize> = (2..=8).collect();
            for &x in x_grid {
                let g = kesten_growth(f, bounds, &ns, x, mc_n, seed, workers);
                for (n, r) in g.ns.iter().zip(&g.ratios) {
                    let name = format!("kesten-n{n}");
                    rows.push(match r {
                        Ok(k) => ValidationRow {
                            check: name,
                            x,
                            statistic: k.ratio,
                            reference: k.denominator,
                            outcome: Outcome::Pass,
                            detail: format!("numerator {:e} ± {:e}", k.numerator, k.numerator_se),
                        },
                        Err(e) => inconclusive(&name, x, e),
                    });
                }
                rows.push(ValidationRow {
                    check: "kesten-slope".into(),
                    x,
                    statistic: g.slope.unwrap_or(f64::NAN),
                    reference: g.bound,
                    outcome: g.outcome,
                    detail: "slope of ln ratio in n against ln(1.5) + 0.2".into(),
                });
            }
        }
        Check::Lemma62 => {
            for &x in x_grid {
                let pair = [f.clone(), f.clone()];
                rows.push(match weighted_sum_expansion_check(&pair, &[1.0, 1.0], x, mc_n, seed, workers) {
                    Ok(r) => ValidationRow {
                        check: "lemma62".into(),
                        x,
                        statistic: r.ratio,
                        reference: 1.0,
                        outcome: Outcome::from_bool(r.ratio > 0.8 && r.ratio < 1.2),
                        detail: format!("lhs {:e} ± {:e}, first {:e}, second {:e}", r.lhs, r.lhs_se, r.first_sum, r.second_sum),
                    },
                    Err(e @ ValidateError::Inconclusive { .. }) => inconclusive("lemma62", x, &e),
                    Err(e) => return Err(e.into()),
                });
            }
        }
        Check::Lemma63 | Check::Lemma64 => {
            let which = if check == Check::Lemma63 {
                Identity::MainIncrement
            } else {
                Identity::ByIncrement
            };
            for &x in x_grid {
                rows.push(match byclaim_identity_check(s, which, x, mc_n, seed, workers) {
                    Ok(r) => ValidationRow {
                        check: check.name().into(),
                        x,
                        statistic: r.lhs,
                        reference: r.rhs,
                        outcome: Outcome::from_bool(r.rel_gap < 0.1),
                        detail: format!("relative gap {:e}, lhs se {:e}", r.rel_gap, r.lhs_se),
                    },
                    Err(e @ ValidateError::Inconclusive { .. }) => inconclusive(check.name(), x, &e),
                    Err(e) => return Err(e.into()),
                });
            }
        }
    }
    Ok(rows)
}
