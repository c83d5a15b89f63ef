//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see
//! the lines.

use std::process::Command;
use std::time::Instant;

use ruin_asym::asym::{
    closed_form, closed_form_no_byclaims, coefficient_report, first_order_no_byclaims, phi0, phi_f_lambda_lambda,
    phi_g_lambda_h_lambda, phi_tilde_f, phi_tilde_g, quadrature_coefficients, remainder_scale, second_order,
    second_order_no_byclaims, AsymError, AsymptoticBreakdown, Scenario,
};
use ruin_asym::config::{parse_x_grid, preset};
use ruin_asym::dist::ClaimDistribution;
use ruin_asym::mc::{exceedances, sample_pool, WeightBox};
use ruin_asym::validate::{byclaim_identity_check, kesten_growth, s2_defining_ratio, Identity, Outcome};

fn report(n: u32, ok: bool, what: &str, started: Instant) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {n}: {verdict} {what} [{:.1}s]", started.elapsed().as_secs_f64());
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn pareto() -> ClaimDistribution {
    "pareto(2, 2.3)".parse().unwrap()
}

#[test]
fn criterion_1_second_order_subexponential_membership() {
    let started = Instant::now();
    let d = s2_defining_ratio(&pareto(), &[1e2, 1e3, 1e4]).unwrap();
    let gaps: Vec<f64> = d.ratios.iter().map(|q| (q - 1.0).abs()).collect();
    let ok = d.ratios[2] > 0.9 && d.ratios[2] < 1.1 && gaps[1] < gaps[0] && gaps[2] < gaps[1];
    report(1, ok, &format!("S2 ratios {:?}", d.ratios), started);
    assert!(ok);
}

#[test]
fn criterion_2_first_order_matches_closed_form() {
    let started = Instant::now();
    let s = preset("pareto-s4").unwrap().scenario.main_claims_only();
    let gaps: Vec<f64> = [1e3, 1e4]
        .iter()
        .map(|&x| {
            let quad = first_order_no_byclaims(&s, x).unwrap();
            let closed = closed_form_no_byclaims(&s, x).unwrap().first_order;
            rel_gap(quad, closed)
        })
        .collect();
    let ok = gaps[0] < 0.02 && gaps[1] < 0.005;
    report(2, ok, &format!("relative gaps {:e} at 1e3, {:e} at 1e4", gaps[0], gaps[1]), started);
    assert!(ok);
}

#[test]
fn criterion_3_pair_coefficient() {
    let started = Instant::now();
    let s = preset("pareto-s4").unwrap().scenario;
    let zeta = 0.98916;
    let gaps: Vec<f64> = [1e3, 1e4]
        .iter()
        .map(|&x| rel_gap(phi_f_lambda_lambda(&s, x).unwrap() / s.main_claim().density(x).unwrap(), zeta))
        .collect();
    let ok = gaps[0] < 0.03 && gaps[1] < 0.01;
    report(3, ok, &format!("gaps to zeta {:e} at 1e3, {:e} at 1e4", gaps[0], gaps[1]), started);
    assert!(ok);
}

#[test]
fn criterion_4_byclaim_coefficients() {
    let started = Instant::now();
    let s = preset("pareto-s4").unwrap().scenario;
    let x = 1e5;
    let coef = quadrature_coefficients(&s).unwrap();
    let f = s.main_claim().density(x).unwrap();
    let g = s.by_claim().unwrap().density(x).unwrap();
    let checks = [
        ("chi", phi_tilde_g(&s, x).unwrap() / g, coef.chi),
        ("omega", phi_g_lambda_h_lambda(&s, x).unwrap() / g, coef.omega),
        ("pi", phi_tilde_f(&s, x).unwrap() / f, coef.pi),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (name, ratio, c) in checks {
        let gap = rel_gap(ratio, c);
        ok &= gap < 0.01;
        detail += &format!("{name} {ratio:.6} vs {c:.6} ({gap:.1e}); ");
    }
    for c in coefficient_report(&s).unwrap() {
        if c.rel_gap > 0.01 {
            println!("  note: formula value of {} is {:.6}, integral {:.6} (reported, not failed)", c.name, c.printed, c.quadrature);
        }
    }
    report(4, ok, &detail, started);
    assert!(ok);
}

#[test]
fn criterion_5_byclaim_identities() {
    let started = Instant::now();
    let s = preset("pareto-s4").unwrap().scenario;
    let mut ok = true;
    let mut detail = String::new();
    for (name, which) in [("main increment", Identity::MainIncrement), ("by-claim increment", Identity::ByIncrement)] {
        let r = byclaim_identity_check(&s, which, 50.0, 10_000_000, 1, 8).unwrap();
        ok &= r.rel_gap < 0.1;
        detail += &format!("{name}: mc {:.6e} vs quadrature {:.6e} (gap {:.2e}); ", r.lhs, r.rhs, r.rel_gap);
    }
    report(5, ok, &detail, started);
    assert!(ok);
}

/// Ordering of Monte-Carlo deviations over the window where the regime flag
/// is off and at least `MIN_HITS` paths exceed x.
struct Ordering {
    window: (f64, f64),
    better: usize,
    points: usize,
    mad_first: f64,
    mad_second: f64,
}

impl Ordering {
    fn holds(&self) -> bool {
        self.better as f64 >= 0.6 * self.points as f64 && self.mad_second < self.mad_first
    }
}

const MIN_HITS: usize = 50;

fn regime_start(eval: &(dyn Fn(f64) -> Result<AsymptoticBreakdown, AsymError> + Sync)) -> f64 {
    let (mut lo, mut hi) = (1.0f64, 1e3f64);
    assert!(eval(lo).unwrap().regime_flag && !eval(hi).unwrap().regime_flag);
    for _ in 0..30 {
        let mid = (lo * hi).sqrt();
        if eval(mid).unwrap().regime_flag {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn ordering(
    s: &Scenario,
    n: u64,
    seed: u64,
    workers: usize,
    eval: &(dyn Fn(f64) -> Result<AsymptoticBreakdown, AsymError> + Sync),
) -> Ordering {
    let pool = sample_pool(s, n, seed, workers).unwrap();
    let x_lo = regime_start(eval);
    let x_hi = pool[pool.len() - MIN_HITS - 1];
    assert!(x_hi > x_lo, "empty window [{x_lo}, {x_hi}]");
    let grid = parse_x_grid(&format!("logspace:{x_lo}:{x_hi}:15")).unwrap();
    use rayon::prelude::*;
    let rows: Vec<AsymptoticBreakdown> = grid.par_iter().map(|&x| eval(x).unwrap()).collect();
    let (mut better, mut dev_first, mut dev_second) = (0, 0.0, 0.0);
    for (x, b) in grid.iter().zip(&rows) {
        assert!(!b.regime_flag);
        let hits = exceedances(&pool, *x);
        assert!(hits >= MIN_HITS as u64);
        let mc = hits as f64 / n as f64;
        let (e1, e2) = ((b.first_order - mc).abs(), (b.total_second_order - mc).abs());
        println!("  x {x:>10.4}  mc {mc:.5e}  first {:.5e}  second {:.5e}", b.first_order, b.total_second_order);
        better += usize::from(e2 <= e1);
        dev_first += e1;
        dev_second += e2;
    }
    Ordering {
        window: (x_lo, x_hi),
        better,
        points: grid.len(),
        mad_first: dev_first / grid.len() as f64,
        mad_second: dev_second / grid.len() as f64,
    }
}

fn describe(o: &Ordering) -> String {
    format!(
        "window [{:.3}, {:.3}], second order closer on {}/{}, MAD first {:.4e} second {:.4e}",
        o.window.0, o.window.1, o.better, o.points, o.mad_first, o.mad_second
    )
}

#[test]
fn criterion_6_pareto_ordering() {
    let started = Instant::now();
    let c = preset("pareto-s4").unwrap();
    let s = &c.scenario;
    let o = ordering(s, 100_000, c.run.seed, c.run.workers, &|x| second_order(s, x));
    report(6, o.holds(), &describe(&o), started);
    assert!(o.holds());
}

#[test]
fn criterion_7_weibull_path() {
    let started = Instant::now();
    let c = preset("weibull-s4").unwrap();
    let s = c.scenario.main_claims_only();
    let rejected = matches!(closed_form(&s, 100.0), Err(AsymError::NotApplicable(_)))
        && matches!(closed_form(&c.scenario, 100.0), Err(AsymError::NotApplicable(_)));
    let converged = c.run.x_grid.iter().all(|&x| second_order_no_byclaims(&s, x).is_ok());
    let o = ordering(&s, 100_000, c.run.seed, c.run.workers, &|x| second_order_no_byclaims(&s, x));
    let ok = rejected && converged && o.holds();
    report(
        7,
        ok,
        &format!("closed form rejected {rejected}, quadrature converged {converged}; {}", describe(&o)),
        started,
    );
    let full = ordering(&c.scenario, 100_000, c.run.seed, c.run.workers, &|x| second_order(&c.scenario, x));
    println!("  with by-claims (diagnostic): {}", describe(&full));
    assert!(ok);
}

#[test]
fn criterion_8_compare_is_deterministic() {
    let started = Instant::now();
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_ruin-asym"))
            .args(["compare", "--preset", "pareto-s4", "--seed", "7", "--workers", "4"])
            .env_remove("RUIN_ASYM_THREADS")
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let (a, b) = (run(), run());
    let ok = a == b && a.len() > 100;
    report(8, ok, &format!("{} bytes, identical {}", a.len(), a == b), started);
    assert!(ok);
}

#[test]
fn criterion_9_remainder_is_negligible() {
    let started = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for name in ["pareto-s4", "weibull-s4"] {
        let s = preset(name).unwrap().scenario;
        let q: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&x| remainder_scale(&s, x).unwrap() / phi0(&s, x).unwrap())
            .collect();
        ok &= q[1] < q[0] && q[2] < q[1];
        detail += &format!("{name} {:.3e} {:.3e} {:.3e}; ", q[0], q[1], q[2]);
    }
    report(9, ok, &detail, started);
    assert!(ok);
}

#[test]
fn criterion_10_kesten_growth() {
    let started = Instant::now();
    let ns: Vec<usize> = (2..=8).collect();
    let g = kesten_growth(&pareto(), WeightBox::new(0.5, 2.0).unwrap(), &ns, 1e3, 1_000_000, 1, 8);
    let ok = g.outcome == Outcome::Pass;
    let what = match g.outcome {
        Outcome::Inconclusive => "INCONCLUSIVE (noise-dominated)".to_string(),
        _ => format!("slope {:.4} against bound {:.4}", g.slope.unwrap(), g.bound),
    };
    report(10, ok, &what, started);
    assert!(ok);
}
