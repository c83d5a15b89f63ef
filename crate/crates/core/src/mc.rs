//! Crude Monte-Carlo for discounted aggregate claims.
//!
//! Samples are split into `workers` contiguous blocks; block `w` draws from
//! the ChaCha8 stream `(seed, w)`. Results depend on `(seed, workers, n)` only,
//! never on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::asym::Scenario;
use crate::dist::ClaimDistribution;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("sample count must be >= 1")]
    NoSamples,
    #[error("worker count must be >= 1")]
    NoWorkers,
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("{weights} weights for {dists} distributions")]
    LengthMismatch { weights: usize, dists: usize },
    #[error("weight {0} outside the box [{1}, {2}]")]
    WeightOutOfBox(f64, f64, f64),
    #[error("weight box [{0}, {1}] must satisfy 0 < a <= b < inf")]
    BadBox(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub x: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub n: u64,
    pub seed: u64,
    pub workers: usize,
}

impl TailEstimate {
    pub fn new(x: f64, hits: u64, n: u64, seed: u64, workers: usize) -> Self {
        let p_hat = hits as f64 / n as f64;
        let (ci_low, ci_high) = wilson(hits, n, Z95);
        Self {
            x,
            p_hat,
            ci_low: ci_low.min(p_hat),
            ci_high: ci_high.max(p_hat),
            hits,
            n,
            seed,
            workers,
        }
    }

    /// Binomial standard error at `p_hat`.
    pub fn std_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.n as f64).sqrt()
    }
}

/// Wilson score interval for `hits` successes in `n` trials.
pub fn wilson(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// The generator for worker `w`.
pub fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

/// Runs `job(rng, count)` once per worker block and returns the results in
/// worker order.
pub fn run_blocks<T, F>(n: u64, seed: u64, workers: usize, job: F) -> Result<Vec<T>, McError>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    if n == 0 {
        return Err(McError::NoSamples);
    }
    if workers == 0 {
        return Err(McError::NoWorkers);
    }
    let (base, extra) = (n / workers as u64, n % workers as u64);
    Ok((0..workers)
        .into_par_iter()
        .map(|w| {
            let count = base + u64::from((w as u64) < extra);
            job(&mut worker_rng(seed, w), count)
        })
        .collect())
}

/// One draw of `D_r(t) = Σ_{k≤N(t)} X_k e^{-rτ_k}`.
pub fn simulate_no_byclaims<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> f64 {
    let (r, t) = (s.r(), s.t());
    let mut clock = 0.0;
    let mut total = 0.0;
    loop {
        clock += s.renewal().interarrival().draw(rng);
        if clock > t {
            return total;
        }
        total += s.main_claim().draw(rng) * (-r * clock).exp();
    }
}

/// One draw of `L_r(t) = Σ_{k≤N(t)} (X_k e^{-rτ_k} + Y_k e^{-r(τ_k+D_k)} 1{τ_k+D_k ≤ t})`.
///
/// Per arrival the draws are inter-arrival, delay, main claim, by-claim;
/// point-mass laws consume nothing, so degenerate delay and by-claim laws
/// replay [`simulate_no_byclaims`] exactly.
pub fn simulate_with_byclaims<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> f64 {
    let (Some(g), Some(h)) = (s.by_claim(), s.delay()) else {
        return simulate_no_byclaims(s, rng);
    };
    let (r, t) = (s.r(), s.t());
    let mut clock = 0.0;
    let mut total = 0.0;
    loop {
        clock += s.renewal().interarrival().draw(rng);
        if clock > t {
            return total;
        }
        let paid = clock + h.draw(rng);
        total += s.main_claim().draw(rng) * (-r * clock).exp();
        let y = g.draw(rng);
        if paid <= t {
            total += y * (-r * paid).exp();
        }
    }
}

/// Draws one value of the scenario's aggregate.
pub fn simulate<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> f64 {
    if s.has_byclaims() {
        simulate_with_byclaims(s, rng)
    } else {
        simulate_no_byclaims(s, rng)
    }
}

/// `n` aggregate draws, sorted ascending.
pub fn sample_pool(s: &Scenario, n: u64, seed: u64, workers: usize) -> Result<Vec<f64>, McError> {
    let blocks = run_blocks(n, seed, workers, |rng, count| {
        (0..count).map(|_| simulate(s, rng)).collect::<Vec<f64>>()
    })?;
    let mut pool: Vec<f64> = blocks.into_iter().flatten().collect();
    pool.sort_by(f64::total_cmp);
    Ok(pool)
}

/// Number of pool values strictly above `x`.
pub fn exceedances(sorted: &[f64], x: f64) -> u64 {
    (sorted.len() - sorted.partition_point(|&v| v <= x)) as u64
}

/// `P(S > x)` for every `x` in the grid from one shared pool of `n` paths.
pub fn estimate_tail(
    s: &Scenario,
    x_grid: &[f64],
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<TailEstimate>, McError> {
    if x_grid.is_empty() {
        return Err(McError::EmptyGrid);
    }
    let pool = sample_pool(s, n, seed, workers)?;
    Ok(x_grid
        .iter()
        .map(|&x| TailEstimate::new(x, exceedances(&pool, x), n, seed, workers))
        .collect())
}

/// Admissible weights `[a, b]` with `0 < a <= b < ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightBox {
    pub a: f64,
    pub b: f64,
}

impl WeightBox {
    pub fn new(a: f64, b: f64) -> Result<Self, McError> {
        if a > 0.0 && a <= b && b.is_finite() {
            Ok(Self { a, b })
        } else {
            Err(McError::BadBox(a, b))
        }
    }

    pub fn contains(&self, c: f64) -> bool {
        c >= self.a && c <= self.b
    }

    /// `n` weights uniform on the box.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.a + (self.b - self.a) * rng.gen::<f64>()).collect()
    }
}

/// Checks weights against the box and the distribution count.
pub fn check_weights(weights: &[f64], bounds: WeightBox, dists: &[ClaimDistribution]) -> Result<(), McError> {
    if weights.len() != dists.len() {
        return Err(McError::LengthMismatch {
            weights: weights.len(),
            dists: dists.len(),
        });
    }
    match weights.iter().find(|&&c| !bounds.contains(c)) {
        Some(&c) => Err(McError::WeightOutOfBox(c, bounds.a, bounds.b)),
        None => Ok(()),
    }
}

/// One draw of `Σ c_i Z_i`.
pub fn simulate_weighted_sum<R: Rng + ?Sized>(
    weights: &[f64],
    bounds: WeightBox,
    dists: &[ClaimDistribution],
    rng: &mut R,
) -> Result<f64, McError> {
    check_weights(weights, bounds, dists)?;
    Ok(weights.iter().zip(dists).map(|(c, d)| c * d.draw(rng)).sum())
}
