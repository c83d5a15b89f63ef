//! Nested adaptive Simpson over `{u + v <= t}` against renewal measures.

use ruin_asym::quad::{integrate_1d, integrate_triangular_2d, Lebesgue, Tolerance};
use ruin_asym::renewal::RenewalSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tol = Tolerance::DEFAULT;
    let t = 2.0;
    let area = integrate_triangular_2d(|_, _| 1.0, &Lebesgue, &Lebesgue, t, tol)?;
    println!("area of the triangle with side {t}: {area:.12} (exact {})", t * t / 2.0);

    let r = 0.1;
    let poisson = RenewalSpec::poisson(0.2)?;
    let discount = integrate_1d(|v| (-r * v).exp(), &poisson, 10.0, tol)?;
    let exact = 0.2 * (1.0 - (-r * 10.0f64).exp()) / r;
    println!("∫ e^(-rv) λ(dv) on [0, 10]: {discount:.12} (exact {exact:.12})");

    let pair = integrate_triangular_2d(|u, v| (-r * (u + v)).exp(), &poisson, &poisson, 10.0, tol)?;
    println!("∫∫ e^(-r(u+v)) λ(du) λ(dv) over u + v <= 10: {pair:.12}");
    Ok(())
}
