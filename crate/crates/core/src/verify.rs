//! Self-checks behind `plapmem verify`: the manufactured forcing against finite differences
//! and adaptive quadrature, and the discrete quadrature identities.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::assembly::{flux, FluxParams};
use crate::memory::{load_weights, neumaier_sum, volterra_weights, QuadratureMode};
use crate::problem::manufactured;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Fourth-order central difference.
fn d5(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// `Δ_p u` of the manufactured solution by nested differences of `u` itself.
pub fn plap_by_differences(x: f64, t: f64, p: f64) -> f64 {
    let params = FluxParams::new(p, 0.0).expect("p ≥ 2");
    let grad = |z: f64| d5(|w| manufactured::u(w, t), z, 1e-3);
    d5(|z| flux(grad(z), &params), x, 1e-3)
}

/// `u_t − Δ_p u − ∫₀ᵗ λe^{−(t−s)} Δ_p u(s) ds` evaluated from `u` alone.
pub fn forcing_oracle(x: f64, t: f64, p: f64, lambda: f64) -> f64 {
    let ut = d5(|s| manufactured::u(x, s), t, 1e-3);
    let memory = adaptive_simpson(
        &|s: f64| lambda * (-(t - s)).exp() * plap_by_differences(x, s, p),
        0.0,
        t,
        1e-12,
    );
    ut - plap_by_differences(x, t, p) - memory
}

fn forcing_check(p: f64, lambda: f64, rng: &mut StdRng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        // the differences straddle the kink of |ξ|^{p−2}ξ near x = 1/2; stay clear of it
        let mut x = rng.random_range(0.02..0.98);
        while (x - 0.5f64).abs() < 0.01 {
            x = rng.random_range(0.02..0.98);
        }
        let t = rng.random_range(0.0..0.1);
        let closed = manufactured::f(x, t, p, lambda);
        let oracle = forcing_oracle(x, t, p, lambda);
        worst = worst.max((closed - oracle).abs() / closed.abs().max(1.0));
    }
    Check::new(
        format!("manufactured forcing p={p} lambda={lambda}"),
        worst < 1e-6,
        format!("max relative deviation {worst:e} over 100 points"),
    )
}

/// `y + ∫₀ᵗ g(t−s) y(s) ds = u g(0) − u₀ g(t) + ∫₀ᵗ g'(t−s) u(s) ds − ∫₀ᵗ g(t−s) f(s) ds`.
fn volterra_check(p: f64, lambda: f64, rng: &mut StdRng) -> Check {
    let g = |s: f64| lambda * (-s).exp();
    let gp = |s: f64| -lambda * (-s).exp();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x = rng.random_range(0.05..0.95);
        let t = rng.random_range(0.01..1.0);
        let y = |s: f64| manufactured::y(x, s, p, lambda);
        let lhs = y(t) + adaptive_simpson(&|s| g(t - s) * y(s), 0.0, t, 1e-13);
        let rhs = manufactured::u(x, t) * g(0.0) - manufactured::phi(x) * g(t)
            + adaptive_simpson(&|s| gp(t - s) * manufactured::u(x, s), 0.0, t, 1e-13)
            - adaptive_simpson(&|s| g(t - s) * manufactured::f(x, s, p, lambda), 0.0, t, 1e-13);
        worst = worst.max((lhs - rhs).abs());
    }
    Check::new(
        format!("memory integral equation p={p} lambda={lambda}"),
        worst < 1e-8,
        format!("max deviation {worst:e} over 10 points"),
    )
}

fn weight_sum_check() -> Check {
    let mut worst = 0.0f64;
    for delta in [0.1, 1e-3] {
        for k in 0..=200 {
            let t = (k as f64 + 0.5) * delta;
            let a = volterra_weights(k, delta).kernel_sum(|_| 1.0);
            let b = neumaier_sum(
                load_weights(k, delta, QuadratureMode::Consistent)
                    .iter()
                    .map(|w| w.weight),
            );
            worst = worst.max((a - t).abs() / t).max((b - t).abs() / t);
        }
    }
    Check::new(
        "constant-kernel weight sums",
        worst <= 1e-14,
        format!("max relative deviation {worst:e} for k <= 200"),
    )
}

fn literal_mode_check() -> Check {
    let delta = 0.1;
    let mut worst = 0.0f64;
    for k in 1..=50 {
        let c: f64 = load_weights(k, delta, QuadratureMode::Consistent).iter().map(|w| w.weight).sum();
        let l: f64 = load_weights(k, delta, QuadratureMode::Literal).iter().map(|w| w.weight).sum();
        worst = worst.max((l - c - delta).abs());
    }
    Check::new(
        "literal minus consistent load weights",
        worst < 1e-12,
        format!("max deviation from delta {worst:e}"),
    )
}

pub fn run_checks() -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut out = Vec::new();
    for (p, lambda) in [(3.0, 1.0), (4.0, 1.0), (2.5, -2.0), (3.0, 0.0)] {
        out.push(forcing_check(p, lambda, &mut rng));
    }
    for (p, lambda) in [(3.0, 1.0), (4.0, -1.5), (2.0, 2.0)] {
        out.push(volterra_check(p, lambda, &mut rng));
    }
    out.push(weight_sum_check());
    out.push(literal_mode_check());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        assert_eq!(adaptive_simpson(&|x: f64| x, 1.0, 1.0, 1e-9), 0.0);
    }

    #[test]
    fn differences_reproduce_p2_laplacian() {
        for x in [0.1, 0.3, 0.7] {
            let exact = manufactured::psi(x, 2.0) * (-0.05f64).exp();
            assert!((plap_by_differences(x, 0.05, 2.0) - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn all_checks_pass() {
        for c in run_checks() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
