//! Continuous problem data and the built-in test problems.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::memory::Kernel;

pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `u_t − Δ_p u = ∫₀ᵗ g(t−s) Δ_p u ds + f` on `(a, b) × (0, T)`, `u = 0` on the boundary.
#[derive(Clone)]
pub struct ProblemDef {
    pub a: f64,
    pub b: f64,
    pub t_final: f64,
    pub p: f64,
    pub kernel: Kernel,
    pub u0: SpaceFn,
    /// `None` means `f ≡ 0`.
    pub f: Option<SpaceTimeFn>,
    pub exact_u: Option<SpaceTimeFn>,
    pub exact_y: Option<SpaceTimeFn>,
}

impl fmt::Debug for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDef")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("t_final", &self.t_final)
            .field("p", &self.p)
            .field("kernel", &self.kernel)
            .field("forced", &self.f.is_some())
            .field("exact", &self.exact_u.is_some())
            .finish()
    }
}

impl ProblemDef {
    /// Unforced problem without a known solution.
    pub fn new(
        a: f64,
        b: f64,
        t_final: f64,
        p: f64,
        kernel: Kernel,
        u0: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            a,
            b,
            t_final,
            p,
            kernel,
            u0: Arc::new(u0),
            f: None,
            exact_u: None,
            exact_y: None,
        }
    }

    pub fn with_forcing(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.f = Some(Arc::new(f));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.b > self.a) {
            return Err(Error::config(format!(
                "domain must satisfy a < b (got [{}, {}])",
                self.a, self.b
            )));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::config(format!("T must be positive (got {})", self.t_final)));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::config(format!("p must be > 1 (got {})", self.p)));
        }
        Ok(())
    }
}

/// `φ(x) = (x(1−x))²` and the pieces of its p-Laplacian.
pub mod manufactured {
    pub fn phi(x: f64) -> f64 {
        let s = x * (1.0 - x);
        s * s
    }

    pub fn dphi(x: f64) -> f64 {
        2.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
    }

    /// `ψ = (|φ'|^{p−2} φ')'`.
    pub fn psi(x: f64, p: f64) -> f64 {
        let w = dphi(x);
        let dw = 2.0 * (6.0 * x * x - 6.0 * x + 1.0);
        if p == 2.0 {
            dw
        } else if w == 0.0 && p < 2.0 {
            f64::INFINITY.copysign(dw)
        } else {
            (p - 1.0) * w.abs().powf(p - 2.0) * dw
        }
    }

    /// `∫₀ᵗ e^{(2−p)s} ds`.
    pub fn memory_factor(t: f64, p: f64) -> f64 {
        let c = 2.0 - p;
        if c == 0.0 {
            t
        } else {
            (c * t).exp_m1() / c
        }
    }

    pub fn u(x: f64, t: f64) -> f64 {
        phi(x) * (-t).exp()
    }

    pub fn y(x: f64, t: f64, p: f64, lambda: f64) -> f64 {
        lambda * psi(x, p) * (-t).exp() * memory_factor(t, p)
    }

    pub fn f(x: f64, t: f64, p: f64, lambda: f64) -> f64 {
        -u(x, t) - psi(x, p) * (-(p - 1.0) * t).exp() - y(x, t, p, lambda)
    }
}

/// Manufactured problem on `(0, 1)` with exact solution `u = (x(1−x))² e^{−t}` and
/// kernel `λ e^{−ξ}`.
pub fn manufactured_example1(p: f64, lambda: f64, t_final: f64) -> ProblemDef {
    ProblemDef {
        a: 0.0,
        b: 1.0,
        t_final,
        p,
        kernel: Kernel::exponential(lambda),
        u0: Arc::new(manufactured::phi),
        f: Some(Arc::new(move |x, t| manufactured::f(x, t, p, lambda))),
        exact_u: Some(Arc::new(manufactured::u)),
        exact_y: Some(Arc::new(move |x, t| manufactured::y(x, t, p, lambda))),
    }
}

/// `u₀ = 1 − x⁴` on `(−1, 1)`, unforced.
pub fn quartic_problem(p: f64, lambda: f64, t_final: f64) -> ProblemDef {
    ProblemDef::new(-1.0, 1.0, t_final, p, Kernel::exponential(lambda), |x| {
        1.0 - x.powi(4)
    })
}

/// Datum vanishing on `[−0.5, 0.5]`: `c(x+1)(x+0.5)^k` on the left, `c(1−x)(x−0.5)^k` on the right.
pub fn gap_datum(x: f64, scale: f64, power: i32) -> f64 {
    if x < -0.5 {
        scale * (x + 1.0) * (x + 0.5).powi(power)
    } else if x > 0.5 {
        scale * (1.0 - x) * (x - 0.5).powi(power)
    } else {
        0.0
    }
}

/// Quadratic contact at `±0.5`, scale 10.
pub fn cubic_gap_problem(p: f64, lambda: f64, t_final: f64) -> ProblemDef {
    ProblemDef::new(-1.0, 1.0, t_final, p, Kernel::exponential(lambda), |x| {
        gap_datum(x, 10.0, 2)
    })
}

/// Seventh-order contact at `±0.5`, scale 100.
pub fn flat_gap_problem(p: f64, lambda: f64, t_final: f64) -> ProblemDef {
    ProblemDef::new(-1.0, 1.0, t_final, p, Kernel::exponential(lambda), |x| {
        gap_datum(x, 100.0, 7)
    })
}
