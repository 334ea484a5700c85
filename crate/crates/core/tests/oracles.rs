//! Checks of solver output against independently assembled discrete equations and against
//! the manufactured forcing recomputed from `u` alone.

use nalgebra::{DMatrix, DVector};

use plapmem::config::parse_config_str;
use plapmem::experiments::run_config;
use plapmem::problem::manufactured;

/// Dense P1 pieces on a uniform mesh of `(a, b)` with `m` elements, interior nodes only.
struct P1 {
    h: f64,
    n: usize,
}

impl P1 {
    fn mass(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            m[(i, i)] = 4.0 * self.h / 6.0;
            if i + 1 < self.n {
                m[(i, i + 1)] = self.h / 6.0;
                m[(i + 1, i)] = self.h / 6.0;
            }
        }
        m
    }

    /// `(|w'|^{p−2} w', φᵢ')` with zero boundary values.
    fn flux_form(&self, w: &DVector<f64>, p: f64) -> DVector<f64> {
        let at = |i: isize| if i < 0 || i as usize >= self.n { 0.0 } else { w[i as usize] };
        let mut out = DVector::zeros(self.n);
        for e in 0..=self.n as isize {
            let s = (at(e) - at(e - 1)) / self.h;
            let a = s.abs().powf(p - 2.0) * s;
            if e >= 1 {
                out[(e - 1) as usize] -= a;
            }
            if (e as usize) < self.n {
                out[e as usize] += a;
            }
        }
        out
    }
}

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

#[test]
fn run_satisfies_discrete_weak_equations() {
    let (p, lambda, n_steps, t_final) = (3.0, 1.5, 10, 0.1);
    let json = format!(
        r#"{{"problem":"quartic","p":{p},"r":1,"m":12,"N":{n_steps},"T":{t_final},"lambda":{lambda},"tol":1e-28,"max_iter":500}}"#
    );
    let cfg = parse_config_str(&json).unwrap();
    let run = run_config(&cfg).unwrap();
    let delta = t_final / n_steps as f64;
    let fe = P1 { h: 2.0 / 12.0, n: 11 };
    let mass = fe.mass();
    let g = |s: f64| lambda * (-s).exp();
    let gp = |s: f64| -lambda * (-s).exp();
    let t = |j: usize| j as f64 * delta;

    let u: Vec<DVector<f64>> = run.u.iter().map(|x| v(x)).collect();
    let y: Vec<DVector<f64>> = run.y.iter().map(|x| v(x)).collect();
    let scale = (&mass * &u[0]).norm();

    for k in 0..n_steps {
        let ubar = (&u[k + 1] + &u[k]) * 0.5;
        let ybar = (&y[k + 1] + &y[k]) * 0.5;
        // (∂̄U, w) + (|∇Ū|^{p−2}∇Ū, ∇w) = (Ȳ, w), with f = 0
        let r1 = &mass * (&u[k + 1] - &u[k]) / delta + fe.flux_form(&ubar, p) - &mass * &ybar;
        assert!(r1.norm() < 1e-9 * scale, "step {k}: momentum residual {:e}", r1.norm());

        if k == 0 {
            continue;
        }
        // trapezoidal memory sums as written, including the two δ/8 end corrections
        let th = t(k) + 0.5 * delta;
        let quad = |kern: &dyn Fn(f64) -> f64, z: &[DVector<f64>]| {
            let mut s = &z[0] * (0.5 * delta * kern(th));
            for (j, zj) in z.iter().enumerate().take(k).skip(1) {
                s += zj * (delta * kern(th - t(j)));
            }
            s += &z[k] * (0.75 * delta * kern(th - t(k)));
            s += (&z[k] + &z[k + 1]) * (delta / 8.0 * kern(0.0));
            &mass * s
        };
        let rhs = &mass * &ubar * g(0.0) - &mass * &u[0] * g(th) - quad(&g, &y) + quad(&gp, &u);
        let r2 = &mass * &ybar - rhs;
        assert!(r2.norm() < 1e-9 * scale, "step {k}: memory residual {:e}", r2.norm());
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + inner + f(b))
}

/// `u_t − Δ_p u − ∫₀ᵗ λ e^{−(t−s)} Δ_p u(s) ds` by differences and composite Simpson.
fn forcing_by_differences(x: f64, t: f64, p: f64, lambda: f64) -> f64 {
    let u = |x: f64, t: f64| (x * (1.0 - x)).powi(2) * (-t).exp();
    let d = |f: &dyn Fn(f64) -> f64, z: f64, h: f64| {
        (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h)
    };
    let plap = |t: f64| {
        let flux = |z: f64| {
            let ux = d(&|w| u(w, t), z, 1e-3);
            ux.abs().powf(p - 2.0) * ux
        };
        d(&flux, x, 1e-3)
    };
    let ut = d(&|s| u(x, s), t, 1e-3);
    let memory = simpson(|s| lambda * (s - t).exp() * plap(s), 0.0, t, 200);
    ut - plap(t) - memory
}

#[test]
fn manufactured_forcing_matches_differences() {
    for (p, lambda) in [(3.0, 1.0), (4.0, -2.0), (2.5, 0.5), (2.0, 3.0)] {
        for x in [0.05, 0.13, 0.31, 0.44, 0.58, 0.72, 0.9] {
            for t in [0.0, 0.01, 0.05, 0.1] {
                let closed = manufactured::f(x, t, p, lambda);
                let oracle = forcing_by_differences(x, t, p, lambda);
                let err = (closed - oracle).abs() / closed.abs().max(1.0);
                assert!(err < 1e-6, "p={p} lambda={lambda} x={x} t={t}: {closed} vs {oracle}");
            }
        }
    }
}

#[test]
fn y_error_tracks_best_approximation() {
    // at a fine time step the y error should sit near the L² distance of y to the space
    let json = r#"{"p":3,"r":2,"m":8,"N":400,"T":0.1,"lambda":1,"tol":1e-20,"max_iter":200}"#;
    let cfg = parse_config_str(json).unwrap();
    let run = run_config(&cfg).unwrap();
    let (_, ey) = plapmem::experiments::final_errors(&cfg, &run).unwrap();
    assert!(ey.is_finite() && ey > 0.0);

    // interpolation error of y(·, T) on the same mesh bounds the best approximation from above
    let mesh = cfg.mesh().unwrap();
    let yt = |x: f64| manufactured::y(x, 0.1, 3.0, 1.0);
    let coeffs: Vec<f64> = mesh.interior_nodes().iter().map(|&x| yt(x)).collect();
    let quad = plapmem::mesh::gauss_legendre(16).unwrap();
    let interp = plapmem::analysis::l2_error(&mesh, &coeffs, yt, &quad).unwrap();
    assert!(ey < 5.0 * interp, "y error {ey:e} vs interpolation error {interp:e}");
}
