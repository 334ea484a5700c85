//! Error norms, convergence orders, energy, and support diagnostics.

use crate::assembly::Assembler;
use crate::banded::{BandLu, BandedSymMatrix};
use crate::error::{Error, Result};
use crate::mesh::{gauss_legendre, Mesh1D, QuadratureRule};
use crate::stepper::RunOutput;

/// `(∫ (exact − U_h)²)^{1/2}` by Gauss quadrature on every element.
///
/// `coeffs` may be interior or global. The rule is raised to `r + 2` points if coarser.
pub fn l2_error(
    mesh: &Mesh1D,
    coeffs: &[f64],
    exact: impl Fn(f64) -> f64,
    quad: &QuadratureRule,
) -> Result<f64> {
    let min_q = mesh.degree() + 2;
    let fallback;
    let quad = if quad.len() < min_q {
        fallback = gauss_legendre(min_q)?;
        &fallback
    } else {
        quad
    };
    let full = if coeffs.len() == mesh.n_global() {
        coeffs.to_vec()
    } else {
        mesh.expand(coeffs)?
    };
    let basis = mesh.basis();
    let tab: Vec<Vec<f64>> = quad
        .points()
        .iter()
        .map(|&s| (0..basis.len()).map(|j| basis.value(j, 0.5 * (s + 1.0))).collect())
        .collect();
    let mut total = 0.0;
    for e in 0..mesh.elements() {
        let (xl, xr) = mesh.element_bounds(e);
        for (q, (x, w)) in quad.mapped(xl, xr).enumerate() {
            let uh: f64 = (0..basis.len())
                .map(|j| full[mesh.local_to_global(e, j)] * tab[q][j])
                .sum();
            let d = exact(x) - uh;
            total += w * d * d;
        }
    }
    Ok(total.sqrt())
}

/// `∫ U_h² = UᵀMU` for an interior coefficient vector.
pub fn energy(mesh: &Mesh1D, coeffs: &[f64]) -> Result<f64> {
    let asm = Assembler::with_default_quadrature(mesh.clone())?;
    Ok(energy_with(&asm.mass(), coeffs))
}

pub fn energy_with(mass: &BandedSymMatrix, coeffs: &[f64]) -> f64 {
    mass.quad_form(coeffs).max(0.0)
}

fn check_series(errors: &[f64], steps: &[f64]) -> Result<()> {
    if errors.len() != steps.len() || errors.len() < 2 {
        return Err(Error::config(format!(
            "need two or more matching errors and steps (got {} and {})",
            errors.len(),
            steps.len()
        )));
    }
    if let Some(e) = errors.iter().chain(steps).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::config(format!(
            "errors and steps must be positive and finite (got {e})"
        )));
    }
    Ok(())
}

/// Pairwise orders `log(eᵢ/eᵢ₊₁) / log(sᵢ/sᵢ₊₁)`.
pub fn convergence_orders(errors: &[f64], steps: &[f64]) -> Result<Vec<f64>> {
    check_series(errors, steps)?;
    Ok(errors
        .windows(2)
        .zip(steps.windows(2))
        .map(|(e, s)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
        .collect())
}

/// Least-squares slope of `log e` against `log s`.
pub fn fitted_order(errors: &[f64], steps: &[f64]) -> Result<f64> {
    check_series(errors, steps)?;
    let n = errors.len() as f64;
    let xs: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Default threshold `10⁻⁶·max|U⁽⁰⁾|` (or `10⁻¹²` for a zero datum).
pub fn default_eta(u0: &[f64]) -> f64 {
    let m = u0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        1e-6 * m
    } else {
        1e-12
    }
}

/// Largest run of contiguous nodes (boundary included) around `x = 0` with `|U| < η`.
///
/// The centre is the domain midpoint when `0` lies outside `[a, b]`. Returns `None` when the
/// centre node itself is at or above the threshold.
pub fn support_gap(mesh: &Mesh1D, coeffs: &[f64], eta: f64) -> Option<(f64, f64)> {
    let full = if coeffs.len() == mesh.n_global() {
        coeffs.to_vec()
    } else {
        mesh.expand(coeffs).ok()?
    };
    let nodes = mesh.nodes();
    let centre = if mesh.a() <= 0.0 && 0.0 <= mesh.b() {
        0.0
    } else {
        0.5 * (mesh.a() + mesh.b())
    };
    let c = nodes
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - centre).abs().total_cmp(&(y.1 - centre).abs()))?
        .0;
    let small = |i: usize| full[i].abs() < eta;
    if !small(c) {
        return None;
    }
    let mut l = c;
    while l > 0 && small(l - 1) {
        l -= 1;
    }
    let mut r = c;
    while r + 1 < nodes.len() && small(r + 1) {
        r += 1;
    }
    Some((nodes[l], nodes[r]))
}

/// Gap at every stored step.
pub fn support_series(run: &RunOutput, eta: f64) -> Vec<Option<(f64, f64)>> {
    run.u.iter().map(|u| support_gap(&run.mesh, u, eta)).collect()
}

/// First time the gap boundary has moved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitingTime {
    pub step: usize,
    pub t_star: f64,
    /// Resolution of `t_star`, one time step.
    pub uncertainty: f64,
}

/// First step where an endpoint is more than one node spacing away from its initial position,
/// or where the gap has closed. `None` if the gap is empty initially or never moves.
pub fn waiting_time(
    series: &[Option<(f64, f64)>],
    times: &[f64],
    spacing: f64,
) -> Option<WaitingTime> {
    let (l0, r0) = (*series.first()?)?;
    let limit = 1.5 * spacing;
    let step = series.iter().position(|g| match g {
        None => true,
        Some((l, r)) => (l - l0).abs() > limit || (r - r0).abs() > limit,
    })?;
    let delta = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
    Some(WaitingTime {
        step,
        t_star: times[step],
        uncertainty: delta,
    })
}

/// Nodal `(min, max)` of `U` at every step, boundary zeros excluded.
pub fn extrema_series(run: &RunOutput) -> Vec<(f64, f64)> {
    run.u
        .iter()
        .map(|u| {
            if u.is_empty() {
                return (0.0, 0.0);
            }
            u.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        })
        .collect()
}

/// `‖U⁽⁰⁾‖_M + (δ Σ ‖f(t_{m+1/2})‖²)^{1/2}` with `‖f‖² = FᵀM⁻¹F`.
pub fn stability_proxy(run: &RunOutput, mass: &BandedSymMatrix, mass_lu: &BandLu) -> Result<f64> {
    let u0 = mass.quad_form(&run.u[0]).max(0.0).sqrt();
    let mut acc = 0.0;
    for f in run.loads.iter().skip(1) {
        if f.iter().all(|&v| v == 0.0) {
            continue;
        }
        let z = mass_lu.solve(f)?;
        acc += f.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().max(0.0);
    }
    Ok(u0 + (run.delta * acc).sqrt())
}

/// `max_k ‖U⁽ᵏ⁾‖_M` and `max_k ‖Y⁽ᵏ⁾‖_M`.
pub fn max_norms(run: &RunOutput, mass: &BandedSymMatrix) -> (f64, f64) {
    let max = |vs: &[Vec<f64>]| {
        vs.iter()
            .map(|v| mass.quad_form(v).max(0.0).sqrt())
            .fold(0.0f64, f64::max)
    };
    (max(&run.u), max(&run.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::interpolate;
    use crate::mesh::build_uniform_mesh;
    use proptest::prelude::*;

    #[test]
    fn l2_error_examples() {
        let mesh = build_uniform_mesh(0.0, 1.0, 5, 2).unwrap();
        let q = gauss_legendre(4).unwrap();
        let u = interpolate(&mesh, |x| x * (1.0 - x));
        assert!(l2_error(&mesh, &u, |x| x * (1.0 - x), &q).unwrap() < 1e-12);
        let zero = vec![0.0; mesh.n_interior()];
        assert!((l2_error(&mesh, &zero, |_| 1.0, &q).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interpolation_error_is_second_order() {
        let pi = std::f64::consts::PI;
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&m| {
                let mesh = build_uniform_mesh(0.0, 1.0, m, 1).unwrap();
                let u = interpolate(&mesh, |x| (pi * x).sin());
                l2_error(&mesh, &u, |x| (pi * x).sin(), &gauss_legendre(3).unwrap()).unwrap()
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 4.0).abs() < 0.1);
        }
    }

    #[test]
    fn energy_examples() {
        let mesh = build_uniform_mesh(0.0, 1.0, 4, 2).unwrap();
        let u = interpolate(&mesh, |x| x * (1.0 - x));
        assert!((energy(&mesh, &u).unwrap() - 1.0 / 30.0).abs() < 1e-14);
        assert_eq!(energy(&mesh, &vec![0.0; mesh.n_interior()]).unwrap(), 0.0);
        let fine = build_uniform_mesh(-1.0, 1.0, 400, 1).unwrap();
        let ones = vec![1.0; fine.n_interior()];
        let b = energy(&fine, &ones).unwrap();
        // two boundary hats of height 1 lose 2·(h − h/3) from the exact 2
        assert!((b - (2.0 - 4.0 * fine.h() / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn orders_examples() {
        let o = convergence_orders(&[1e-2, 2.5e-3], &[0.2, 0.1]).unwrap();
        assert!((o[0] - 2.0).abs() < 1e-12);
        let steps = [0.1, 0.05, 0.025];
        let errs: Vec<f64> = steps.iter().map(|h: &f64| 7.0 * h.powi(3)).collect();
        for o in convergence_orders(&errs, &steps).unwrap() {
            assert!((o - 3.0).abs() < 1e-12);
        }
        assert!(convergence_orders(&[0.0, 1.0], &[0.2, 0.1]).is_err());
        assert!(convergence_orders(&[1.0], &[0.2]).is_err());
        assert!(convergence_orders(&[-1.0, 1.0], &[0.2, 0.1]).is_err());
    }

    #[test]
    fn gap_examples() {
        let mesh = build_uniform_mesh(-1.0, 1.0, 100, 1).unwrap();
        let u0 = interpolate(&mesh, |x| crate::problem::gap_datum(x, 10.0, 2));
        let eta = default_eta(&u0);
        let (l, r) = support_gap(&mesh, &u0, eta).unwrap();
        assert!((l + 0.5).abs() <= mesh.h() + 1e-12 && (r - 0.5).abs() <= mesh.h() + 1e-12);

        let zero = vec![0.0; mesh.n_interior()];
        assert_eq!(support_gap(&mesh, &zero, 1e-12), Some((-1.0, 1.0)));
        let bump = interpolate(&mesh, |x| 1.0 - x * x);
        assert_eq!(support_gap(&mesh, &bump, 1e-6), None);
    }

    #[test]
    fn gap_uses_midpoint_off_origin() {
        let mesh = build_uniform_mesh(1.0, 3.0, 4, 1).unwrap();
        let u = vec![1.0, 0.0, 1.0];
        assert_eq!(support_gap(&mesh, &u, 1e-3), Some((2.0, 2.0)));
    }

    #[test]
    fn waiting_time_detection() {
        let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.1).collect();
        let h = 0.02;
        let series = vec![
            Some((-0.5, 0.5)),
            Some((-0.48, 0.5)),
            Some((-0.48, 0.48)),
            Some((-0.46, 0.48)),
            Some((-0.44, 0.46)),
            None,
        ];
        let w = waiting_time(&series, &times, h).unwrap();
        assert_eq!(w.step, 3);
        assert!((w.t_star - 0.3).abs() < 1e-15);
        assert!(waiting_time(&series[..3], &times, h).is_none());
        assert!(waiting_time(&[None, None], &times, h).is_none());
    }

    proptest! {
        #[test]
        fn orders_exact_on_power_laws(k in 0.5f64..5.0, c in 0.1f64..10.0) {
            let steps = [0.2, 0.1, 0.05, 0.025];
            let errs: Vec<f64> = steps.iter().map(|h: &f64| c * h.powf(k)).collect();
            for o in convergence_orders(&errs, &steps).unwrap() {
                prop_assert!((o - k).abs() < 1e-10);
            }
            prop_assert!((fitted_order(&errs, &steps).unwrap() - k).abs() < 1e-10);
        }

        #[test]
        fn energy_matches_quadrature(coeffs in proptest::collection::vec(-2.0f64..2.0, 11)) {
            let mesh = build_uniform_mesh(0.0, 1.0, 4, 3).unwrap();
            let e = energy(&mesh, &coeffs).unwrap();
            let direct = l2_error(&mesh, &coeffs, |_| 0.0, &gauss_legendre(6).unwrap()).unwrap();
            prop_assert!((e - direct * direct).abs() < 1e-13 * (1.0 + e));
        }
    }
}
