//! Galerkin assembly on the interior degrees of freedom.
//!
//! Homogeneous Dirichlet conditions are imposed by elimination: every matrix and vector
//! produced here is indexed by interior nodes only.

use crate::banded::BandedSymMatrix;
use crate::error::{Error, Result};
use crate::mesh::{gauss_legendre, Mesh1D, QuadratureRule};

/// Default regularization used when the exponent is below 2.
pub const DEFAULT_EPSILON_SINGULAR: f64 = 1e-8;

/// Exponent and regularization of the flux `a(ξ) = (ξ² + ε²)^{(p−2)/2} ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxParams {
    p: f64,
    epsilon: f64,
}

impl FluxParams {
    /// `ε = 0` is only accepted for `p ≥ 2`, where the flux stays bounded.
    pub fn new(p: f64, epsilon: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::config(format!("exponent p must be > 1 (got {p})")));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::config(format!(
                "epsilon must be finite and non-negative (got {epsilon})"
            )));
        }
        if p < 2.0 && epsilon == 0.0 {
            return Err(Error::config(format!(
                "epsilon must be positive for p = {p} < 2"
            )));
        }
        Ok(Self { p, epsilon })
    }

    /// `ε = 0` for `p ≥ 2`, [`DEFAULT_EPSILON_SINGULAR`] otherwise.
    pub fn with_default_epsilon(p: f64) -> Result<Self> {
        Self::new(p, default_epsilon(p))
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Diffusion coefficient `(ξ² + ε²)^{(p−2)/2}`.
    #[inline]
    pub fn coefficient(&self, xi: f64) -> f64 {
        let e = 0.5 * (self.p - 2.0);
        if e == 0.0 {
            return 1.0;
        }
        let s = xi * xi + self.epsilon * self.epsilon;
        if self.p == 3.0 {
            s.sqrt()
        } else if self.p == 4.0 {
            s
        } else {
            s.powf(e)
        }
    }
}

pub fn default_epsilon(p: f64) -> f64 {
    if p < 2.0 {
        DEFAULT_EPSILON_SINGULAR
    } else {
        0.0
    }
}

/// Scalar flux `a(ξ)`.
#[inline]
pub fn flux(xi: f64, params: &FluxParams) -> f64 {
    params.coefficient(xi) * xi
}

/// Mesh plus quadrature with the reference basis tabulated at the quadrature points.
#[derive(Debug, Clone)]
pub struct Assembler {
    mesh: Mesh1D,
    quad: QuadratureRule,
    // [q][j]
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

impl Assembler {
    pub fn new(mesh: Mesh1D, quad: QuadratureRule) -> Self {
        let basis = mesh.basis();
        let (values, derivs) = quad
            .points()
            .iter()
            .map(|&s| {
                let xi = 0.5 * (s + 1.0);
                let v = (0..basis.len()).map(|j| basis.value(j, xi)).collect();
                let d = (0..basis.len()).map(|j| basis.derivative(j, xi)).collect();
                (v, d)
            })
            .unzip();
        Self {
            mesh,
            quad,
            values,
            derivs,
        }
    }

    /// Assembler with the default `r + 2` Gauss points.
    pub fn with_default_quadrature(mesh: Mesh1D) -> Result<Self> {
        let q = mesh.degree() + 2;
        Ok(Self::new(mesh, gauss_legendre(q)?))
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    fn interior_dofs(&self, e: usize) -> impl Iterator<Item = (usize, Option<usize>)> + '_ {
        (0..self.mesh.basis().len())
            .map(move |j| (j, self.mesh.interior_index(self.mesh.local_to_global(e, j))))
    }

    fn scatter(&self, e: usize, local: &[f64], out: &mut BandedSymMatrix) {
        let nl = self.mesh.basis().len();
        for (a, ga) in self.interior_dofs(e) {
            let Some(ga) = ga else { continue };
            for (b, gb) in self.interior_dofs(e) {
                let Some(gb) = gb else { continue };
                if ga <= gb {
                    out.add(ga, gb, local[a * nl + b]);
                }
            }
        }
    }

    /// Mass matrix `M(i, j) = ∫ φ_i φ_j` on interior DOFs.
    pub fn mass(&self) -> BandedSymMatrix {
        let n = self.mesh.n_interior();
        let nl = self.mesh.basis().len();
        let h = self.mesh.h();
        let mut local = vec![0.0; nl * nl];
        for (q, w) in self.quad.weights().iter().enumerate() {
            let wq = 0.5 * w * h;
            for a in 0..nl {
                for b in 0..nl {
                    local[a * nl + b] += wq * self.values[q][a] * self.values[q][b];
                }
            }
        }
        let mut m = BandedSymMatrix::zeros(n, self.mesh.degree());
        for e in 0..self.mesh.elements() {
            self.scatter(e, &local, &mut m);
        }
        m
    }

    /// Mass matrix over all global DOFs, boundary nodes included.
    pub fn mass_full(&self) -> BandedSymMatrix {
        let n = self.mesh.n_global();
        let nl = self.mesh.basis().len();
        let h = self.mesh.h();
        let mut m = BandedSymMatrix::zeros(n, self.mesh.degree());
        for e in 0..self.mesh.elements() {
            for (q, w) in self.quad.weights().iter().enumerate() {
                let wq = 0.5 * w * h;
                for a in 0..nl {
                    let ga = self.mesh.local_to_global(e, a);
                    for b in 0..nl {
                        let gb = self.mesh.local_to_global(e, b);
                        if ga <= gb {
                            m.add(ga, gb, wq * self.values[q][a] * self.values[q][b]);
                        }
                    }
                }
            }
        }
        m
    }

    /// Gradient of the interior-coefficient function at quadrature point `q` of element `e`.
    fn gradient(&self, e: usize, q: usize, w: &[f64]) -> f64 {
        let inv_h = 1.0 / self.mesh.h();
        self.interior_dofs(e)
            .filter_map(|(j, g)| g.map(|g| w[g] * self.derivs[q][j]))
            .sum::<f64>()
            * inv_h
    }

    /// `A(w)(i, j) = ∫ (|w'|² + ε²)^{(p−2)/2} φ_i' φ_j'` on interior DOFs.
    pub fn plap(&self, w: &[f64], params: &FluxParams) -> BandedSymMatrix {
        assert_eq!(w.len(), self.mesh.n_interior());
        let n = self.mesh.n_interior();
        let nl = self.mesh.basis().len();
        let h = self.mesh.h();
        let inv_h2 = 1.0 / (h * h);
        let mut out = BandedSymMatrix::zeros(n, self.mesh.degree());
        let mut local = vec![0.0; nl * nl];
        for e in 0..self.mesh.elements() {
            local.iter_mut().for_each(|v| *v = 0.0);
            for (q, wt) in self.quad.weights().iter().enumerate() {
                let c = params.coefficient(self.gradient(e, q, w));
                if c == 0.0 {
                    continue;
                }
                let wq = 0.5 * wt * h * c * inv_h2;
                let d = &self.derivs[q];
                for a in 0..nl {
                    for b in 0..nl {
                        local[a * nl + b] += wq * d[a] * d[b];
                    }
                }
            }
            self.scatter(e, &local, &mut out);
        }
        out
    }

    /// Flux vector `∫ a(w') φ_i'`, i.e. `A(w)·w` without forming the matrix.
    pub fn flux_vector(&self, w: &[f64], params: &FluxParams) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.n_interior()];
        for e in 0..self.mesh.elements() {
            for (q, wt) in self.quad.weights().iter().enumerate() {
                // the element length cancels between the measure and φ'
                let a = flux(self.gradient(e, q, w), params);
                for (j, g) in self.interior_dofs(e) {
                    if let Some(g) = g {
                        out[g] += 0.5 * wt * a * self.derivs[q][j];
                    }
                }
            }
        }
        out
    }

    /// Load vector `F(i) = ∫ f(x, t) φ_i(x) dx`.
    pub fn load(&self, f: impl Fn(f64, f64) -> f64, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.mesh.n_interior()];
        self.load_into(|x| f(x, t), t, &mut out)?;
        Ok(out)
    }

    fn load_into(&self, f: impl Fn(f64) -> f64, t: f64, out: &mut [f64]) -> Result<()> {
        for e in 0..self.mesh.elements() {
            let (xl, xr) = self.mesh.element_bounds(e);
            for (q, (x, wq)) in self.quad.mapped(xl, xr).enumerate() {
                let fx = f(x);
                if !fx.is_finite() {
                    return Err(Error::NumericInput {
                        what: "forcing",
                        x,
                        t,
                    });
                }
                for (j, g) in self.interior_dofs(e) {
                    if let Some(g) = g {
                        out[g] += wq * fx * self.values[q][j];
                    }
                }
            }
        }
        Ok(())
    }
}

/// Interior-DOF mass matrix.
pub fn assemble_mass(mesh: &Mesh1D, quad: &QuadratureRule) -> BandedSymMatrix {
    Assembler::new(mesh.clone(), quad.clone()).mass()
}

/// Interior-DOF p-Laplacian matrix linearized at `w`.
pub fn assemble_plap(
    mesh: &Mesh1D,
    w: &[f64],
    params: &FluxParams,
    quad: &QuadratureRule,
) -> BandedSymMatrix {
    Assembler::new(mesh.clone(), quad.clone()).plap(w, params)
}

/// Interior-DOF load vector at time `t`.
pub fn assemble_load(
    mesh: &Mesh1D,
    f: impl Fn(f64, f64) -> f64,
    t: f64,
    quad: &QuadratureRule,
) -> Result<Vec<f64>> {
    Assembler::new(mesh.clone(), quad.clone()).load(f, t)
}

/// Nodal interpolation `Π_h u0` restricted to interior nodes.
///
/// Boundary data is dropped; a warning is logged if it is not (numerically) zero.
pub fn interpolate(mesh: &Mesh1D, u0: impl Fn(f64) -> f64) -> Vec<f64> {
    for &xb in &[mesh.a(), mesh.b()] {
        let v = u0(xb);
        if v.abs() > 1e-12 {
            log::warn!(
                "initial datum is {v:e} at boundary x = {xb}; Dirichlet condition overrides it"
            );
        }
    }
    mesh.interior_nodes().iter().map(|&x| u0(x)).collect()
}
