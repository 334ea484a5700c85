//! Uniform one-dimensional meshes, Lagrange reference bases and Gauss-Legendre rules.
//!
//! The reference element is `[0, 1]` with equispaced Lagrange nodes `ξ_i = i / r`.
//! Global degrees of freedom are numbered left to right, `m·r + 1` in total; the two
//! boundary nodes carry the homogeneous Dirichlet condition and are eliminated, leaving
//! `m·r − 1` interior unknowns.

use crate::error::{Error, Result};

/// Largest polynomial degree accepted by [`build_uniform_mesh`].
pub const MAX_DEGREE: usize = 6;
/// Largest Gauss-Legendre point count accepted by [`gauss_legendre`].
pub const MAX_QUADRATURE_POINTS: usize = 16;

/// Equispaced Lagrange basis of degree `r` on the reference interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBasis {
    degree: usize,
    nodes: Vec<f64>,
    // 1 / Π_{m≠j} (ξ_j − ξ_m)
    inv_denominators: Vec<f64>,
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::config(format!(
                "polynomial degree r = {degree} outside supported range 1..={MAX_DEGREE}"
            )));
        }
        let nodes: Vec<f64> = (0..=degree).map(|i| i as f64 / degree as f64).collect();
        let inv_denominators = (0..=degree)
            .map(|j| {
                let d: f64 = (0..=degree)
                    .filter(|&m| m != j)
                    .map(|m| nodes[j] - nodes[m])
                    .product();
                1.0 / d
            })
            .collect();
        Ok(Self {
            degree,
            nodes,
            inv_denominators,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of local basis functions, `r + 1`.
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value of `φ_j(ξ)`; no range checks.
    pub fn value(&self, j: usize, xi: f64) -> f64 {
        let prod: f64 = self
            .nodes
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != j)
            .map(|(_, &xm)| xi - xm)
            .product();
        prod * self.inv_denominators[j]
    }

    /// Derivative `φ_j'(ξ)` with respect to the reference coordinate; no range checks.
    pub fn derivative(&self, j: usize, xi: f64) -> f64 {
        let mut sum = 0.0;
        for l in 0..=self.degree {
            if l == j {
                continue;
            }
            let prod: f64 = self
                .nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j && m != l)
                .map(|(_, &xm)| xi - xm)
                .product();
            sum += prod;
        }
        sum * self.inv_denominators[j]
    }
}

/// Checked evaluation of a reference basis function (`order` 0) or its derivative (`order` 1).
pub fn basis_eval(basis: &ReferenceBasis, j: usize, xi: f64, order: u8) -> Result<f64> {
    if j > basis.degree {
        return Err(Error::config(format!(
            "local basis index {j} exceeds degree {}",
            basis.degree
        )));
    }
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::config(format!(
            "reference coordinate {xi} outside [0, 1]"
        )));
    }
    match order {
        0 => Ok(basis.value(j, xi)),
        1 => Ok(basis.derivative(j, xi)),
        _ => Err(Error::config(format!("derivative order {order} not supported"))),
    }
}

/// Gauss-Legendre rule stored on the canonical interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Abscissae on `[-1, 1]`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Weights on `[-1, 1]` (they sum to 2).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(x, w)` pairs mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `q`-point Gauss-Legendre rule, exact for polynomials of degree `2q − 1`.
///
/// Roots of `P_q` are found by Newton iteration on the three-term recurrence.
pub fn gauss_legendre(q: usize) -> Result<QuadratureRule> {
    if q == 0 || q > MAX_QUADRATURE_POINTS {
        return Err(Error::config(format!(
            "quadrature point count {q} outside supported range 1..={MAX_QUADRATURE_POINTS}"
        )));
    }
    let mut points = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let n = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        points[q / 2] = 0.0;
    }
    Ok(QuadratureRule { points, weights })
}

fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=q {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = q as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Uniform partition of `[a, b]` into `m` elements carrying degree-`r` Lagrange elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    a: f64,
    b: f64,
    m: usize,
    h: f64,
    basis: ReferenceBasis,
    nodes: Vec<f64>,
    breaks: Vec<f64>,
}

/// Builds the uniform mesh; rejects `m = 0`, `r = 0`, `r > MAX_DEGREE` and `b ≤ a`.
pub fn build_uniform_mesh(a: f64, b: f64, m: usize, r: usize) -> Result<Mesh1D> {
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::config(format!(
            "domain endpoints must be finite with b > a (got a = {a}, b = {b})"
        )));
    }
    if m == 0 {
        return Err(Error::config("element count m must be positive"));
    }
    let basis = ReferenceBasis::new(r)?;
    let total = m * r;
    let mut nodes: Vec<f64> = (0..=total)
        .map(|g| a + (b - a) * (g as f64 / total as f64))
        .collect();
    nodes[0] = a;
    nodes[total] = b;
    let breaks = (0..=m).map(|e| nodes[e * r]).collect();
    Ok(Mesh1D {
        a,
        b,
        m,
        h: (b - a) / m as f64,
        basis,
        nodes,
        breaks,
    })
}

impl Mesh1D {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of elements.
    pub fn elements(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    /// Element width.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Distance between consecutive nodes, `h / r`.
    pub fn node_spacing(&self) -> f64 {
        self.h / self.basis.degree as f64
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    /// All node coordinates, boundary nodes included.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_global(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_interior(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Interior node coordinates, in the order of the reduced coefficient vectors.
    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    /// Global index of local node `j` on element `e`.
    pub fn local_to_global(&self, e: usize, j: usize) -> usize {
        e * self.basis.degree + j
    }

    /// Interior index of a global node, `None` for the two boundary nodes.
    pub fn interior_index(&self, global: usize) -> Option<usize> {
        if global == 0 || global + 1 >= self.nodes.len() {
            None
        } else {
            Some(global - 1)
        }
    }

    /// Left and right coordinates of element `e`.
    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        (self.breaks[e], self.breaks[e + 1])
    }

    /// Element containing `x`, using `x_e < x ≤ x_{e+1}` (left limit at element interfaces).
    pub fn locate(&self, x: f64) -> usize {
        self.breaks[1..self.m].partition_point(|&xb| xb < x)
    }

    /// Expands a reduced (interior) vector to the full nodal vector with zero boundary values.
    /// Full-length vectors are returned unchanged.
    pub fn expand(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() == self.n_global() {
            Ok(coeffs.to_vec())
        } else if coeffs.len() == self.n_interior() {
            let mut full = Vec::with_capacity(self.n_global());
            full.push(0.0);
            full.extend_from_slice(coeffs);
            full.push(0.0);
            Ok(full)
        } else {
            Err(Error::config(format!(
                "coefficient vector has length {}, expected {} (global) or {} (interior)",
                coeffs.len(),
                self.n_global(),
                self.n_interior()
            )))
        }
    }
}

/// Evaluates the finite-element function `u_h` (`order` 0) or `u_h'` (`order` 1) at `x`.
///
/// `coeffs` may hold all global values or only the interior ones (boundary values zero).
/// Derivatives at element interfaces take the left-element limit.
pub fn eval_fe(mesh: &Mesh1D, coeffs: &[f64], x: f64, order: u8) -> Result<f64> {
    if !(mesh.a..=mesh.b).contains(&x) {
        return Err(Error::config(format!(
            "evaluation point {x} outside [{}, {}]",
            mesh.a, mesh.b
        )));
    }
    if order > 1 {
        return Err(Error::config(format!("derivative order {order} not supported")));
    }
    let reduced = coeffs.len() != mesh.n_global();
    if reduced && coeffs.len() != mesh.n_interior() {
        return Err(mesh.expand(coeffs).unwrap_err());
    }
    let e = mesh.locate(x);
    let (xl, _) = mesh.element_bounds(e);
    let xi = ((x - xl) / mesh.h).clamp(0.0, 1.0);
    let basis = &mesh.basis;
    let mut acc = 0.0;
    for j in 0..basis.len() {
        let g = mesh.local_to_global(e, j);
        let c = if reduced {
            match mesh.interior_index(g) {
                Some(i) => coeffs[i],
                None => 0.0,
            }
        } else {
            coeffs[g]
        };
        if c == 0.0 {
            continue;
        }
        acc += c * if order == 0 {
            basis.value(j, xi)
        } else {
            basis.derivative(j, xi) / mesh.h
        };
    }
    Ok(acc)
}
