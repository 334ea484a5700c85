//! Memory kernel, the discrete Volterra history, and the memory relation
//! `α·M·Y^{k+1} + β·M·U^{k+1} = R`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::BandedSymMatrix;
use crate::error::{Error, Result};

type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Memory kernel `g` together with its derivative `g'`.
#[derive(Clone)]
pub struct Kernel {
    g: TimeFn,
    gp: TimeFn,
    lambda: Option<f64>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lambda {
            Some(l) => write!(f, "Kernel::exponential({l})"),
            None => f.write_str("Kernel::custom"),
        }
    }
}

impl Kernel {
    /// `g(ξ) = λ e^{−ξ}`.
    pub fn exponential(lambda: f64) -> Self {
        Self {
            g: Arc::new(move |s| lambda * (-s).exp()),
            gp: Arc::new(move |s| -lambda * (-s).exp()),
            lambda: Some(lambda),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::custom(move |_| c, |_| 0.0)
    }

    pub fn custom(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gp: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            g: Arc::new(g),
            gp: Arc::new(gp),
            lambda: None,
        }
    }

    /// Amplitude of the exponential family, `None` for other kernels.
    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    #[inline]
    pub fn g(&self, s: f64) -> f64 {
        (self.g)(s)
    }

    #[inline]
    pub fn gp(&self, s: f64) -> f64 {
        (self.gp)(s)
    }
}

/// Treatment of the last half-node in the discrete `I(f)` sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureMode {
    /// Composite trapezoid on `[0, t_{k+1/2}]`.
    #[default]
    Consistent,
    /// Sum runs up to `m = k`, adding `δ·g(0)·F^{k+1/2}` on top of the trapezoid.
    Literal,
}

/// Coefficient vectors of all past steps plus the loads sampled at `t₀` and the half-steps.
#[derive(Debug, Clone)]
pub struct StateHistory {
    delta: f64,
    u: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    f0: Vec<f64>,
    f_half: Vec<Vec<f64>>,
}

impl StateHistory {
    /// Starts at `k = 0` with `Y⁽⁰⁾ = 0`.
    pub fn new(u0: Vec<f64>, f0: Vec<f64>, delta: f64) -> Self {
        assert_eq!(u0.len(), f0.len());
        let n = u0.len();
        Self {
            delta,
            u: vec![u0],
            y: vec![vec![0.0; n]],
            f0,
            f_half: Vec::new(),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.f0.len()
    }

    /// Index of the latest completed step.
    pub fn k(&self) -> usize {
        self.u.len() - 1
    }

    pub fn u(&self, j: usize) -> &[f64] {
        &self.u[j]
    }

    pub fn y(&self, j: usize) -> &[f64] {
        &self.y[j]
    }

    pub fn u_last(&self) -> &[f64] {
        &self.u[self.k()]
    }

    pub fn y_last(&self) -> &[f64] {
        &self.y[self.k()]
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    /// `F^{m+1/2}`.
    pub fn f_half(&self, m: usize) -> &[f64] {
        &self.f_half[m]
    }

    /// Number of half-step loads stored so far.
    pub fn half_loads(&self) -> usize {
        self.f_half.len()
    }

    /// Stores `F^{k+1/2}` for the step about to be taken.
    pub fn push_half_load(&mut self, f: Vec<f64>) {
        assert_eq!(f.len(), self.dim());
        assert_eq!(self.f_half.len(), self.k(), "half-step load already present");
        self.f_half.push(f);
    }

    /// Appends the converged pair `(U^{k+1}, Y^{k+1})`.
    pub fn push_step(&mut self, u: Vec<f64>, y: Vec<f64>) {
        assert_eq!(u.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        assert_eq!(self.f_half.len(), self.k() + 1, "missing half-step load");
        self.u.push(u);
        self.y.push(y);
    }

    pub fn u_all(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn y_all(&self) -> &[Vec<f64>] {
        &self.y
    }
}

/// One explicit history term: `weight · kernel(lag) · V⁽ⁱⁿᵈᵉˣ⁾`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryWeight {
    pub index: usize,
    pub lag: f64,
    pub weight: f64,
}

/// Weights of the `Q_g` / `Q_{g'}` sums at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraWeights {
    pub history: Vec<HistoryWeight>,
    /// Weight of the unknown at `t_{k+1}`, evaluated at lag 0.
    pub implicit: f64,
}

impl VolterraWeights {
    /// Weighted kernel sum over all terms, the unknown included.
    pub fn kernel_sum(&self, kernel: impl Fn(f64) -> f64) -> f64 {
        neumaier_sum(
            self.history
                .iter()
                .map(|w| w.weight * kernel(w.lag))
                .chain(std::iter::once(self.implicit * kernel(0.0))),
        )
    }
}

/// Time-level of a load vector in the `I(f)` sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadNode {
    Initial,
    /// `F^{m+1/2}`.
    Half(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadWeight {
    pub node: LoadNode,
    pub lag: f64,
    pub weight: f64,
}

pub fn volterra_weights(k: usize, delta: f64) -> VolterraWeights {
    let t_half = (k as f64 + 0.5) * delta;
    let mut history = Vec::with_capacity(k + 2);
    if k == 0 {
        history.push(HistoryWeight {
            index: 0,
            lag: 0.5 * delta,
            weight: 0.25 * delta,
        });
    } else {
        history.push(HistoryWeight {
            index: 0,
            lag: t_half,
            weight: 0.5 * delta,
        });
        for j in 1..k {
            history.push(HistoryWeight {
                index: j,
                lag: (k as f64 + 0.5 - j as f64) * delta,
                weight: delta,
            });
        }
        history.push(HistoryWeight {
            index: k,
            lag: 0.5 * delta,
            weight: 0.75 * delta,
        });
    }
    history.push(HistoryWeight {
        index: k,
        lag: 0.0,
        weight: 0.125 * delta,
    });
    VolterraWeights {
        history,
        implicit: 0.125 * delta,
    }
}

pub fn load_weights(k: usize, delta: f64, mode: QuadratureMode) -> Vec<LoadWeight> {
    let t_half = (k as f64 + 0.5) * delta;
    let mut out = Vec::with_capacity(k + 2);
    out.push(LoadWeight {
        node: LoadNode::Initial,
        lag: t_half,
        weight: 0.25 * delta,
    });
    if k == 0 {
        out.push(LoadWeight {
            node: LoadNode::Half(0),
            lag: 0.0,
            weight: 0.25 * delta,
        });
        return out;
    }
    out.push(LoadWeight {
        node: LoadNode::Half(0),
        lag: k as f64 * delta,
        weight: 0.75 * delta,
    });
    for m in 1..k {
        out.push(LoadWeight {
            node: LoadNode::Half(m),
            lag: (k - m) as f64 * delta,
            weight: delta,
        });
    }
    out.push(LoadWeight {
        node: LoadNode::Half(k),
        lag: 0.0,
        weight: 0.5 * delta,
    });
    if mode == QuadratureMode::Literal {
        out.push(LoadWeight {
            node: LoadNode::Half(k),
            lag: 0.0,
            weight: delta,
        });
    }
    out
}

/// Compensated summation; keeps the weight-sum identities at the last ulp.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    if a == 0.0 {
        return;
    }
    for (o, v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

fn weighted_history(
    vectors: &[Vec<f64>],
    k: usize,
    delta: f64,
    kernel: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let mut acc = vec![0.0; vectors[0].len()];
    for w in volterra_weights(k, delta).history {
        axpy(&mut acc, w.weight * kernel(w.lag), &vectors[w.index]);
    }
    acc
}

/// Explicit part `M·Σ w g(lag) Y⁽ʲ⁾` of `Q_g` and the multiplier `δ/8·g(0)` of `M·Y^{k+1}`.
pub fn q_g(hist: &StateHistory, kernel: &Kernel, mass: &BandedSymMatrix) -> (Vec<f64>, f64) {
    let k = hist.k();
    let combo = weighted_history(hist.y_all(), k, hist.delta, |s| kernel.g(s));
    (mass.matvec(&combo), 0.125 * hist.delta * kernel.g(0.0))
}

/// Same as [`q_g`] for `Q_{g'}` acting on the `U` history.
pub fn q_gp(hist: &StateHistory, kernel: &Kernel, mass: &BandedSymMatrix) -> (Vec<f64>, f64) {
    let k = hist.k();
    let combo = weighted_history(hist.u_all(), k, hist.delta, |s| kernel.gp(s));
    (mass.matvec(&combo), 0.125 * hist.delta * kernel.gp(0.0))
}

/// Discrete `I(f)`; requires `F^{k+1/2}` to be stored.
pub fn i_f(hist: &StateHistory, kernel: &Kernel, mode: QuadratureMode) -> Vec<f64> {
    let k = hist.k();
    let mut out = vec![0.0; hist.dim()];
    for w in load_weights(k, hist.delta, mode) {
        let v = match w.node {
            LoadNode::Initial => hist.f0(),
            LoadNode::Half(m) => hist.f_half(m),
        };
        axpy(&mut out, w.weight * kernel.g(w.lag), v);
    }
    out
}

/// `α·M·Y^{k+1} + β·M·U^{k+1} = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEquation {
    pub alpha: f64,
    pub beta: f64,
    pub rhs: Vec<f64>,
}

/// Smallest `|α|` accepted before the step is declared ill-posed.
pub const ALPHA_MIN: f64 = 1e-12;

pub fn memory_equation(
    hist: &StateHistory,
    kernel: &Kernel,
    mass: &BandedSymMatrix,
    mode: QuadratureMode,
) -> Result<MemoryEquation> {
    let k = hist.k();
    let delta = hist.delta;
    let g0 = kernel.g(0.0);
    let (qg, qg_implicit) = q_g(hist, kernel, mass);
    let (qgp, qgp_implicit) = q_gp(hist, kernel, mass);
    let alpha = 0.5 + qg_implicit;
    let beta = -(0.5 * g0 + qgp_implicit);
    if alpha.is_nan() || alpha.abs() < ALPHA_MIN {
        return Err(Error::IllPosedStep { alpha });
    }
    let t_half = (k as f64 + 0.5) * delta;
    let mut combo = vec![0.0; hist.dim()];
    axpy(&mut combo, -0.5, hist.y(k));
    axpy(&mut combo, 0.5 * g0, hist.u(k));
    axpy(&mut combo, -kernel.g(t_half), hist.u(0));
    let mut rhs = mass.matvec(&combo);
    let load = i_f(hist, kernel, mode);
    for (((r, a), b), c) in rhs.iter_mut().zip(&qg).zip(&qgp).zip(&load) {
        *r += -a + b - c;
    }
    Ok(MemoryEquation { alpha, beta, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar_mass() -> BandedSymMatrix {
        let mut m = BandedSymMatrix::zeros(1, 1);
        m.add(0, 0, 1.0);
        m
    }

    fn constant_history(k: usize, delta: f64, value: f64) -> StateHistory {
        let mut h = StateHistory::new(vec![value], vec![value], delta);
        for _ in 0..k {
            h.push_half_load(vec![value]);
            h.push_step(vec![value], vec![value]);
        }
        h.push_half_load(vec![value]);
        h
    }

    #[test]
    fn weight_examples() {
        let w = volterra_weights(2, 0.1);
        assert!((w.kernel_sum(|_| 1.0) - 0.25).abs() < 1e-15);
        let w0 = volterra_weights(0, 0.1);
        assert!((w0.kernel_sum(|_| 1.0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn weight_sums_constant_kernel() {
        for delta in [0.1, 1e-3, 0.37] {
            for k in 0..=200 {
                let t = (k as f64 + 0.5) * delta;
                let s = volterra_weights(k, delta).kernel_sum(|_| 1.0);
                assert!((s - t).abs() <= 1e-14 * t, "k={k} δ={delta}");
                let f = neumaier_sum(
                    load_weights(k, delta, QuadratureMode::Consistent)
                        .iter()
                        .map(|w| w.weight),
                );
                assert!((f - t).abs() <= 1e-14 * t, "k={k} δ={delta}");
            }
        }
    }

    #[test]
    fn q_examples() {
        let mass = scalar_mass();
        let h = StateHistory::new(vec![2.0], vec![0.0], 0.1);
        let (e, c) = q_g(&h, &Kernel::exponential(3.0), &mass);
        assert_eq!(e, vec![0.0]);
        assert!((c - 0.1 / 8.0 * 3.0).abs() < 1e-16);
        let (e, c) = q_gp(&h, &Kernel::exponential(0.0), &mass);
        assert_eq!((e, c), (vec![0.0], 0.0));
        let (_, c) = q_gp(&h, &Kernel::exponential(2.0), &mass);
        assert!((c + 2.0 * 0.1 / 8.0).abs() < 1e-16);
    }

    #[test]
    fn q_gp_scalar_mock_k1() {
        let delta = 0.1;
        let kernel = Kernel::exponential(1.0);
        let h = constant_history(1, delta, 1.0);
        let (e, _) = q_gp(&h, &kernel, &scalar_mass());
        // printed sum at k = 1: δ/2 g'(t_{3/2}) u₀ + 3δ/4 g'(t_{3/2} − t₁) u₁ + δ/8 g'(0) u₁
        let gp = |s: f64| -(-s).exp();
        let expected = delta / 2.0 * gp(0.15) + 0.75 * delta * gp(0.05) + delta / 8.0 * gp(0.0);
        assert!((e[0] - expected).abs() < 1e-16);
    }

    #[test]
    fn i_f_examples() {
        let delta = 0.1;
        let h = constant_history(1, delta, 1.0);
        let kernel = Kernel::exponential(1.0);
        let c = i_f(&h, &kernel, QuadratureMode::Consistent);
        let l = i_f(&h, &kernel, QuadratureMode::Literal);
        assert!((l[0] - c[0] - 0.1).abs() < 1e-15);

        let zero = constant_history(3, delta, 0.0);
        assert_eq!(i_f(&zero, &kernel, QuadratureMode::Consistent), vec![0.0]);

        for k in 0..20 {
            let h = constant_history(k, delta, 1.0);
            let v = i_f(&h, &Kernel::constant(1.0), QuadratureMode::Consistent)[0];
            assert!((v - (k as f64 + 0.5) * delta).abs() < 1e-14);
        }
    }

    #[test]
    fn literal_equals_consistent_at_first_step() {
        let h = constant_history(0, 0.1, 1.0);
        let kernel = Kernel::exponential(2.0);
        assert_eq!(
            i_f(&h, &kernel, QuadratureMode::Consistent),
            i_f(&h, &kernel, QuadratureMode::Literal)
        );
    }

    #[test]
    fn memory_equation_coefficients() {
        let h = constant_history(0, 0.1, 1.0);
        let eq = memory_equation(&h, &Kernel::exponential(1.0), &scalar_mass(), QuadratureMode::Consistent)
            .unwrap();
        assert!((eq.alpha - 0.5125).abs() < 1e-15);
        assert!((eq.beta + 0.4875).abs() < 1e-15);
    }

    #[test]
    fn null_kernel_memory_equation() {
        let mut h = StateHistory::new(vec![1.0, 2.0], vec![3.0, 4.0], 0.1);
        h.push_half_load(vec![1.0, 1.0]);
        let mut m = BandedSymMatrix::zeros(2, 1);
        m.add(0, 0, 2.0);
        m.add(1, 1, 2.0);
        m.add(0, 1, 0.5);
        let eq = memory_equation(&h, &Kernel::exponential(0.0), &m, QuadratureMode::Literal).unwrap();
        assert_eq!(eq.alpha, 0.5);
        assert_eq!(eq.beta, 0.0);
        assert_eq!(eq.rhs, vec![0.0, 0.0]);
    }

    #[test]
    fn ill_posed_step() {
        // α = 1/2 + δ g(0)/8 vanishes for g(0) = −4/δ
        let h = constant_history(0, 0.5, 1.0);
        let kernel = Kernel::constant(-8.0);
        let err = memory_equation(&h, &kernel, &scalar_mass(), QuadratureMode::Consistent);
        assert!(matches!(err, Err(Error::IllPosedStep { .. })));
    }

    #[test]
    fn memory_equation_matches_printed_form() {
        // plug arbitrary (U^{k+1}, Y^{k+1}) into the unrearranged relation
        let delta = 0.07;
        let kernel = Kernel::custom(|s| 1.3 * (0.4 * s).cos(), |s| -0.52 * (0.4 * s).sin());
        let mut h = StateHistory::new(vec![0.3], vec![1.1], delta);
        let seq = [0.7, -0.2, 0.9, 0.4];
        for (j, v) in seq.iter().enumerate() {
            h.push_half_load(vec![v + 0.5]);
            h.push_step(vec![*v], vec![0.1 * j as f64 - 0.3]);
        }
        h.push_half_load(vec![2.0]);
        let k = h.k();
        let (u1, y1) = (0.25, -0.6);
        let eq = memory_equation(&h, &kernel, &scalar_mass(), QuadratureMode::Consistent).unwrap();
        let lhs = eq.alpha * y1 + eq.beta * u1 - eq.rhs[0];

        let g = |s: f64| kernel.g(s);
        let gp = |s: f64| kernel.gp(s);
        let tk = |j: usize| j as f64 * delta;
        let th = (k as f64 + 0.5) * delta;
        let (u, y) = (h.u_all(), h.y_all());
        let mut qg = delta / 2.0 * g(th) * y[0][0];
        let mut qgp = delta / 2.0 * gp(th) * u[0][0];
        for j in 1..k {
            qg += delta * g(th - tk(j)) * y[j][0];
            qgp += delta * gp(th - tk(j)) * u[j][0];
        }
        qg += 0.75 * delta * g(th - tk(k)) * y[k][0] + delta / 8.0 * g(0.0) * (y[k][0] + y1);
        qgp += 0.75 * delta * gp(th - tk(k)) * u[k][0] + delta / 8.0 * gp(0.0) * (u[k][0] + u1);
        let mut iff = delta / 4.0 * g(th) * h.f0()[0] + 0.75 * delta * g(th - 0.5 * delta) * h.f_half(0)[0];
        for m in 1..k {
            iff += delta * g(th - (m as f64 + 0.5) * delta) * h.f_half(m)[0];
        }
        iff += delta / 2.0 * g(0.0) * h.f_half(k)[0];
        let printed = 0.5 * (y1 + y[k][0])
            - (g(0.0) * 0.5 * (u1 + u[k][0]) - g(th) * u[0][0] - qg + qgp - iff);
        assert!((lhs - printed).abs() < 1e-14, "{lhs} vs {printed}");
    }

    proptest! {
        #[test]
        fn exponential_identity(s in 0.0f64..50.0, lambda in -20.0f64..20.0) {
            let k = Kernel::exponential(lambda);
            prop_assert!((k.gp(s) + k.g(s)).abs() <= 1e-14 * (1.0 + k.g(s).abs()));
        }

        #[test]
        fn weight_sum_any_step(k in 0usize..400, delta in 1e-5f64..1.0) {
            let t = (k as f64 + 0.5) * delta;
            prop_assert!((volterra_weights(k, delta).kernel_sum(|_| 1.0) - t).abs() <= 1e-14 * t);
        }

        #[test]
        fn literal_minus_consistent(k in 1usize..30, lambda in -5.0f64..5.0, delta in 1e-3f64..0.5) {
            let h = constant_history(k, delta, 1.0);
            let kernel = Kernel::exponential(lambda);
            let c = i_f(&h, &kernel, QuadratureMode::Consistent)[0];
            let l = i_f(&h, &kernel, QuadratureMode::Literal)[0];
            prop_assert!((l - c - delta * kernel.g(0.0)).abs() <= 1e-15 * (1.0 + c.abs()));
        }
    }
}
