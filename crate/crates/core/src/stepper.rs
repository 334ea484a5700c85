//! Crank-Nicolson steps solved by fixed-point iteration, and the time march.

use serde::{Deserialize, Serialize};

use crate::assembly::{default_epsilon, interpolate, Assembler, FluxParams};
use crate::banded::{BandLu, BandedSymMatrix};
use crate::error::{Error, Result};
use crate::memory::{memory_equation, Kernel, MemoryEquation, QuadratureMode, StateHistory};
use crate::mesh::{gauss_legendre, Mesh1D};
use crate::problem::{ProblemDef, SpaceTimeFn};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Fixed-point linearization of the nonlinear step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Flux coefficient lagged, new iterate implicit in the p-Laplacian.
    A,
    /// Whole flux lagged; only the mass terms are implicit.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SchemeChoice {
    #[default]
    #[serde(rename = "auto")]
    Auto,
    A,
    B,
}

/// `B` for `2 < p < 3`, `A` otherwise.
pub fn select_scheme(p: f64) -> Result<Scheme> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::config(format!("exponent p must be > 1 (got {p})")));
    }
    // scheme B's explicit flux stalls for p < 2 on stiff meshes; A is used outside (2, 3)
    Ok(if p > 2.0 && p < 3.0 { Scheme::B } else { Scheme::A })
}

pub fn resolve_scheme(choice: SchemeChoice, p: f64) -> Result<Scheme> {
    let auto = select_scheme(p)?;
    Ok(match choice {
        SchemeChoice::Auto => auto,
        SchemeChoice::A => Scheme::A,
        SchemeChoice::B => Scheme::B,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub delta: f64,
    pub n_steps: usize,
    /// Threshold on the squared mass-norm increments of both unknowns.
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: SchemeChoice,
    /// `None` picks the default for the exponent.
    pub epsilon: Option<f64>,
    /// `None` means `r + 2`.
    pub quadrature_points: Option<usize>,
    pub quadrature_mode: QuadratureMode,
}

impl SolverConfig {
    /// `N` uniform steps on `[0, T]` with default solver settings.
    pub fn new(t_final: f64, n_steps: usize) -> Self {
        Self {
            delta: t_final / n_steps as f64,
            n_steps,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            scheme: SchemeChoice::Auto,
            epsilon: None,
            quadrature_points: None,
            quadrature_mode: QuadratureMode::Consistent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::config(format!("time step must be positive (got {})", self.delta)));
        }
        if self.n_steps == 0 {
            return Err(Error::config("N must be at least 1"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::config(format!("tol must be positive (got {})", self.tol)));
        }
        if self.max_iter < 2 {
            return Err(Error::config(format!("max_iter must be at least 2 (got {})", self.max_iter)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub iterations: usize,
    pub increment_u: f64,
    pub increment_y: f64,
    /// `‖Δₙ₊₁‖² / ‖Δₙ‖²` for each iteration after the first, both unknowns combined.
    pub ratios: Vec<f64>,
}

/// First block `L·𝒰 − δM·𝒴 = rhs` of one fixed-point iteration.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: BandedSymMatrix,
    pub rhs: Vec<f64>,
}

/// Seeds the iteration with the previous step.
pub fn fixed_point_init(hist: &StateHistory) -> (Vec<f64>, Vec<f64>) {
    (hist.u_last().to_vec(), hist.y_last().to_vec())
}

/// Eliminates `𝒴` through the memory relation and solves for `(𝒰, 𝒴)`.
pub fn solve_block(
    system: &BlockSystem,
    mass: &BandedSymMatrix,
    mass_lu: &BandLu,
    memory: &MemoryEquation,
    delta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let MemoryEquation { alpha, beta, rhs } = memory;
    if alpha.is_nan() || alpha.abs() < crate::memory::ALPHA_MIN {
        return Err(Error::IllPosedStep { alpha: *alpha });
    }
    let reduced = system.matrix.combine(1.0, mass, delta * beta / alpha);
    let r: Vec<f64> = system
        .rhs
        .iter()
        .zip(rhs)
        .map(|(a, b)| a + delta / alpha * b)
        .collect();
    let u = reduced.solve(&r)?;
    let mu = mass.matvec(&u);
    let my: Vec<f64> = rhs.iter().zip(&mu).map(|(r, m)| (r - beta * m) / alpha).collect();
    let y = mass_lu.solve(&my)?;
    Ok((u, y))
}

fn m_norm_sq(mass: &BandedSymMatrix, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mass.quad_form(&d)
}

/// Everything needed to advance one problem on one mesh.
#[derive(Clone)]
pub struct Stepper {
    assembler: Assembler,
    mass: BandedSymMatrix,
    mass_lu: BandLu,
    kernel: Kernel,
    forcing: Option<SpaceTimeFn>,
    flux: FluxParams,
    scheme: Scheme,
    cfg: SolverConfig,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("mesh", self.assembler.mesh())
            .field("kernel", &self.kernel)
            .field("flux", &self.flux)
            .field("scheme", &self.scheme)
            .field("cfg", &self.cfg)
            .finish_non_exhaustive()
    }
}

impl Stepper {
    pub fn new(problem: &ProblemDef, mesh: Mesh1D, cfg: &SolverConfig) -> Result<Self> {
        problem.validate()?;
        cfg.validate()?;
        let scheme = resolve_scheme(cfg.scheme, problem.p)?;
        let eps = cfg.epsilon.unwrap_or_else(|| default_epsilon(problem.p));
        let flux = FluxParams::new(problem.p, eps)?;
        let q = cfg.quadrature_points.unwrap_or(mesh.degree() + 2);
        let assembler = Assembler::new(mesh, gauss_legendre(q)?);
        let mass = assembler.mass();
        let mass_lu = mass.factor()?;
        Ok(Self {
            assembler,
            mass,
            mass_lu,
            kernel: problem.kernel.clone(),
            forcing: problem.f.clone(),
            flux,
            scheme,
            cfg: cfg.clone(),
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn flux_params(&self) -> &FluxParams {
        &self.flux
    }

    pub fn mass(&self) -> &BandedSymMatrix {
        &self.mass
    }

    pub fn assembler(&self) -> &Assembler {
        &self.assembler
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Interior load vector at time `t`.
    pub fn load(&self, t: f64) -> Result<Vec<f64>> {
        match &self.forcing {
            Some(f) => self.assembler.load(|x, t| f(x, t), t),
            None => Ok(vec![0.0; self.assembler.mesh().n_interior()]),
        }
    }

    /// History at `k = 0`: `U⁽⁰⁾ = Π_h u₀`, `Y⁽⁰⁾ = 0`, `F⁽⁰⁾`.
    pub fn initial_history(&self, problem: &ProblemDef) -> Result<StateHistory> {
        let u0 = interpolate(self.assembler.mesh(), |x| (problem.u0)(x));
        if let Some(i) = u0.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericInput {
                what: "initial datum",
                x: self.assembler.mesh().interior_nodes()[i],
                t: 0.0,
            });
        }
        Ok(StateHistory::new(u0, self.load(0.0)?, self.cfg.delta))
    }

    /// First block of the iteration for the current iterate `un`.
    ///
    /// `hist` must already hold `F^{k+1/2}`.
    pub fn iteration_system(&self, scheme: Scheme, un: &[f64], hist: &StateHistory) -> BlockSystem {
        let delta = self.cfg.delta;
        let k = hist.k();
        let uk = hist.u(k);
        let w: Vec<f64> = un.iter().zip(uk).map(|(a, b)| 0.5 * (a + b)).collect();
        let my = self.mass.matvec(hist.y(k));
        let mu = self.mass.matvec(uk);
        let f = hist.f_half(k);
        match scheme {
            Scheme::A => {
                let a = self.assembler.plap(&w, &self.flux);
                let au = a.matvec(uk);
                let rhs = (0..uk.len())
                    .map(|i| 2.0 * mu[i] - delta * au[i] + delta * my[i] + 2.0 * delta * f[i])
                    .collect();
                BlockSystem {
                    matrix: self.mass.combine(2.0, &a, delta),
                    rhs,
                }
            }
            Scheme::B => {
                // Ã(w)(𝒰ₙ + Uᵏ) = 2·Ã(w)w
                let flux = self.assembler.flux_vector(&w, &self.flux);
                let rhs = (0..uk.len())
                    .map(|i| -2.0 * delta * flux[i] + 2.0 * mu[i] + delta * my[i] + 2.0 * delta * f[i])
                    .collect();
                BlockSystem {
                    matrix: self.mass.scale(2.0),
                    rhs,
                }
            }
        }
    }

    pub fn memory_equation(&self, hist: &StateHistory) -> Result<MemoryEquation> {
        memory_equation(hist, &self.kernel, &self.mass, self.cfg.quadrature_mode)
    }

    /// Advances `hist` by one step with the configured scheme.
    pub fn step(&self, hist: &mut StateHistory) -> Result<StepDiagnostics> {
        self.step_with(self.scheme, hist)
    }

    pub fn step_with(&self, scheme: Scheme, hist: &mut StateHistory) -> Result<StepDiagnostics> {
        let k = hist.k();
        if hist.half_loads() == k {
            let t_half = (k as f64 + 0.5) * self.cfg.delta;
            hist.push_half_load(self.load(t_half)?);
        }
        let memory = self.memory_equation(hist)?;
        let (mut un, mut yn) = fixed_point_init(hist);
        let mut ratios = Vec::new();
        let mut prev = f64::NAN;
        let (mut inc_u, mut inc_y) = (f64::NAN, f64::NAN);
        let mut iterations = 0;
        for n in 1..=self.cfg.max_iter {
            iterations = n;
            let system = self.iteration_system(scheme, &un, hist);
            let (u_next, y_next) =
                solve_block(&system, &self.mass, &self.mass_lu, &memory, self.cfg.delta)
                    .map_err(|e| annotate(e, k))?;
            inc_u = m_norm_sq(&self.mass, &u_next, &un);
            inc_y = m_norm_sq(&self.mass, &y_next, &yn);
            let total = inc_u + inc_y;
            if n > 1 {
                ratios.push(total / prev);
            }
            prev = total;
            un = u_next;
            yn = y_next;
            // the seed is the previous step, so the first increment is the step size itself
            if n > 1 && inc_u < self.cfg.tol && inc_y < self.cfg.tol {
                hist.push_step(un, yn);
                return Ok(StepDiagnostics {
                    iterations: n,
                    increment_u: inc_u,
                    increment_y: inc_y,
                    ratios,
                });
            }
            if !total.is_finite() {
                break;
            }
        }
        Err(Error::Divergence {
            step: k,
            iterations,
            increment_u: inc_u,
            increment_y: inc_y,
            ratio: ratios.last().copied().unwrap_or(f64::NAN),
        })
    }
}

fn annotate(e: Error, step: usize) -> Error {
    match e {
        Error::LinearSolve(msg) => Error::LinearSolve(format!("step {step}: {msg}")),
        other => other,
    }
}

/// Full trajectory of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mesh: Mesh1D,
    pub scheme: Scheme,
    pub delta: f64,
    pub times: Vec<f64>,
    /// Interior coefficient vectors `U⁽ᵏ⁾`, `k = 0..=N`.
    pub u: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// `b(t_k) = ∫ U_h(·, t_k)²`.
    pub energy: Vec<f64>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// `F⁽⁰⁾` followed by the half-step loads, kept for the stability bound.
    pub loads: Vec<Vec<f64>>,
}

impl RunOutput {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn final_u(&self) -> &[f64] {
        &self.u[self.u.len() - 1]
    }

    pub fn final_y(&self) -> &[f64] {
        &self.y[self.y.len() - 1]
    }
}

/// `U⁽⁰⁾ = Π_h u₀`, `Y⁽⁰⁾ = 0`, then `N` steps.
pub fn march(problem: &ProblemDef, mesh: &Mesh1D, cfg: &SolverConfig) -> Result<RunOutput> {
    let stepper = Stepper::new(problem, mesh.clone(), cfg)?;
    let mut hist = stepper.initial_history(problem)?;
    let mut diagnostics = Vec::with_capacity(cfg.n_steps);
    for _ in 0..cfg.n_steps {
        diagnostics.push(stepper.step(&mut hist)?);
    }
    let mass = stepper.mass();
    let energy = hist.u_all().iter().map(|u| mass.quad_form(u).max(0.0)).collect();
    let mut loads = Vec::with_capacity(cfg.n_steps + 1);
    loads.push(hist.f0().to_vec());
    loads.extend((0..hist.half_loads()).map(|m| hist.f_half(m).to_vec()));
    Ok(RunOutput {
        mesh: mesh.clone(),
        scheme: stepper.scheme(),
        delta: cfg.delta,
        times: (0..=cfg.n_steps).map(|k| k as f64 * cfg.delta).collect(),
        u: hist.u_all().to_vec(),
        y: hist.y_all().to_vec(),
        energy,
        diagnostics,
        loads,
    })
}
