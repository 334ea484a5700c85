//! JSON run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::default_epsilon;
use crate::error::{Error, Result};
use crate::memory::QuadratureMode;
use crate::mesh::{build_uniform_mesh, Mesh1D, MAX_DEGREE, MAX_QUADRATURE_POINTS};
use crate::problem::{
    cubic_gap_problem, flat_gap_problem, manufactured_example1, quartic_problem, ProblemDef,
};
use crate::stepper::{select_scheme, SchemeChoice, SolverConfig, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Built-in initial data and forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `u = (x(1−x))² e^{−t}` on `(0, 1)` with the matching forcing.
    #[default]
    Manufactured,
    /// `u₀ = 1 − x⁴`, `f = 0`.
    Quartic,
    /// Gap datum with quadratic contact, `f = 0`.
    CubicGap,
    /// Gap datum with seventh-order contact, `f = 0`.
    FlatGap,
}

impl ProblemKind {
    pub fn default_domain(self) -> Domain {
        match self {
            ProblemKind::Manufactured => Domain { a: 0.0, b: 1.0 },
            _ => Domain { a: -1.0, b: 1.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(rename = "type")]
    pub kind: String,
    pub lambda: f64,
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub domain: Domain,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub p: f64,
    pub kernel: KernelConfig,
    pub r: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    pub scheme: SchemeChoice,
    pub quadrature_points: usize,
    pub quadrature_mode: QuadratureMode,
    pub snapshot_times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDomain {
    Pair([f64; 2]),
    Named { a: f64, b: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    #[serde(rename = "type")]
    kind: Option<String>,
    lambda: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Option<ProblemKind>,
    domain: Option<RawDomain>,
    #[serde(rename = "T")]
    t_final: Option<f64>,
    p: Option<f64>,
    kernel: Option<RawKernel>,
    lambda: Option<f64>,
    r: Option<usize>,
    m: Option<usize>,
    #[serde(rename = "N")]
    n_steps: Option<usize>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    epsilon: Option<f64>,
    scheme: Option<SchemeChoice>,
    quadrature_points: Option<usize>,
    quadrature_mode: Option<QuadratureMode>,
    snapshot_times: Option<Vec<f64>>,
    output_dir: Option<String>,
}

fn required<T>(v: Option<T>, field: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(format!("missing field `{field}`")))
}

fn finite(v: f64, field: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(format!("field `{field}` must be finite (got {v})")))
    }
}

impl RawConfig {
    fn resolve(self) -> Result<RunConfig> {
        let problem = self.problem.unwrap_or_default();
        let domain = match self.domain {
            None => problem.default_domain(),
            Some(RawDomain::Pair([a, b])) | Some(RawDomain::Named { a, b }) => Domain { a, b },
        };
        finite(domain.a, "domain.a")?;
        finite(domain.b, "domain.b")?;
        if domain.b <= domain.a {
            return Err(Error::config(format!(
                "field `domain` must satisfy a < b (got [{}, {}])",
                domain.a, domain.b
            )));
        }
        if problem == ProblemKind::Manufactured && domain != problem.default_domain() {
            return Err(Error::config(
                "field `domain` must be [0, 1] for the manufactured problem",
            ));
        }
        let t_final = finite(required(self.t_final, "T")?, "T")?;
        if t_final <= 0.0 {
            return Err(Error::config(format!("field `T` must be positive (got {t_final})")));
        }
        let p = finite(required(self.p, "p")?, "p")?;
        select_scheme(p).map_err(|_| Error::config(format!("field `p` must be > 1 (got {p})")))?;

        let (kind, kernel_lambda) = match self.kernel {
            Some(k) => (k.kind, k.lambda),
            None => (None, None),
        };
        let kind = kind.unwrap_or_else(|| "exponential".into());
        if kind != "exponential" {
            return Err(Error::config(format!(
                "field `kernel.type` must be \"exponential\" (got {kind:?})"
            )));
        }
        let lambda = match (self.lambda, kernel_lambda) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::config(format!(
                    "fields `lambda` ({a}) and `kernel.lambda` ({b}) disagree"
                )))
            }
            (Some(l), _) | (None, Some(l)) => finite(l, "lambda")?,
            (None, None) => return Err(Error::config("missing field `lambda` (or `kernel.lambda`)")),
        };

        let r = required(self.r, "r")?;
        if r == 0 || r > MAX_DEGREE {
            return Err(Error::config(format!(
                "field `r` must be in 1..={MAX_DEGREE} (got {r})"
            )));
        }
        let m = required(self.m, "m")?;
        if m == 0 {
            return Err(Error::config("field `m` must be at least 1"));
        }
        let n_steps = required(self.n_steps, "N")?;
        if n_steps == 0 {
            return Err(Error::config("field `N` must be at least 1"));
        }
        let tol = finite(self.tol.unwrap_or(DEFAULT_TOL), "tol")?;
        if tol <= 0.0 {
            return Err(Error::config(format!("field `tol` must be positive (got {tol})")));
        }
        let max_iter = self.max_iter.unwrap_or(DEFAULT_MAX_ITER);
        if max_iter < 2 {
            return Err(Error::config(format!("field `max_iter` must be at least 2 (got {max_iter})")));
        }
        let epsilon = finite(self.epsilon.unwrap_or_else(|| default_epsilon(p)), "epsilon")?;
        if epsilon < 0.0 || (p < 2.0 && epsilon == 0.0) {
            return Err(Error::config(format!(
                "field `epsilon` must be non-negative, and positive for p < 2 (got {epsilon})"
            )));
        }
        let quadrature_points = self.quadrature_points.unwrap_or(r + 2);
        if quadrature_points == 0 || quadrature_points > MAX_QUADRATURE_POINTS {
            return Err(Error::config(format!(
                "field `quadrature_points` must be in 1..={MAX_QUADRATURE_POINTS} (got {quadrature_points})"
            )));
        }
        let snapshot_times = self.snapshot_times.unwrap_or_default();
        for &t in &snapshot_times {
            finite(t, "snapshot_times")?;
            if !(0.0..=t_final).contains(&t) {
                return Err(Error::config(format!(
                    "field `snapshot_times` entry {t} lies outside [0, T]"
                )));
            }
        }
        Ok(RunConfig {
            problem,
            domain,
            t_final,
            p,
            kernel: KernelConfig {
                kind,
                lambda,
            },
            r,
            m,
            n_steps,
            tol,
            max_iter,
            epsilon,
            scheme: self.scheme.unwrap_or_default(),
            quadrature_points,
            quadrature_mode: self.quadrature_mode.unwrap_or_default(),
            snapshot_times,
            output_dir: self.output_dir,
        })
    }
}

/// Parses and validates a JSON document.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            Error::config(e.inner().to_string())
        } else {
            Error::config(format!("field `{path}`: {}", e.inner()))
        }
    })?;
    raw.resolve()
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn lambda(&self) -> f64 {
        self.kernel.lambda
    }

    pub fn delta(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn mesh(&self) -> Result<Mesh1D> {
        build_uniform_mesh(self.domain.a, self.domain.b, self.m, self.r)
    }

    pub fn problem_def(&self) -> ProblemDef {
        let (p, l, t) = (self.p, self.lambda(), self.t_final);
        let mut def = match self.problem {
            ProblemKind::Manufactured => manufactured_example1(p, l, t),
            ProblemKind::Quartic => quartic_problem(p, l, t),
            ProblemKind::CubicGap => cubic_gap_problem(p, l, t),
            ProblemKind::FlatGap => flat_gap_problem(p, l, t),
        };
        def.a = self.domain.a;
        def.b = self.domain.b;
        def
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            delta: self.delta(),
            n_steps: self.n_steps,
            tol: self.tol,
            max_iter: self.max_iter,
            scheme: self.scheme,
            epsilon: Some(self.epsilon),
            quadrature_points: Some(self.quadrature_points),
            quadrature_mode: self.quadrature_mode,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepper::{resolve_scheme, Scheme};

    const MINIMAL: &str = r#"{"p":3,"r":1,"m":10,"N":100,"T":0.1,"lambda":1,"domain":[0,1]}"#;

    #[test]
    fn minimal_config_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.tol, 1e-9);
        assert_eq!(c.max_iter, 100);
        assert_eq!(c.epsilon, 0.0);
        assert_eq!(c.quadrature_points, 3);
        assert_eq!(c.quadrature_mode, QuadratureMode::Consistent);
        assert_eq!(c.problem, ProblemKind::Manufactured);
        assert_eq!(resolve_scheme(c.scheme, c.p).unwrap(), Scheme::A);
        assert!((c.delta() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_input() {
        let bad_p = MINIMAL.replace("\"p\":3", "\"p\":0.5");
        let e = parse_config_str(&bad_p).unwrap_err();
        assert!(e.to_string().contains("`p`"), "{e}");
        assert_eq!(e.exit_code(), 2);

        let missing = r#"{"p":3,"r":1,"m":10,"T":0.1,"lambda":1}"#;
        assert!(parse_config_str(missing).unwrap_err().to_string().contains("`N`"));

        let unknown = MINIMAL.replace("\"r\":1", "\"r\":1,\"bogus\":2");
        assert!(parse_config_str(&unknown).unwrap_err().to_string().contains("bogus"));

        let typed = MINIMAL.replace("\"m\":10", "\"m\":\"ten\"");
        assert!(parse_config_str(&typed).unwrap_err().to_string().contains("`m`"));

        let eps = r#"{"problem":"quartic","p":1.5,"r":1,"m":10,"N":10,"T":1,"lambda":0,"epsilon":0}"#;
        assert!(parse_config_str(eps).unwrap_err().to_string().contains("epsilon"));
    }

    #[test]
    fn lambda_in_kernel_object() {
        let c = parse_config_str(
            r#"{"p":4,"r":2,"m":4,"N":10,"T":0.1,"kernel":{"type":"exponential","lambda":-2}}"#,
        )
        .unwrap();
        assert_eq!(c.lambda(), -2.0);
        assert_eq!(c.domain, Domain { a: 0.0, b: 1.0 });
    }

    #[test]
    fn round_trip() {
        let c = parse_config_str(
            r#"{"problem":"flat_gap","p":3,"r":1,"m":100,"N":50,"T":0.05,"lambda":-5,
                "domain":{"a":-1,"b":1},"scheme":"B","quadrature_mode":"literal",
                "snapshot_times":[0,0.01],"output_dir":"out"}"#,
        )
        .unwrap();
        assert_eq!(parse_config_str(&c.to_json()).unwrap(), c);
        let m = parse_config_str(MINIMAL).unwrap();
        assert_eq!(parse_config_str(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn p_below_two_gets_regularized() {
        let c = parse_config_str(
            r#"{"problem":"quartic","p":1.5,"r":1,"m":10,"N":10,"T":1,"lambda":0}"#,
        )
        .unwrap();
        assert_eq!(c.epsilon, 1e-8);
        assert_eq!(c.domain, Domain { a: -1.0, b: 1.0 });
    }
}
