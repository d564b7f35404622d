use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use proxkit::linalg::{LinOp, Vector};
use proxkit::oracle::{check_cyclically_monotone, check_firmly_nonexpansive, check_gradient, check_identity};
use proxkit::solvers::{
    composite_dual_value, composite_primal_value, lagrangian_dual_value, lagrangian_primal_value,
    run_douglas_rachford, run_fbf, run_forward_backward, run_parallel_projection,
    run_partial_inverse_method, run_pd_chen, run_pd_composite, run_pd_lagrangian, run_ppa,
};
use proxkit::{Error as CoreError, Report, Sampler, SolverConfig, SolverTrace, Status};
use serde::Serialize;

use crate::spec::{Predicate, Problem, ProblemSpec, VERSION};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_MAX_ITER: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_CHECK_FAILED: u8 = 4;

/// An error tied to a position in the problem file when one can be found.
#[derive(Debug)]
pub struct CliError {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.file, self.line, self.column, self.message)
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

pub struct Loaded {
    pub path: PathBuf,
    pub text: String,
    pub spec: ProblemSpec,
}

impl Loaded {
    pub fn read(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let file = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| CliError {
            file: file.clone(),
            line: 0,
            column: 0,
            message: format!("cannot read: {e}"),
        })?;
        let mut spec: ProblemSpec = serde_json::from_str(&text).map_err(|e| CliError {
            file: file.clone(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let loaded = Loaded {
            path: path.to_path_buf(),
            text,
            spec: spec.clone(),
        };
        if spec.version != VERSION {
            return Err(loaded.error_at("version", format!("unsupported version {}, expected {VERSION}", spec.version)));
        }
        if spec.solver.is_some() {
            let cfg = spec.config.get_or_insert_with(SolverConfig::default);
            if let Some(s) = overrides.seed {
                cfg.seed = s;
            }
            if let Some(m) = overrides.max_iter {
                cfg.max_iter = m;
            }
            if let Some(t) = overrides.tol {
                cfg.tol = t;
            }
        }
        if spec.check.is_some() {
            let s = spec.sampling.get_or_insert_with(Default::default);
            if let Some(seed) = overrides.seed {
                s.seed = seed;
            }
        }
        Ok(Loaded { spec, ..loaded })
    }

    /// Points at the first line mentioning `"key"`, else the top of the file.
    pub fn error_at(&self, key: &str, message: impl Into<String>) -> CliError {
        let needle = format!("\"{key}\"");
        let (line, column) = self
            .text
            .lines()
            .enumerate()
            .find_map(|(i, l)| l.find(&needle).map(|c| (i + 1, c + 1)))
            .unwrap_or((1, 1));
        CliError {
            file: self.path.display().to_string(),
            line,
            column,
            message: message.into(),
        }
    }

    fn core_error(&self, section: &str, e: CoreError) -> CliError {
        let key = match &e {
            CoreError::InvalidParameter { name, .. } => *name,
            _ => section,
        };
        let key = if self.text.contains(&format!("\"{key}\"")) { key } else { section };
        self.error_at(key, e.to_string())
    }

    fn dim(&self, command: &str) -> Result<usize, CliError> {
        self.spec
            .dim
            .ok_or_else(|| self.error_at("version", format!("`{command}` needs a top-level `dim`")))
    }

    pub fn normalized(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("problem specs always serialize") + "\n"
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub solver: String,
    pub status: Status,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub final_kkt_residual: Option<f64>,
    pub final_gamma: Option<f64>,
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual: Option<Vec<f64>>,
    pub primal_value: Option<f64>,
    pub dual_value: Option<f64>,
    pub gap: Option<f64>,
    pub warnings: Vec<String>,
}

pub struct Solved {
    pub summary: Summary,
    pub csv: String,
}

impl Solved {
    pub fn exit_code(&self) -> u8 {
        match self.summary.status {
            Status::Converged => EXIT_OK,
            Status::MaxIter => EXIT_MAX_ITER,
            Status::Diverged => EXIT_DIVERGED,
        }
    }
}

type GapFn = Box<dyn Fn(&Vector, &Vector) -> Option<f64>>;

fn check_dim(loaded: &Loaded, what: &str, want: usize, got: Option<usize>) -> Result<(), CliError> {
    match got {
        Some(d) if d != want => Err(loaded.error_at(
            "dim",
            format!("dimension mismatch: `dim` is {want} but {what} acts on R^{d}"),
        )),
        _ => Ok(()),
    }
}

fn finite(v: proxkit::Result<f64>) -> Option<f64> {
    v.ok().filter(|x| x.is_finite())
}

pub fn solve(loaded: &Loaded) -> Result<Solved, CliError> {
    let spec = &loaded.spec;
    let problem = spec
        .solver
        .as_ref()
        .ok_or_else(|| loaded.error_at("version", "`solve` needs a `solver` section"))?;
    let dim = loaded.dim("solve")?;
    let cfg = spec.config.clone().unwrap_or_default();
    if let Some(x) = &cfg.x0 {
        if x.len() != dim {
            return Err(loaded.error_at("x0", format!("dimension mismatch: `x0` has length {} but `dim` is {dim}", x.len())));
        }
    }
    let build = |e| loaded.core_error("solver", e);
    let run = |e| loaded.core_error("config", e);

    let (trace, gap): (SolverTrace, Option<GapFn>) = match problem {
        Problem::Ppa { a } => {
            let a = a.build().map_err(build)?;
            check_dim(loaded, "`a`", dim, a.dim())?;
            (run_ppa(&a, &cfg).map_err(run)?, None)
        }
        Problem::ForwardBackward { a, b, beta } => {
            let (a, b) = (a.build().map_err(build)?, b.build().map_err(build)?);
            check_dim(loaded, "`a`", dim, a.dim())?;
            check_dim(loaded, "`b`", dim, b.dim())?;
            (run_forward_backward(&a, &b, *beta, &cfg).map_err(run)?, None)
        }
        Problem::Fbf { a, b } => {
            let (a, b) = (a.build().map_err(build)?, b.build().map_err(build)?);
            check_dim(loaded, "`a`", dim, a.dim())?;
            check_dim(loaded, "`b`", dim, b.dim())?;
            (run_fbf(&a, &b, &cfg).map_err(run)?, None)
        }
        Problem::DouglasRachford { a, b, gamma } => {
            let (a, b) = (a.build().map_err(build)?, b.build().map_err(build)?);
            check_dim(loaded, "`a`", dim, a.dim())?;
            check_dim(loaded, "`b`", dim, b.dim())?;
            (run_douglas_rachford(&a, &b, *gamma, &cfg).map_err(run)?, None)
        }
        Problem::ParallelProjection { sets, weights } => {
            let sets = sets.iter().map(|s| s.build()).collect::<proxkit::Result<Vec<_>>>().map_err(build)?;
            for s in &sets {
                check_dim(loaded, "a set", dim, Some(s.dim()))?;
            }
            (run_parallel_projection(&sets, weights, &cfg).map_err(run)?, None)
        }
        Problem::PartialInverse { f, subspace } => {
            let (f, v) = (f.build().map_err(build)?, subspace.build().map_err(build)?);
            check_dim(loaded, "`f`", dim, f.dim())?;
            check_dim(loaded, "`subspace`", dim, Some(v.dim()))?;
            (run_partial_inverse_method(&f, &v, &cfg).map_err(run)?, None)
        }
        Problem::PdComposite { saddle } => {
            let s = saddle.build().map_err(build)?;
            check_dim(loaded, "`saddle.l`", dim, Some(s.primal_dim()))?;
            let trace = run_pd_composite(&s, &cfg).map_err(run)?;
            let gap: GapFn = Box::new(move |x, v| {
                Some(finite(composite_primal_value(&s, x))? - finite(composite_dual_value(&s, v))?)
            });
            (trace, Some(gap))
        }
        Problem::PdLagrangian { f, g, l } | Problem::PdChen { f, g, l } => {
            let (f, g) = (f.build().map_err(build)?, g.build().map_err(build)?);
            let l = LinOp::from_rows(l).map_err(build)?;
            check_dim(loaded, "`l`", dim, Some(l.cols()))?;
            let trace = if matches!(problem, Problem::PdChen { .. }) {
                run_pd_chen(&f, &g, &l, &cfg)
            } else {
                run_pd_lagrangian(&f, &g, &l, &cfg)
            }
            .map_err(run)?;
            let gap: GapFn = Box::new(move |x, v| {
                Some(finite(lagrangian_primal_value(&f, &g, &l, x))? - finite(lagrangian_dual_value(&f, &g, &l, v))?)
            });
            (trace, Some(gap))
        }
    };
    Ok(Solved {
        csv: trace_csv(&trace, gap.as_deref()),
        summary: Summary {
            solver: problem.name().into(),
            status: trace.status,
            iterations: trace.iterations(),
            final_residual: trace.residuals.last().copied(),
            final_kkt_residual: trace.kkt_residuals.last().copied(),
            final_gamma: trace.gamma_used.last().copied(),
            x: trace.final_iterate().iter().copied().collect(),
            dual: trace.final_dual().map(|v| v.iter().copied().collect()),
            primal_value: trace.primal_value,
            dual_value: trace.dual_value,
            gap: trace.gap,
            warnings: trace.warnings.clone(),
        },
    })
}

/// 17 significant digits, `'.'` decimal point.
fn number(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per step; `objective` and `gap` columns appear only when the
/// solver provides them.
pub fn trace_csv(trace: &SolverTrace, gap: Option<&dyn Fn(&Vector, &Vector) -> Option<f64>>) -> String {
    let n = trace.iterations();
    let objective = !trace.objective.is_empty();
    let gaps: Option<Vec<Option<f64>>> = gap.filter(|_| trace.dual_iterates.len() == n + 1).map(|g| {
        (1..=n).map(|k| g(&trace.iterates[k], &trace.dual_iterates[k])).collect()
    });
    let mut out = String::from("iter,residual,gamma");
    if objective {
        out.push_str(",objective");
    }
    if gaps.is_some() {
        out.push_str(",gap");
    }
    out.push('\n');
    for k in 0..n {
        write!(out, "{},{},{}", k + 1, number(trace.residuals[k]), number(trace.gamma_used[k])).unwrap();
        if objective {
            write!(out, ",{}", number(trace.objective[k])).unwrap();
        }
        if let Some(g) = &gaps {
            out.push(',');
            if let Some(v) = g[k] {
                out.push_str(&number(v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn check(loaded: &Loaded) -> Result<Report, CliError> {
    let spec = &loaded.spec;
    let predicate = spec
        .check
        .as_ref()
        .ok_or_else(|| loaded.error_at("version", "`check` needs a `check` section"))?;
    let dim = loaded.dim("check")?;
    let sampling = spec.sampling.clone().unwrap_or_default();
    if sampling.samples == 0 || !(sampling.radius.is_finite() && sampling.radius > 0.0) {
        return Err(loaded.error_at("sampling", "`samples` must be positive and `radius` a positive number"));
    }
    let s = Sampler::new(sampling.seed, sampling.samples, sampling.radius);
    let build = |e| loaded.core_error("check", e);
    let report = match predicate {
        Predicate::FirmNonexpansive { operator } => {
            let t = operator.build().map_err(build)?;
            check_firmly_nonexpansive(|x: &Vector| t(x), dim, &s)
        }
        Predicate::Cyclic { operator, max_cycle } => {
            let t = operator.build().map_err(build)?;
            check_cyclically_monotone(|x: &Vector| t(x), dim, *max_cycle, &s)
        }
        Predicate::Identity { left, right, tol } => {
            let (a, b) = (left.build().map_err(build)?, right.build().map_err(build)?);
            check_identity(|x: &Vector| a(x), |x: &Vector| b(x), dim, &s, *tol)
        }
        Predicate::Gradient { smooth } => {
            let h = smooth.build().map_err(build)?;
            check_dim(loaded, "`smooth`", dim, h.dim())?;
            check_gradient(|x: &Vector| h.value(x), |x: &Vector| h.gradient(x), dim, &s)
        }
    };
    report.map_err(build)
}

/// `prox_{γf}(x)` printed to 15 decimals with trailing zeros dropped.
pub fn prox(loaded: &Loaded, gamma: f64, point: &str) -> Result<String, CliError> {
    let spec = loaded
        .spec
        .prox
        .as_ref()
        .ok_or_else(|| loaded.error_at("version", "`prox` needs a `prox` section"))?;
    let x = parse_point(point).map_err(|m| CliError {
        file: "--point".into(),
        line: 1,
        column: 1,
        message: m,
    })?;
    if let Some(d) = loaded.spec.dim {
        if d != x.len() {
            return Err(loaded.error_at("dim", format!("dimension mismatch: `dim` is {d} but the point has {} entries", x.len())));
        }
    }
    let f = spec.build().map_err(|e| loaded.core_error("prox", e))?;
    let p = f.prox(gamma, &x).map_err(|e| CliError {
        file: loaded.path.display().to_string(),
        line: 1,
        column: 1,
        message: e.to_string(),
    })?;
    Ok(p.iter().map(|&t| format_entry(t)).collect::<Vec<_>>().join(","))
}

pub fn parse_point(s: &str) -> Result<Vector, String> {
    let entries = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad entry `{t}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    proxkit::linalg::vector(&entries).map_err(|e| e.to_string())
}

pub fn format_entry(t: f64) -> String {
    let s = format!("{t:.15}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_are_trimmed() {
        assert_eq!(format_entry(1.0), "1");
        assert_eq!(format_entry(-0.0), "0");
        assert_eq!(format_entry(-1e-17), "0");
        assert_eq!(format_entry(0.25), "0.25");
        assert_eq!(format_entry(-2.5), "-2.5");
        assert_eq!(format_entry(1.0 / 3.0), "0.333333333333333");
    }

    #[test]
    fn points_parse() {
        assert_eq!(parse_point("2,-0.5").unwrap().as_slice(), &[2.0, -0.5]);
        assert!(parse_point("2,,1").is_err());
        assert!(parse_point("nan").is_err());
    }

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(number(0.1), "1.0000000000000001e-1");
        assert_eq!(number(3.0), "3.0000000000000000e0");
    }
}
