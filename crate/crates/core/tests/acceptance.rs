//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use proxkit::linalg::{solve, LinOp, Matrix, Vector};
use proxkit::monotone::{
    displacement_resolvent, inverse_op, make_lagrangian_operator, make_pd_operator, partial_inverse,
    saddle_operator_linear, MonotoneOp, QuadraticLagrangian, SaddleSpec,
};
use proxkit::oracle::{
    brute_force_prox, check_cyclically_monotone, check_firmly_nonexpansive, check_identity, GridSpec,
    Report, Sampler,
};
use proxkit::prox::{
    ball_cone_indicator, composite_average, indicator, l1, moreau_complement, norm_plus_cone_indicator,
    parallel_composition, radial, underrelax, zero, CompositeTerm, Phi, ProxFn, Quadratic,
};
use proxkit::sets::ConvexSet;
use proxkit::smooth::SmoothTerm;
use proxkit::solvers::{
    douglas_rachford_map, forward_backward_map, run_douglas_rachford, run_forward_backward,
    run_parallel_projection, run_partial_inverse_method, run_pd_chen, run_pd_composite,
    run_pd_lagrangian, run_ppa, SolverConfig, SolverTrace, Status,
};

type Outcome = Result<String, String>;

const SEED: u64 = 20_240_601;

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

fn m(r: usize, c: usize, d: &[f64]) -> Matrix {
    Matrix::from_row_slice(r, c, d)
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn require(report: &Report, what: &str) -> Result<(), String> {
    if report.passed {
        Ok(())
    } else {
        Err(format!(
            "{what}: {} violation {:.3e} after {} samples, witness {:?}",
            report.predicate, report.max_violation, report.samples, report.witness
        ))
    }
}

fn max_gap(a: &[Vector], b: &[Vector]) -> Result<f64, String> {
    if a.len() != b.len() {
        return Err(format!("trajectory lengths differ: {} vs {}", a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(p, q)| (p - q).amax()).fold(0.0, f64::max))
}

fn spingarn() -> Result<MonotoneOp, String> {
    let a = MonotoneOp::from_linear(m(2, 2, &[1.0, 1.0, 1.0, 2.0])).map_err(fail)?;
    let diag = ConvexSet::subspace(2, &[v(&[1.0, 1.0])]).map_err(fail)?;
    partial_inverse(&a, &diag).map_err(fail)
}

fn skew() -> MonotoneOp {
    MonotoneOp::from_linear(m(2, 2, &[0.0, -1.0, 1.0, 0.0])).expect("skew operator")
}

fn spingarn_regression() -> Outcome {
    let t = spingarn()?;
    let want = m(2, 2, &[3.0, -1.0, 1.0, 3.0]) / 10.0;
    let mut worst = 0.0f64;
    for j in 0..2 {
        let mut e = Vector::zeros(2);
        e[j] = 1.0;
        let col = t.resolvent(1.0, &e).map_err(fail)?;
        for i in 0..2 {
            worst = worst.max((col[i] - want[(i, j)]).abs());
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max entry error {worst:.1e}"))
    } else {
        Err(format!("max entry error {worst:.3e} > 1e-12"))
    }
}

fn moreau_suite() -> Outcome {
    let mut explicit = 0;
    let mut fenchel = 0;
    let mut worst = 0.0f64;
    let mut worst_fy = 0.0f64;
    for e in common::catalog() {
        let dual = match &e.dual {
            Some(d) => {
                explicit += 1;
                d.clone()
            }
            None => moreau_complement(&e.f),
        };
        let s = Sampler::new(SEED, 1000, 5.0);
        for gamma in [0.5, 1.0, 2.0] {
            let (f, d) = (&e.f, &dual);
            let sum = |x: &Vector| Ok(f.prox(gamma, x)? + d.prox(1.0 / gamma, &(x / gamma))? * gamma);
            let r = check_identity(sum, |x: &Vector| Ok(x.clone()), e.dim, &s, 1e-10).map_err(fail)?;
            require(&r, &format!("{} at gamma {gamma}", e.name))?;
            worst = worst.max(r.max_violation);
        }
        // f(p) + f*(x − p) = ⟨p, x − p⟩ ties the prox to the value oracles
        if e.f.has_value() && e.f.has_conjugate_value() {
            fenchel += 1;
            for x in s.points(e.dim) {
                let p = e.f.prox(1.0, &x).map_err(fail)?;
                let u = &x - &p;
                let (a, b, c) = (
                    e.f.value(&p).map_err(fail)?,
                    e.f.conjugate_value(&u).map_err(fail)?,
                    p.dot(&u),
                );
                let dev = (a + b - c).abs() / (1.0 + a.abs() + b.abs() + c.abs());
                if !(dev <= 1e-10) {
                    return Err(format!("{}: Fenchel-Young gap {dev:.3e} at {x:?}", e.name));
                }
                worst_fy = worst_fy.max(dev);
            }
        }
    }
    let total = common::catalog().len();
    Ok(format!(
        "{total} functions ({explicit} against closed-form conjugates), max deviation {worst:.1e}; \
         Fenchel-Young on {fenchel}, max {worst_fy:.1e}"
    ))
}

fn quadratic_lasso_saddle() -> SaddleSpec {
    let q = Quadratic::new(m(1, 1, &[1.0]), Some(v(&[-4.0]))).expect("quadratic");
    SaddleSpec::new(
        l1(1.0).expect("l1"),
        zero(Some(1)),
        SmoothTerm::quadratic(&q, 8.0).expect("smooth"),
        SmoothTerm::zero(Some(1)),
        LinOp::identity(1),
    )
    .expect("saddle")
}

fn monotone_zoo() -> Result<Vec<(&'static str, usize, MonotoneOp)>, String> {
    let psd = m(2, 2, &[1.0, 1.0, 1.0, 2.0]);
    let nonsym = m(2, 2, &[2.0, 1.0, -1.0, 1.0]);
    let linear = MonotoneOp::from_linear(nonsym.clone()).map_err(fail)?;
    let smooth = SmoothTerm::quadratic(&Quadratic::new(psd.clone(), Some(v(&[1.0, -1.0]))).map_err(fail)?, 0.0)
        .map_err(fail)?;
    let a = MonotoneOp::from_linear(psd.clone()).map_err(fail)?;
    let w = douglas_rachford_map(&a, &linear, 0.8);
    let pd = make_pd_operator(&quadratic_lasso_saddle()).map_err(fail)?;
    let lag = make_lagrangian_operator(
        &Quadratic::new(psd, None).map_err(fail)?.prox_fn(),
        &l1(1.0).map_err(fail)?,
        &LinOp::dense(m(1, 2, &[1.0, -2.0])),
    )
    .map_err(fail)?;
    let lin_saddle = saddle_operator_linear(&QuadraticLagrangian {
        p: vec![vec![2.0, 0.0], vec![0.0, 1.0]],
        c: vec![vec![1.0], vec![-1.0]],
        r: vec![vec![0.5]],
        a: Some(vec![1.0, 0.0]),
        b: None,
    })
    .map_err(fail)?;
    Ok(vec![
        ("linear_psd", 2, a),
        ("linear_skew", 2, skew()),
        ("linear_nonsymmetric", 2, linear.clone()),
        ("affine", 2, MonotoneOp::from_affine(nonsym, v(&[1.0, -3.0])).map_err(fail)?),
        ("subdifferential_l1", 2, MonotoneOp::from_prox(&l1(1.0).map_err(fail)?)),
        ("gradient", 2, MonotoneOp::from_gradient(&smooth).map_err(fail)?),
        ("inverse", 2, inverse_op(&linear)),
        ("partial_inverse", 2, spingarn()?),
        ("displacement", 2, displacement_resolvent(2, 0.5, w).map_err(fail)?),
        ("pd_m", 2, pd.m),
        ("pd_b", 2, pd.b),
        ("lagrangian_m", 4, lag.m),
        ("lagrangian_s", 4, lag.s),
        ("saddle_linear", 3, lin_saddle),
    ])
}

fn firm_nonexpansiveness_suite() -> Outcome {
    let s = Sampler::new(SEED + 1, 10_000, 5.0);
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    for e in common::catalog() {
        for gamma in [1.0, 0.4] {
            let r = check_firmly_nonexpansive(|x| e.f.prox(gamma, x), e.dim, &s).map_err(fail)?;
            require(&r, &format!("prox {} at gamma {gamma}", e.name))?;
            worst = worst.max(r.max_violation);
            count += 1;
        }
    }
    for (name, dim, op) in monotone_zoo()? {
        for gamma in [1.0, 0.4] {
            let r = check_firmly_nonexpansive(|x| op.resolvent(gamma, x), dim, &s).map_err(fail)?;
            require(&r, &format!("resolvent {name} at gamma {gamma}"))?;
            worst = worst.max(r.max_violation);
            count += 1;
        }
    }
    Ok(format!("{count} operator/step pairs x 10^4 pairs, max excess {worst:.1e}"))
}

fn negative_class_suite() -> Outcome {
    let budget = 100_000;
    let s = Sampler::new(SEED + 2, budget, 5.0);
    let mut found = Vec::new();
    for (name, op) in [("spingarn", spingarn()?), ("skew resolvent", skew())] {
        let r = check_cyclically_monotone(|x| op.resolvent(1.0, x), 2, 16, &s).map_err(fail)?;
        if r.passed {
            return Err(format!("{name}: no violating cycle in {budget} samples"));
        }
        found.push(format!("{name} after {} cycles", r.samples));
    }
    let pass = Sampler::new(SEED + 3, 20_000, 5.0);
    let catalog = common::catalog();
    for e in &catalog {
        let r = check_cyclically_monotone(|x| e.f.prox(1.0, x), e.dim, 16, &pass).map_err(fail)?;
        require(&r, &format!("prox {}", e.name))?;
    }
    Ok(format!(
        "violations: {}; {} catalog proxes pass 2x10^4 cycles each",
        found.join(", "),
        catalog.len()
    ))
}

fn fixed_length(cfg: SolverConfig, iterations: usize) -> SolverConfig {
    cfg.with_max_iter(iterations).with_tol(f64::MIN_POSITIVE)
}

fn dr_equals_ppa() -> Outcome {
    let a = MonotoneOp::from_linear(m(2, 2, &[2.0, 1.0, 1.0, 1.0])).map_err(fail)?;
    let b = MonotoneOp::from_linear(m(2, 2, &[1.0, -0.5, -0.5, 3.0])).map_err(fail)?;
    let gamma = 0.6;
    let cfg = fixed_length(SolverConfig::default().with_x0(&[4.0, -7.0]), 100);
    let dr = run_douglas_rachford(&a, &b, gamma, &cfg).map_err(fail)?;
    let t = douglas_rachford_map(&a, &b, gamma);
    let c = MonotoneOp::from_resolvent("dr_map", Some(2), move |_, y| t(y));
    let ppa = run_ppa(&c, &cfg.with_gamma(1.0)).map_err(fail)?;
    if dr.iterations() != 100 {
        return Err(format!("ran {} iterations, expected 100", dr.iterations()));
    }
    let gap = max_gap(&dr.auxiliary, &ppa.iterates)?;
    if gap <= 1e-14 {
        Ok(format!("100 iterations, max deviation {gap:.1e}"))
    } else {
        Err(format!("max deviation {gap:.3e} > 1e-14"))
    }
}

fn lasso_operators() -> Result<(MonotoneOp, MonotoneOp), String> {
    let q = Quadratic::new(m(1, 1, &[1.0]), Some(v(&[-4.0]))).map_err(fail)?;
    let b = MonotoneOp::from_gradient(&SmoothTerm::quadratic(&q, 8.0).map_err(fail)?).map_err(fail)?;
    Ok((MonotoneOp::from_prox(&l1(1.0).map_err(fail)?), b))
}

fn fb_equals_relaxed_ppa() -> Outcome {
    let (a, b) = lasso_operators()?;
    let (beta, gamma) = (1.0, 0.05);
    let cfg = fixed_length(SolverConfig::default().with_x0(&[-50.0]).with_gamma(gamma), 100);
    let fb = run_forward_backward(&a, &b, beta, &cfg).map_err(fail)?;
    let alpha = 2.0 / (4.0 - beta * gamma);
    let c = displacement_resolvent(1, alpha, forward_backward_map(&a, &b, gamma)).map_err(fail)?;
    let lambda = 4.0 / (4.0 - beta * gamma);
    let ppa = run_ppa(&c, &cfg.with_gamma(1.0).with_relaxation(lambda)).map_err(fail)?;
    if fb.iterations() != 100 {
        return Err(format!("ran {} iterations, expected 100", fb.iterations()));
    }
    let gap = max_gap(&fb.iterates, &ppa.iterates)?;
    if gap <= 1e-12 {
        Ok(format!("lambda = {lambda:.6}, 100 iterations, max deviation {gap:.1e}"))
    } else {
        Err(format!("max deviation {gap:.3e} > 1e-12"))
    }
}

fn converged(t: &SolverTrace, name: &str) -> Result<(), String> {
    if t.status == Status::Converged {
        Ok(())
    } else {
        Err(format!("{name} stopped with {:?} after {} iterations", t.status, t.iterations()))
    }
}

fn primal_dual_cross_validation() -> Outcome {
    let cfg = SolverConfig::default().with_max_iter(50_000);
    let f = Quadratic::new(m(1, 1, &[1.0]), Some(v(&[-4.0]))).map_err(fail)?.prox_fn();
    let g = l1(1.0).map_err(fail)?;
    let id = LinOp::identity(1);
    let runs = [
        ("composite", run_pd_composite(&quadratic_lasso_saddle(), &cfg).map_err(fail)?),
        ("lagrangian", run_pd_lagrangian(&f, &g, &id, &cfg).map_err(fail)?),
        ("chen", run_pd_chen(&f, &g, &id, &cfg).map_err(fail)?),
    ];
    let mut lasso_err = 0.0f64;
    for (name, t) in &runs {
        converged(t, name)?;
        let err = (t.final_iterate()[0] - 3.0).abs();
        if err > 1e-5 {
            return Err(format!("{name} lasso: |x - 3| = {err:.3e}"));
        }
        lasso_err = lasso_err.max(err);
    }

    // min ½‖x − c‖² s.t. Lx = b, solved by hand as a KKT system
    let c = v(&[2.0, -1.0, 0.5]);
    let lm = m(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, -1.0]);
    let b = v(&[1.0, 2.0]);
    let mut kkt = Matrix::zeros(5, 5);
    kkt.view_mut((0, 0), (3, 3)).copy_from(&Matrix::identity(3, 3));
    kkt.view_mut((0, 3), (3, 2)).copy_from(&lm.transpose());
    kkt.view_mut((3, 0), (2, 3)).copy_from(&lm);
    let mut rhs = Vector::zeros(5);
    rhs.rows_mut(0, 3).copy_from(&c);
    rhs.rows_mut(3, 2).copy_from(&b);
    let sol = solve(&kkt, &rhs).map_err(fail)?;
    let (xs, vs) = (sol.rows(0, 3).into_owned(), sol.rows(3, 2).into_owned());

    let f = Quadratic::new(Matrix::identity(3, 3), Some(-&c)).map_err(fail)?.prox_fn();
    let g = indicator(ConvexSet::singleton(b.clone()));
    let l = LinOp::dense(lm);
    let tight = cfg.clone().with_tol(1e-14);
    let saddle = SaddleSpec::new(f.clone(), g.clone(), SmoothTerm::zero(Some(3)), SmoothTerm::zero(Some(2)), l.clone())
        .map_err(fail)?;
    let runs = [
        ("composite", run_pd_composite(&saddle, &tight).map_err(fail)?),
        ("lagrangian", run_pd_lagrangian(&f, &g, &l, &tight).map_err(fail)?),
        ("chen", run_pd_chen(&f, &g, &l, &tight).map_err(fail)?),
    ];
    let mut kkt_err = 0.0f64;
    for (name, t) in &runs {
        converged(t, name)?;
        let ex = (t.final_iterate() - &xs).amax();
        let ev = (t.final_dual().expect("dual iterates") - &vs).amax();
        if ex.max(ev) > 1e-8 {
            return Err(format!("{name} KKT: primal error {ex:.3e}, dual error {ev:.3e}"));
        }
        kkt_err = kkt_err.max(ex.max(ev));
    }
    Ok(format!("lasso max |x - 3| = {lasso_err:.1e}; constrained quadratic max error {kkt_err:.1e}"))
}

fn partial_inverse_method() -> Outcome {
    // min ½⟨Qx, x⟩ + ⟨b, x⟩ over V = span{(1,0,1), (0,1,1)}
    let q = m(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
    let b = v(&[1.0, -2.0, 0.5]);
    let vspace = ConvexSet::subspace(3, &[v(&[1.0, 0.0, 1.0]), v(&[0.0, 1.0, 1.0])]).map_err(fail)?;
    let f = Quadratic::new(q.clone(), Some(b.clone())).map_err(fail)?.prox_fn();
    let cfg = SolverConfig::default().with_x0(&[1.0, 1.0, 1.0]).with_max_iter(100_000).with_tol(1e-14);
    let t = run_partial_inverse_method(&f, &vspace, &cfg).map_err(fail)?;
    converged(&t, "partial inverse method")?;

    // KKT: Qx + b + nλ = 0, ⟨n, x⟩ = 0 with n = (1, 1, −1) spanning V⊥
    let n = v(&[1.0, 1.0, -1.0]);
    let mut kkt = Matrix::zeros(4, 4);
    kkt.view_mut((0, 0), (3, 3)).copy_from(&q);
    kkt.view_mut((0, 3), (3, 1)).copy_from(&n);
    kkt.view_mut((3, 0), (1, 3)).copy_from(&n.transpose());
    let mut rhs = Vector::zeros(4);
    rhs.rows_mut(0, 3).copy_from(&-&b);
    let sol = solve(&kkt, &rhs).map_err(fail)?;
    let x = sol.rows(0, 3).into_owned();
    let u = &n * -sol[3];
    let ex = (t.final_iterate() - &x).amax();
    let eu = (t.final_dual().expect("dual iterates") - &u).amax();
    if ex.max(eu) <= 1e-8 {
        Ok(format!("{} iterations, primal error {ex:.1e}, dual error {eu:.1e}", t.iterations()))
    } else {
        Err(format!("primal error {ex:.3e}, dual error {eu:.3e}"))
    }
}

/// Half-width of the grid oracle's box around the origin; samples are drawn
/// from the same ball, so every tested prox (all fix the origin) lands
/// inside. Anchoring the lattice at the origin keeps the kinks of the tested
/// functions (cone faces, the origin itself) on grid lines.
const GRID_WIDTH: f64 = 0.1;

/// Next to a kink the grid argmin can sit several steps away from the true
/// minimizer along a nearly flat direction, so the oracle refines until its
/// step is 1e-8 (1e-10 on the cheap one-dimensional grids), well below the
/// tolerance.
fn grid(dim: usize) -> GridSpec {
    let target = if dim == 1 { 1e-10 } else { 1e-8 };
    GridSpec::new(GRID_WIDTH).centered(Vector::zeros(dim)).with_target_step(target)
}

fn grid_identity(name: &str, f: &ProxFn, value: impl Fn(&Vector) -> f64, log: &mut Vec<String>) -> Result<(), String> {
    grid_identity_in(name, 2, f, value, log)
}

fn grid_identity_in(
    name: &str,
    dim: usize,
    f: &ProxFn,
    value: impl Fn(&Vector) -> f64,
    log: &mut Vec<String>,
) -> Result<(), String> {
    let s = Sampler::new(SEED + 4, 40, GRID_WIDTH);
    let r = check_identity(
        |x| f.prox(1.0, x),
        |x| brute_force_prox(|y| Ok(value(y)), 1.0, x, &grid(dim)),
        dim,
        &s,
        1e-6,
    )
    .map_err(fail)?;
    require(&r, name)?;
    log.push(format!("{name} {:.0e}", r.max_violation));
    Ok(())
}

fn algebraic_identity(
    name: &str,
    dim: usize,
    t1: impl Fn(&Vector) -> proxkit::Result<Vector>,
    t2: impl Fn(&Vector) -> proxkit::Result<Vector>,
    log: &mut Vec<String>,
) -> Result<(), String> {
    let s = Sampler::new(SEED + 5, 1000, 5.0);
    let r = check_identity(t1, t2, dim, &s, 1e-10).map_err(fail)?;
    require(&r, name)?;
    log.push(format!("{name} {:.0e}", r.max_violation));
    Ok(())
}

fn identity_battery() -> Outcome {
    let mut log = Vec::new();
    let inf = f64::INFINITY;
    let orthant = ConvexSet::nonneg_orthant(2);
    let in_orthant = |y: &Vector| y.iter().all(|t| *t >= 0.0);

    // norm plus cone indicator: scaled projection onto the cone
    let w = 0.04;
    let ecp = norm_plus_cone_indicator(w, orthant.clone()).map_err(fail)?;
    grid_identity("ecp/grid", &ecp, |y| if in_orthant(y) { w * y.norm() } else { inf }, &mut log)?;
    let soc = ConvexSet::from_spec(&proxkit::SetSpec::Soc { dim: 3 }).map_err(fail)?;
    let ecp3 = norm_plus_cone_indicator(w, soc.clone()).map_err(fail)?;
    let soc2 = soc.clone();
    algebraic_identity(
        "ecp/closed-form",
        3,
        |x| ecp3.prox(2.0, x),
        move |x| {
            let p = soc2.project(x)?;
            let n = p.norm();
            Ok(if n > 2.0 * w { &p * ((n - 2.0 * w) / n) } else { p * 0.0 })
        },
        &mut log,
    )?;

    // ball ∩ cone: project on the cone, then on the ball
    let r = 0.06;
    let ecp7 = ball_cone_indicator(r, ConvexSet::nonneg_orthant(1)).map_err(fail)?;
    grid_identity_in("ecp7/grid-1d", 1, &ecp7, |y| if y[0] >= 0.0 && y[0] <= r { 0.0 } else { inf }, &mut log)?;
    let ball = ConvexSet::ball(Vector::zeros(3), 1.5).map_err(fail)?;
    let ecp7b = ball_cone_indicator(1.5, soc.clone()).map_err(fail)?;
    algebraic_identity(
        "ecp7/composition",
        3,
        |x| ecp7b.prox(1.0, x),
        |x| ball.project(&soc.project(x)?),
        &mut log,
    )?;

    // radial functions φ∘‖·‖: against the scalar prox of φ applied to ‖x‖
    // (grid in one dimension), and against the full 2-D grid where φ has no
    // kink away from the origin
    let phis: [(&str, Phi, fn(f64) -> f64, bool); 4] = [
        ("radial/abs", Phi::Abs { weight: 0.06 }, |t| 0.06 * t.abs(), true),
        ("radial/square", Phi::Square { weight: 2.0 }, |t| t * t, true),
        (
            "radial/interval",
            Phi::Interval { radius: 0.04 },
            |t| if t.abs() <= 0.04 { 0.0 } else { f64::INFINITY },
            false,
        ),
        (
            "radial/deadzone",
            Phi::Deadzone { weight: 0.1, radius: 0.02 },
            |t| 0.1 * (t.abs() - 0.02).max(0.0),
            false,
        ),
    ];
    for (name, phi, value, full_grid) in phis {
        let f = radial(phi).map_err(fail)?;
        let s = Sampler::new(SEED + 6, 200, GRID_WIDTH);
        let scalar = |x: &Vector| -> proxkit::Result<Vector> {
            let n = x.norm();
            if n == 0.0 {
                return Ok(x.clone());
            }
            let t = brute_force_prox(|y| Ok(value(y[0])), 1.0, &v(&[n]), &grid(1))?;
            Ok(x * (t[0] / n))
        };
        let r = check_identity(|x| f.prox(1.0, x), scalar, 2, &s, 1e-6).map_err(fail)?;
        require(&r, name)?;
        log.push(format!("{name}/scalar {:.0e}", r.max_violation));
        if full_grid {
            grid_identity(&format!("{name}/grid"), &f, |y| value(y.norm()), &mut log)?;
        }
    }
    let disk = radial(Phi::Interval { radius: 0.04 }).map_err(fail)?;
    let ball = ConvexSet::ball(Vector::zeros(2), 0.04).map_err(fail)?;
    algebraic_identity("radial/interval-projection", 2, |x| disk.prox(1.0, x), |x| ball.project(x), &mut log)?;

    // under-relaxation: prox of λ·env_{1−λ}h, with h = a‖·‖₁ (Huber envelope)
    let (lambda, a) = (0.5, 0.08);
    let ur = underrelax(&l1(a).map_err(fail)?, lambda).map_err(fail)?;
    let mu = 1.0 - lambda;
    let huber = move |t: f64| {
        if t.abs() <= a * mu {
            t * t / (2.0 * mu)
        } else {
            a * t.abs() - a * a * mu / 2.0
        }
    };
    grid_identity("underrelax/grid", &ur, |y| lambda * y.iter().map(|t| huber(*t)).sum::<f64>(), &mut log)?;
    // for an indicator the literal form λ/(1−λ)·d²_C/2 coincides with it
    let c = ConvexSet::ball(v(&[1.0, -1.0]), 1.0).map_err(fail)?;
    let ur_ind = underrelax(&indicator(c.clone()), 0.3).map_err(fail)?;
    let kappa = 0.3 / 0.7;
    for gamma in [1.0, 2.5] {
        let c = c.clone();
        algebraic_identity(
            &format!("underrelax/indicator gamma={gamma}"),
            2,
            |x| ur_ind.prox(gamma, x),
            move |x| Ok(x + (c.project(x)? - x) * (gamma * kappa / (1.0 + gamma * kappa))),
            &mut log,
        )?;
    }

    // quadratic parallel composition against (M(Id + Q)M*)⁻¹(x − Mb)
    let mm = m(2, 2, &[2.0, 0.0, 1.0, 1.5]);
    let quad = Quadratic::new(m(2, 2, &[2.0, 1.0, 1.0, 1.0]), Some(v(&[1.0, 0.0]))).map_err(fail)?;
    let pc = parallel_composition(&LinOp::dense(mm.clone()), &quad).map_err(fail)?;
    let op = &mm * (quad.q() + Matrix::identity(2, 2)) * mm.transpose();
    let shift = &mm * quad.b();
    algebraic_identity(
        "parallel_composition/defining-operator",
        2,
        |x| pc.prox(1.0, x),
        |x| solve(&op, &(x - &shift)),
        &mut log,
    )?;
    // without the linear term the composition fixes the origin
    let quad0 = Quadratic::new(quad.q().clone(), None).map_err(fail)?;
    let pc0 = parallel_composition(&LinOp::dense(mm.clone()), &quad0).map_err(fail)?;
    let p0 = &mm * (quad.q() + Matrix::identity(2, 2)) * mm.transpose() - Matrix::identity(2, 2);
    grid_identity("parallel_composition/grid", &pc0, move |y| 0.5 * y.dot(&(&p0 * y)), &mut log)?;
    Ok(log.join(", "))
}

fn parallel_projection_equivalence() -> Outcome {
    let sets = vec![
        ConvexSet::from_spec(&proxkit::SetSpec::Halfspace { normal: vec![1.0, 2.0], offset: 1.0 }).map_err(fail)?,
        ConvexSet::ball(v(&[3.0, 0.0]), 1.0).map_err(fail)?,
        ConvexSet::from_spec(&proxkit::SetSpec::Hyperplane { normal: vec![1.0, -1.0], offset: 4.0 })
            .map_err(fail)?,
    ];
    let weights = [0.5, 0.3, 0.2];
    let lambda = 1.6;
    let cfg = fixed_length(SolverConfig::default().with_x0(&[-6.0, 5.0]).with_relaxation(lambda), 100);
    let pp = run_parallel_projection(&sets, &weights, &cfg).map_err(fail)?;
    let avg = composite_average(
        sets.iter()
            .zip(weights)
            .map(|(c, w)| CompositeTerm {
                weight: w,
                op: LinOp::identity(2),
                inner: indicator(c.clone()),
            })
            .collect(),
    )
    .map_err(fail)?;
    let ppa = run_ppa(&MonotoneOp::from_prox(&avg), &cfg.with_gamma(1.0)).map_err(fail)?;
    let gap = max_gap(&pp.iterates, &ppa.iterates)?;
    if gap <= 1e-12 {
        Ok(format!("{} iterations, max deviation {gap:.1e}", pp.iterations()))
    } else {
        Err(format!("max deviation {gap:.3e} > 1e-12"))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Spingarn partial-inverse regression", spingarn_regression),
        ("Moreau decomposition suite", moreau_suite),
        ("Firm nonexpansiveness suite", firm_nonexpansiveness_suite),
        ("Negative-class (cyclic monotonicity) suite", negative_class_suite),
        ("Douglas-Rachford equals PPA on its governing map", dr_equals_ppa),
        ("Forward-backward equals relaxed PPA", fb_equals_relaxed_ppa),
        ("Primal-dual cross-validation", primal_dual_cross_validation),
        ("Partial inverse method versus KKT", partial_inverse_method),
        ("Identity battery", identity_battery),
        ("Parallel projection equals PPA on composite average", parallel_projection_equivalence),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2}. {name} — {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] {:>2}. {name} — {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
