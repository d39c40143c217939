//! Embedded solver: structural LP detection backed by a dense revised
//! simplex, and a two-phase Polyak subgradient method with level bisection
//! for everything else. Desk-scale by design; deterministic by construction.

pub mod compile;
mod eval;
mod firstorder;
pub(crate) mod simplex;

pub use compile::{compile, compile_probe, Compiled, CompileError, T_FLOOR};
pub use firstorder::{FoOutcome, FoStatus};

use crate::ext::{ExtReal, Finite, NegInf, PosInf, Tolerances};
use crate::program::{FiniteConvexProgram, Sense};
use compile::ArgRow;
use firstorder::FoParams;
use simplex::{solve_std, LpOutcome, StdLp};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    EpsOptimal,
    Unbounded,
    Infeasible,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Values of the program's variables (auxiliaries stripped).
    pub x: Vec<f64>,
    /// Sense-adjusted objective value.
    pub objective: ExtReal,
    pub status: SolveStatus,
    /// Feasibility residual plus the optimality-bracket width where the
    /// first-order path ran; simplex reports the feasibility residual.
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Magnitude treated as numerically unbounded.
    pub cap: f64,
    /// Trusted lower bound on the min-form objective (weak-duality partner).
    pub lower_hint: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 200_000,
            cap: 1e10,
            lower_hint: None,
        }
    }
}

/// Outcome of a run on an already-compiled problem (min form).
#[derive(Debug, Clone)]
pub(crate) struct RunResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub viol: f64,
    pub bracket: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

pub fn solve(p: &FiniteConvexProgram, tol: &Tolerances) -> Result<Solution, SolverError> {
    solve_with(p, tol, &SolverOptions::default())
}

pub fn solve_with(
    p: &FiniteConvexProgram,
    tol: &Tolerances,
    opts: &SolverOptions,
) -> Result<Solution, SolverError> {
    let compiled = compile(p)?;
    let run = run_compiled(&compiled, tol, opts);
    let objective = match run.status {
        SolveStatus::Infeasible => match p.sense {
            Sense::Min => PosInf,
            Sense::Max => NegInf,
        },
        SolveStatus::Unbounded => match p.sense {
            Sense::Min => NegInf,
            Sense::Max => PosInf,
        },
        _ => match p.sense {
            Sense::Min => Finite(run.value),
            Sense::Max => Finite(-run.value),
        },
    };
    Ok(Solution {
        x: run.x[..compiled.orig_n.min(run.x.len())].to_vec(),
        objective,
        status: run.status,
        kkt_residual: run.viol + if run.bracket.is_finite() { run.bracket } else { 0.0 },
        iterations: run.iterations,
    })
}

pub(crate) fn run_compiled(c: &Compiled, tol: &Tolerances, opts: &SolverOptions) -> RunResult {
    if c.infeasible_by_presolve {
        return RunResult {
            x: c.fixed_point(),
            value: f64::INFINITY,
            viol: f64::INFINITY,
            bracket: 0.0,
            status: SolveStatus::Infeasible,
            iterations: 0,
        };
    }
    if c.all_fixed() {
        let x = c.fixed_point();
        let viol = c.violation(&x);
        let bad = viol > tol.feas;
        return RunResult {
            value: if bad { f64::INFINITY } else { c.obj.value(&x) },
            viol,
            bracket: 0.0,
            status: if bad {
                SolveStatus::Infeasible
            } else {
                SolveStatus::Optimal
            },
            iterations: 0,
            x,
        };
    }
    if c.is_lp() {
        return lp_path(c, opts);
    }
    let fo = firstorder::minimize(
        c,
        &FoParams {
            feas_tol: tol.feas,
            opt_tol: tol.opt,
            max_iter: opts.max_iter,
            cap: opts.cap,
            lower_hint: opts.lower_hint,
        },
    );
    RunResult {
        value: fo.value,
        viol: fo.viol,
        bracket: fo.bracket,
        status: match fo.status {
            FoStatus::Converged => SolveStatus::Optimal,
            FoStatus::EpsConverged => SolveStatus::EpsOptimal,
            FoStatus::Unbounded => SolveStatus::Unbounded,
            FoStatus::Infeasible => SolveStatus::Infeasible,
            FoStatus::Stalled => SolveStatus::Stalled,
        },
        iterations: fo.iterations,
        x: fo.x,
    }
}

/// Solve a weak-duality pair (`min_prog` upper side, `max_prog` lower side)
/// and let each side's value refine the other's Polyak target. Returns the
/// two solutions; the pair gap is an honest mutual certificate.
pub fn solve_pair(
    min_prog: &FiniteConvexProgram,
    max_prog: &FiniteConvexProgram,
    tol: &Tolerances,
) -> Result<(Solution, Solution), SolverError> {
    let base = SolverOptions::default();
    let mut s_min = solve_with(min_prog, tol, &base)?;
    let mut s_max = solve_with(max_prog, tol, &base)?;
    for _ in 0..2 {
        let (Finite(a), Finite(b)) = (s_min.objective, s_max.objective) else {
            break;
        };
        if (a - b).abs() <= tol.opt {
            break;
        }
        // the max side's value lower-bounds the min side
        let hinted = SolverOptions {
            lower_hint: Some(b - tol.opt),
            ..base
        };
        let cand = solve_with(min_prog, tol, &hinted)?;
        if matches!(cand.status, SolveStatus::Optimal | SolveStatus::EpsOptimal)
            && cand.objective.as_f64() <= s_min.objective.as_f64()
        {
            s_min = cand;
        }
        let Finite(a2) = s_min.objective else { break };
        // the min side's value upper-bounds the max side: in min form the
        // stored objective of the max program is bounded below by -a2
        let hinted = SolverOptions {
            lower_hint: Some(-a2 - tol.opt),
            ..base
        };
        let cand = solve_with(max_prog, tol, &hinted)?;
        if matches!(cand.status, SolveStatus::Optimal | SolveStatus::EpsOptimal)
            && cand.objective.as_f64() >= s_max.objective.as_f64()
        {
            s_max = cand;
        }
    }
    Ok((s_min, s_max))
}

// ---- LP path ----

#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// `x = lo + y[k]`
    Shift { k: usize, lo: f64 },
    /// `x = hi - y[k]`
    Neg { k: usize, hi: f64 },
    /// `x = y[kp] - y[kn]`
    Split { kp: usize, kn: usize },
    Fixed(f64),
}

fn lp_path(c: &Compiled, opts: &SolverOptions) -> RunResult {
    // build the standard-form LP
    let mut maps: Vec<ColMap> = Vec::with_capacity(c.n);
    let mut ncols = 0usize;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new(); // y[k] <= ub rows
    for i in 0..c.n {
        if let Some(v) = c.fixed[i] {
            maps.push(ColMap::Fixed(v));
            continue;
        }
        let (lo, hi) = (c.lo[i], c.hi[i]);
        if lo.is_finite() {
            let k = ncols;
            ncols += 1;
            maps.push(ColMap::Shift { k, lo });
            if hi.is_finite() {
                extra_rows.push((k, hi - lo));
            }
        } else if hi.is_finite() {
            let k = ncols;
            ncols += 1;
            maps.push(ColMap::Neg { k, hi });
        } else {
            let kp = ncols;
            let kn = ncols + 1;
            ncols += 2;
            maps.push(ColMap::Split { kp, kn });
        }
    }

    struct RowAcc {
        coefs: Vec<(usize, f64)>,
        rhs: f64,
    }
    let mut rows: Vec<RowAcc> = Vec::new();
    let add_row = |row: &ArgRow, rhs: f64, maps: &Vec<ColMap>| -> RowAcc {
        let mut acc = RowAcc {
            coefs: Vec::new(),
            rhs: rhs - row.c,
        };
        for &(i, a) in &row.lin {
            match maps[i] {
                ColMap::Fixed(v) => acc.rhs -= a * v,
                ColMap::Shift { k, lo } => {
                    acc.coefs.push((k, a));
                    acc.rhs -= a * lo;
                }
                ColMap::Neg { k, hi } => {
                    acc.coefs.push((k, -a));
                    acc.rhs -= a * hi;
                }
                ColMap::Split { kp, kn } => {
                    acc.coefs.push((kp, a));
                    acc.coefs.push((kn, -a));
                }
            }
        }
        acc
    };

    for (row, rhs) in &c.eq {
        rows.push(add_row(row, *rhs, &maps));
    }
    let mut slack_of_row: Vec<Option<usize>> = vec![None; c.eq.len()];
    for con in &c.ineq {
        let mut acc = add_row(&con.sum.lin, 0.0, &maps);
        let s = ncols;
        ncols += 1;
        acc.coefs.push((s, 1.0));
        rows.push(acc);
        slack_of_row.push(Some(s));
    }
    for (k, ub) in &extra_rows {
        let s = ncols;
        ncols += 1;
        rows.push(RowAcc {
            coefs: vec![(*k, 1.0), (s, 1.0)],
            rhs: *ub,
        });
        slack_of_row.push(Some(s));
    }

    let m = rows.len();
    let mut cols = vec![vec![0.0; m]; ncols];
    let mut b = vec![0.0; m];
    for (r, acc) in rows.iter().enumerate() {
        b[r] = acc.rhs;
        for &(k, a) in &acc.coefs {
            cols[k][r] += a;
        }
    }
    let mut cost = vec![0.0; ncols];
    let mut const_off = c.obj.lin.c;
    for &(i, a) in &c.obj.lin.lin {
        match maps[i] {
            ColMap::Fixed(v) => const_off += a * v,
            ColMap::Shift { k, lo } => {
                cost[k] += a;
                const_off += a * lo;
            }
            ColMap::Neg { k, hi } => {
                cost[k] -= a;
                const_off += a * hi;
            }
            ColMap::Split { kp, kn } => {
                cost[kp] += a;
                cost[kn] -= a;
            }
        }
    }

    let lp = StdLp {
        m,
        n: ncols,
        cols,
        b,
        c: cost,
    };
    let back = |y: &[f64]| -> Vec<f64> {
        maps.iter()
            .map(|mp| match *mp {
                ColMap::Fixed(v) => v,
                ColMap::Shift { k, lo } => lo + y[k],
                ColMap::Neg { k, hi } => hi - y[k],
                ColMap::Split { kp, kn } => y[kp] - y[kn],
            })
            .collect()
    };
    let ray_back = |ray: &[f64]| -> Vec<f64> {
        maps.iter()
            .map(|mp| match *mp {
                ColMap::Fixed(_) => 0.0,
                ColMap::Shift { k, .. } => ray[k],
                ColMap::Neg { k, .. } => -ray[k],
                ColMap::Split { kp, kn } => ray[kp] - ray[kn],
            })
            .collect()
    };

    match solve_std(&lp, opts.max_iter.max(2000)) {
        LpOutcome::Optimal { y, value } => {
            let x = back(&y);
            let viol = c.violation(&x);
            RunResult {
                value: value + const_off,
                viol,
                bracket: 0.0,
                status: if viol <= 1e-6 {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::Stalled
                },
                iterations: 0,
                x,
            }
        }
        LpOutcome::Unbounded { y, ray } => {
            let x = back(&y);
            RunResult {
                value: f64::NEG_INFINITY,
                viol: c.violation(&x),
                bracket: f64::INFINITY,
                status: SolveStatus::Unbounded,
                iterations: 0,
                x: {
                    // store the certified ray after the point for callers that
                    // need it via `lp_unbounded_ray`
                    let mut xx = x;
                    xx.extend(ray_back(&ray));
                    xx
                },
            }
        }
        LpOutcome::Infeasible => RunResult {
            x: c.fixed_point(),
            value: f64::INFINITY,
            viol: f64::INFINITY,
            bracket: 0.0,
            status: SolveStatus::Infeasible,
            iterations: 0,
        },
    }
}

// ---- feasibility / Slater / unboundedness probes ----

#[derive(Debug, Clone)]
pub enum Feasibility {
    /// A point with the achieved minimum slack over the inequality rows.
    Point { x: Vec<f64>, slack: f64 },
    Infeasible,
    Inconclusive,
}

/// Phase-1 max-min-slack: maximize `s` with every inequality shifted by `s`.
pub fn feasibility(p: &FiniteConvexProgram, tol: &Tolerances) -> Result<Feasibility, SolverError> {
    let compiled = compile_probe(p)?;
    Ok(max_min_slack_compiled(
        &compiled,
        tol,
        &SolverOptions::default(),
        false,
        &[],
    ))
}

/// Slater search over a program: maximize the minimum slack of nonlinear
/// rows subject to the rest; `positive_coords` may additionally be required
/// to exceed the slack (used for multiplier-positivity Slater points).
pub fn slater_search_program(
    p: &FiniteConvexProgram,
    tol: &Tolerances,
    nonlinear_only: bool,
    positive_coords: &[usize],
) -> Result<Feasibility, SolverError> {
    let compiled = compile_probe(p)?;
    Ok(max_min_slack_compiled(
        &compiled,
        tol,
        &SolverOptions::default(),
        nonlinear_only,
        positive_coords,
    ))
}

pub(crate) fn max_min_slack_compiled(
    c: &Compiled,
    tol: &Tolerances,
    opts: &SolverOptions,
    nonlinear_only: bool,
    positive_coords: &[usize],
) -> Feasibility {
    if c.infeasible_by_presolve {
        return Feasibility::Infeasible;
    }
    let mut aug = clone_compiled(c);
    let s = new_free_var(&mut aug);
    for con in aug.ineq.iter_mut() {
        if con.is_main && (!nonlinear_only || con.from_nonlinear) {
            con.sum.lin.push(s, 1.0);
        }
    }
    // slack under the bound gap for box-style bounds when maximizing strictly
    for &i in positive_coords {
        // s - x_i <= 0
        let mut row = ArgRow::default();
        row.push(s, 1.0);
        row.push(i, -1.0);
        aug.ineq.push(compile::CompiledCon {
            sum: compile::CompiledSum {
                lin: row,
                gens: vec![],
            },
            from_nonlinear: false,
            is_main: false,
            label: "positivity".into(),
        });
    }
    // cap s so the LP never reports unbounded margins
    aug.hi[s] = 1e6;
    aug.obj = compile::CompiledSum::default();
    aug.obj.lin.push(s, -1.0);
    let run = run_compiled(&aug, tol, opts);
    match run.status {
        SolveStatus::Infeasible => Feasibility::Infeasible,
        SolveStatus::Optimal | SolveStatus::EpsOptimal => {
            // classification is purely slack-banded: strictly positive means
            // a certified interior point, strictly negative means numerically
            // infeasible, the band in between stays inconclusive
            let slack = run.x.get(s).copied().unwrap_or(-run.value);
            let x = run.x[..c.orig_n.min(run.x.len())].to_vec();
            if slack > tol.feas {
                Feasibility::Point { x, slack }
            } else if slack < -tol.feas {
                Feasibility::Infeasible
            } else {
                Feasibility::Inconclusive
            }
        }
        SolveStatus::Unbounded => Feasibility::Point {
            x: run.x[..c.orig_n.min(run.x.len())].to_vec(),
            slack: 1e6,
        },
        SolveStatus::Stalled => Feasibility::Inconclusive,
    }
}

fn clone_compiled(c: &Compiled) -> Compiled {
    Compiled {
        n: c.n,
        orig_n: c.orig_n,
        lo: c.lo.clone(),
        hi: c.hi.clone(),
        eq: c.eq.clone(),
        ineq: c.ineq.clone(),
        obj: c.obj.clone(),
        soc: c.soc.clone(),
        fixed: c.fixed.clone(),
        infeasible_by_presolve: c.infeasible_by_presolve,
    }
}

fn new_free_var(c: &mut Compiled) -> usize {
    let i = c.n;
    c.n += 1;
    c.lo.push(f64::NEG_INFINITY);
    c.hi.push(f64::INFINITY);
    c.fixed.push(None);
    i
}

#[derive(Debug, Clone)]
pub enum Boundedness {
    Bounded,
    Unbounded { ray: Vec<f64> },
    Inconclusive,
}

/// Ray probe: maximize each coordinate up to `cap`; a capped optimum whose
/// direction passes the recession test certifies unboundedness.
pub fn unboundedness_probe(
    p: &FiniteConvexProgram,
    cap: f64,
    tol: &Tolerances,
) -> Result<Boundedness, SolverError> {
    let compiled = compile(p)?;
    Ok(unboundedness_probe_compiled(&compiled, cap, tol))
}

pub(crate) fn unboundedness_probe_compiled(
    c: &Compiled,
    cap: f64,
    tol: &Tolerances,
) -> Boundedness {
    let opts = SolverOptions {
        max_iter: 40_000,
        cap: cap * 10.0,
        lower_hint: None,
    };
    let mut inconclusive = false;
    for i in 0..c.n {
        if c.fixed[i].is_some() {
            continue;
        }
        for sign in [1.0f64, -1.0] {
            // skip directions excluded by bounds
            if sign > 0.0 && c.hi[i].is_finite() {
                continue;
            }
            if sign < 0.0 && c.lo[i].is_finite() {
                continue;
            }
            let mut aug = clone_compiled(c);
            aug.obj = compile::CompiledSum::default();
            aug.obj.lin.push(i, -sign);
            // stay below the cap so the run terminates
            if sign > 0.0 {
                aug.hi[i] = cap;
            } else {
                aug.lo[i] = -cap;
            }
            let run = run_compiled(&aug, tol, &opts);
            match run.status {
                SolveStatus::Infeasible => return Boundedness::Inconclusive,
                SolveStatus::Unbounded => inconclusive = true,
                SolveStatus::Optimal | SolveStatus::EpsOptimal | SolveStatus::Stalled => {
                    let reach = run.x.get(i).copied().unwrap_or(0.0) * sign;
                    if reach >= cap * 0.99 {
                        // candidate ray: difference from a mild interior solve
                        let mut base = clone_compiled(c);
                        base.obj = aug.obj.clone();
                        if sign > 0.0 {
                            base.hi[i] = cap * 0.5;
                        } else {
                            base.lo[i] = -cap * 0.5;
                        }
                        let rb = run_compiled(&base, tol, &opts);
                        let mut d: Vec<f64> = run
                            .x
                            .iter()
                            .zip(rb.x.iter().chain(std::iter::repeat(&0.0)))
                            .map(|(a, b)| a - b)
                            .collect();
                        d.resize(c.n, 0.0);
                        let norm: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm > 1e-9 {
                            for v in d.iter_mut() {
                                *v /= norm;
                            }
                            if c.is_recession_direction(&d, 1e-7) {
                                return Boundedness::Unbounded { ray: d };
                            }
                        }
                        inconclusive = true;
                    }
                }
            }
        }
    }
    if inconclusive {
        Boundedness::Inconclusive
    } else {
        Boundedness::Bounded
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::FunctionExpr;
    use crate::program::{ConstraintSum, Term, VarCone};

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn lp_min_x_subject_to_x_ge_1() {
        let mut p = FiniteConvexProgram::new("lp", Sense::Min);
        let x = p.add_block("x", 1, VarCone::Free);
        p.objective
            .push(Term::new(FunctionExpr::affine(vec![1.0], 0.0), x.clone()));
        p.constraints.push(ConstraintSum {
            label: "x >= 1".into(),
            terms: vec![Term::new(FunctionExpr::affine(vec![-1.0], 1.0), x)],
            constant: 0.0,
            nonlinear: false,
        });
        let s = solve(&p, &tols()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective.as_f64() - 1.0).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn qp_like_first_order() {
        // min (x-2)^2 s.t. x <= 1  -> x = 1, value 1
        let mut p = FiniteConvexProgram::new("qp", Sense::Min);
        let x = p.add_block("x", 1, VarCone::Free);
        let sq = FunctionExpr::affine_precompose(
            FunctionExpr::norm_power(2.0, 1.0, crate::expr::Norm::L2, 1).unwrap(),
            crate::linalg::Mat::identity(1),
            vec![-2.0],
        )
        .unwrap();
        p.objective.push(Term::new(sq, x.clone()));
        p.constraints.push(ConstraintSum {
            label: "x <= 1".into(),
            terms: vec![Term::new(FunctionExpr::affine(vec![1.0], -1.0), x)],
            constant: 0.0,
            nonlinear: false,
        });
        let s = solve(&p, &tols()).unwrap();
        assert!(
            (s.objective.as_f64() - 1.0).abs() < 1e-4,
            "value {:?} status {:?}",
            s.objective,
            s.status
        );
    }

    #[test]
    fn infeasible_program() {
        // z <= 0 and z >= 1
        let mut p = FiniteConvexProgram::new("inf", Sense::Min);
        let z = p.add_block("z", 1, VarCone::Free);
        p.objective
            .push(Term::new(FunctionExpr::affine(vec![1.0], 0.0), z.clone()));
        p.constraints.push(ConstraintSum {
            label: "z <= 0".into(),
            terms: vec![Term::new(FunctionExpr::affine(vec![1.0], 0.0), z.clone())],
            constant: 0.0,
            nonlinear: false,
        });
        p.constraints.push(ConstraintSum {
            label: "z >= 1".into(),
            terms: vec![Term::new(FunctionExpr::affine(vec![-1.0], 1.0), z)],
            constant: 0.0,
            nonlinear: false,
        });
        let s = solve(&p, &tols()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_halfline() {
        // max x s.t. x >= 0 (free above)
        let mut p = FiniteConvexProgram::new("ray", Sense::Max);
        let x = p.add_block("x", 1, VarCone::Nonneg);
        // stored min-form: minimize -x
        p.objective
            .push(Term::new(FunctionExpr::affine(vec![-1.0], 0.0), x));
        let s = solve(&p, &tols()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
        assert!(s.objective.is_pos_inf());
        let probe = unboundedness_probe(&p, 1e6, &tols()).unwrap();
        match probe {
            Boundedness::Unbounded { ray } => assert!(ray[0] > 0.9),
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn feasibility_box() {
        let mut p = FiniteConvexProgram::new("box", Sense::Min);
        let z = p.add_block("z", 1, VarCone::Free);
        p.objective
            .push(Term::new(FunctionExpr::affine(vec![0.0], 0.0), z.clone()));
        p.constraints.push(ConstraintSum {
            label: "z <= 1".into(),
            terms: vec![Term::new(FunctionExpr::affine(vec![1.0], -1.0), z.clone())],
            constant: 0.0,
            nonlinear: false,
        });
        p.constraints.push(ConstraintSum {
            label: "z >= 0".into(),
            terms: vec![Term::new(FunctionExpr::affine(vec![-1.0], 0.0), z)],
            constant: 0.0,
            nonlinear: false,
        });
        match feasibility(&p, &tols()).unwrap() {
            Feasibility::Point { x, slack } => {
                assert!((x[0] - 0.5).abs() < 1e-6, "x {x:?}");
                assert!((slack - 0.5).abs() < 1e-6, "slack {slack}");
            }
            other => panic!("expected point, got {other:?}"),
        }
    }
}
