//! Robust problems and their finite convex reformulations.
//!
//! A robust problem couples saddle objective/constraint functions with an
//! uncertainty set described by convex inequalities. The primal-worst
//! reformulation dualizes the embedded maximizations over the uncertain
//! parameters; the dual-best reformulation convexifies the multiplier
//! products by the perspectivication substitution `v = lambda z`. Both come
//! back as explicit [`FiniteConvexProgram`]s, and `duality_report` solves
//! the pair and certifies strong duality from verifiable conditions only:
//! a strict primal Slater point with bounded uncertainty, a bounded feasible
//! region with bounded uncertainty, or a dual Slater point with positive
//! multipliers.
//!
//! The classical (uncertainty-free) primal/dual pair lives in [`classical`];
//! it covers degenerate robust problems with no uncertain parameters.

use crate::expr::{ConjugateResult, ExprError, FunctionExpr, SaddleFunction};
use crate::ext::{ext_add, ExtReal, Finite, PosInf, Tolerances};
use crate::program::{ConstraintSum, FiniteConvexProgram, Sense, Term, VarCone};
use crate::solver::{
    self, Boundedness, Feasibility, Solution, SolveStatus, SolverError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RobustError {
    #[error("the uncertainty set for index {index} is empty")]
    EmptyUncertaintySet { index: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Foundation(#[from] crate::ext::FoundationError),
    #[error("uncertainty set dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("solver failure while building the duality report")]
    SolverFailure { report: Box<DualityReport> },
}

/// `Z = { z : c_l(z) <= 0 }` with proper, closed, convex `c_l`.
#[derive(Debug, Clone)]
pub struct UncertaintySet {
    pub constraints: Vec<FunctionExpr>,
    pub dim: usize,
}

impl UncertaintySet {
    pub fn new(dim: usize, constraints: Vec<FunctionExpr>) -> Result<Self, RobustError> {
        for c in &constraints {
            if c.dim() != dim {
                return Err(RobustError::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
            if !c.is_convex() {
                return Err(RobustError::Expr(ExprError::NotConvex(
                    "uncertainty-set constraints must be convex".into(),
                )));
            }
        }
        Ok(UncertaintySet { constraints, dim })
    }

    /// Box `[lo, hi]` via two affine faces per coordinate.
    pub fn box_set(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, RobustError> {
        let d = lo.len();
        let mut cs = Vec::with_capacity(2 * d);
        for k in 0..d {
            if hi[k].is_finite() {
                let mut a = vec![0.0; d];
                a[k] = 1.0;
                cs.push(FunctionExpr::affine(a, -hi[k]));
            }
            if lo[k].is_finite() {
                let mut a = vec![0.0; d];
                a[k] = -1.0;
                cs.push(FunctionExpr::affine(a, lo[k]));
            }
        }
        UncertaintySet::new(d, cs)
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> Result<bool, RobustError> {
        for c in &self.constraints {
            match c.eval(z)? {
                Finite(v) if v <= tol => {}
                ExtReal::NegInf => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    }

    /// Membership program: variables `z`, one constraint per face.
    pub fn membership_program(&self) -> FiniteConvexProgram {
        let mut p = FiniteConvexProgram::new("uncertainty-set", Sense::Min);
        let z = p.add_block("z", self.dim, VarCone::Free);
        p.objective
            .push(Term::new(FunctionExpr::constant(self.dim, 0.0), z.clone()));
        for (l, c) in self.constraints.iter().enumerate() {
            p.constraints.push(ConstraintSum {
                label: format!("c[{l}]"),
                terms: vec![Term::new(c.clone(), z.clone())],
                constant: 0.0,
                nonlinear: !c.is_affine(),
            });
        }
        p
    }
}

/// Robust problem: saddle objective `f_0`, saddle constraints `f_i <= 0`,
/// and one shared uncertainty set or one per index in `I_0`.
#[derive(Debug, Clone)]
pub struct RobustProblem {
    pub objective: SaddleFunction,
    pub constraints: Vec<SaddleFunction>,
    pub sets: SetAssignment,
}

#[derive(Debug, Clone)]
pub enum SetAssignment {
    Shared(UncertaintySet),
    /// One set per index in `I_0` (position 0 is the objective's).
    PerIndex(Vec<UncertaintySet>),
}

impl RobustProblem {
    pub fn new(
        objective: SaddleFunction,
        constraints: Vec<SaddleFunction>,
        sets: SetAssignment,
    ) -> Result<Self, RobustError> {
        let dx = objective.dim_x();
        let dz = objective.dim_z();
        for f in &constraints {
            if f.dim_x() != dx || f.dim_z() != dz {
                return Err(RobustError::DimensionMismatch {
                    expected: dx,
                    got: f.dim_x(),
                });
            }
        }
        match &sets {
            SetAssignment::Shared(s) => {
                if s.dim != dz {
                    return Err(RobustError::DimensionMismatch {
                        expected: dz,
                        got: s.dim,
                    });
                }
            }
            SetAssignment::PerIndex(v) => {
                if v.len() != constraints.len() + 1 {
                    return Err(RobustError::DimensionMismatch {
                        expected: constraints.len() + 1,
                        got: v.len(),
                    });
                }
                for s in v {
                    if s.dim != dz {
                        return Err(RobustError::DimensionMismatch {
                            expected: dz,
                            got: s.dim,
                        });
                    }
                }
            }
        }
        Ok(RobustProblem {
            objective,
            constraints,
            sets,
        })
    }

    pub fn set_for(&self, i: usize) -> &UncertaintySet {
        match &self.sets {
            SetAssignment::Shared(s) => s,
            SetAssignment::PerIndex(v) => &v[i],
        }
    }

    pub fn dim_x(&self) -> usize {
        self.objective.dim_x()
    }

    pub fn dim_z(&self) -> usize {
        self.objective.dim_z()
    }

    fn saddle(&self, i: usize) -> &SaddleFunction {
        if i == 0 {
            &self.objective
        } else {
            &self.constraints[i - 1]
        }
    }
}

/// Splice a conjugate (closed or lifted) into a program as terms. The
/// conjugate argument lives at `arg_coords`; with `persp` the perspective
/// `t f*(y/t)` is inserted instead, coupling rows scaling with `t`.
pub(crate) fn instantiate_conjugate(
    p: &mut FiniteConvexProgram,
    conj: &ConjugateResult,
    arg_coords: &[usize],
    persp: Option<usize>,
    aux_name: &str,
) -> Result<Vec<Term>, RobustError> {
    let mut coords: Vec<usize> = arg_coords.to_vec();
    if conj.aux_dim > 0 {
        let aux = p.add_block(aux_name, conj.aux_dim, VarCone::Free);
        coords.extend(aux);
        p.notes.push(format!(
            "{aux_name}: epigraph-lifted conjugate; value is a one-sided bound if the \
             lifting infimum is not attained"
        ));
    }
    for (row, rhs) in &conj.coupling {
        let mut sparse: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(k, a)| (coords[k], *a))
            .collect();
        match persp {
            None => p.add_equality(sparse, *rhs),
            Some(t) => {
                // row . (w, aux) = rhs * t
                if *rhs != 0.0 {
                    sparse.push((t, -rhs));
                }
                p.add_equality(sparse, 0.0);
            }
        }
    }
    let term = match persp {
        None => Term::new(conj.expr.clone(), coords),
        Some(t) => {
            coords.push(t);
            Term::new(FunctionExpr::perspective(conj.expr.clone())?, coords)
        }
    };
    Ok(vec![term])
}

/// The boxed reformulated primal worst problem (P-W'):
/// minimize over `(x, {y_il}, {nu_il})`.
pub fn build_primal_worst_cvx(p: &RobustProblem) -> Result<FiniteConvexProgram, RobustError> {
    let dx = p.dim_x();
    let dz = p.dim_z();
    let mut prog = FiniteConvexProgram::new("P-W'", Sense::Min);
    let x = prog.add_block("x", dx, VarCone::Free);

    let n_idx = p.constraints.len() + 1;
    for i in 0..n_idx {
        let set = p.set_for(i);
        let f = p.saddle(i);
        let y0 = prog.add_block(format!("y[{i}][0]"), dz, VarCone::Free);

        // (-f_i)^{*2}(x, y_i0) = p_i(x) + (-q_i)*(y_i0 + Q_i' x)
        let mut terms: Vec<Term> = Vec::new();
        terms.push(Term::new(f.p().clone(), x.clone()));
        {
            // q_neg_conj composed with (x, y) -> y + Q'x
            let mut a = crate::linalg::Mat::zeros(dz, dx + dz);
            for r in 0..dz {
                for c in 0..dx {
                    a[(r, c)] = f.coupling()[(c, r)];
                }
                a[(r, dx + r)] = 1.0;
            }
            let composed =
                FunctionExpr::affine_precompose(f.q_neg_conj().clone(), a, vec![0.0; dz])?;
            let mut coords = x.clone();
            coords.extend(&y0);
            terms.push(Term::new(composed, coords));
        }

        let mut coupling_rows: Vec<Vec<(usize, f64)>> =
            (0..dz).map(|k| vec![(y0[k], 1.0)]).collect();
        let mut nonlinear = !f.p().is_affine() || !f.q_neg().is_affine();
        for (l, c) in set.constraints.iter().enumerate() {
            let y = prog.add_block(format!("y[{i}][{}]", l + 1), dz, VarCone::Free);
            let nu = prog.add_block(format!("nu[{i}][{}]", l + 1), 1, VarCone::Nonneg);
            let conj = c.conjugate()?;
            if !conj.is_closed_form() {
                prog.notes
                    .push(format!("c[{l}] conjugate lifted for constraint {i}"));
            }
            let ts = instantiate_conjugate(
                &mut prog,
                &conj,
                &y,
                Some(nu[0]),
                &format!("aux[{i}][{}]", l + 1),
            )?;
            nonlinear = nonlinear || !c.is_affine();
            terms.extend(ts);
            for (k, row) in coupling_rows.iter_mut().enumerate() {
                row.push((y[k], 1.0));
            }
        }
        for row in coupling_rows {
            prog.add_equality(row, 0.0);
        }

        if i == 0 {
            prog.objective.extend(terms);
        } else {
            prog.constraints.push(ConstraintSum {
                label: format!("worst-case constraint {i}"),
                terms,
                constant: 0.0,
                nonlinear,
            });
        }
    }
    Ok(prog)
}

/// The boxed reformulated dual best problem (D-B'): a concave maximization
/// stored in min form (the negated objective is convex).
pub fn build_dual_best_cvx(p: &RobustProblem) -> Result<FiniteConvexProgram, RobustError> {
    let dx = p.dim_x();
    let dz = p.dim_z();
    let ni = p.constraints.len();
    let mut prog = FiniteConvexProgram::new("D-B'", Sense::Max);

    let w: Vec<Vec<usize>> = (0..=ni)
        .map(|i| prog.add_block(format!("w[{i}]"), dx, VarCone::Free))
        .collect();
    let z0 = prog.add_block("z0", dz, VarCone::Free);
    let lambda = prog.add_block("lambda", ni.max(1), VarCone::Nonneg);
    let v: Vec<Vec<usize>> = (1..=ni)
        .map(|i| prog.add_block(format!("v[{i}]"), dz, VarCone::Free))
        .collect();

    // stored min-form objective: f_0^{*1}(w_0, z_0) + sum_i lambda_i f_i^{*1}(w_i/l, v_i/l)
    // f^{*1}(w, z) = p*(w - Qz) + q_neg(z)
    let f0 = &p.objective;
    {
        let mut a = crate::linalg::Mat::zeros(dx, dx + dz);
        for r in 0..dx {
            a[(r, r)] = 1.0;
            for c in 0..dz {
                a[(r, dx + c)] = -f0.coupling()[(r, c)];
            }
        }
        let composed = FunctionExpr::affine_precompose(f0.p_conj().clone(), a, vec![0.0; dx])?;
        let mut coords = w[0].clone();
        coords.extend(&z0);
        prog.objective.push(Term::new(composed, coords));
        prog.objective
            .push(Term::new(f0.q_neg().clone(), z0.clone()));
    }
    for (i, f) in p.constraints.iter().enumerate() {
        let li = lambda[i];
        let mut a = crate::linalg::Mat::zeros(dx, dx + dz);
        for r in 0..dx {
            a[(r, r)] = 1.0;
            for c in 0..dz {
                a[(r, dx + c)] = -f.coupling()[(r, c)];
            }
        }
        let composed = FunctionExpr::affine_precompose(f.p_conj().clone(), a, vec![0.0; dx])?;
        let mut coords = w[i + 1].clone();
        coords.extend(&v[i]);
        coords.push(li);
        prog.objective
            .push(Term::new(FunctionExpr::perspective(composed)?, coords));
        let mut qcoords = v[i].clone();
        qcoords.push(li);
        prog.objective.push(Term::new(
            FunctionExpr::perspective(f.q_neg().clone())?,
            qcoords,
        ));
    }

    // coupling sum_i w_i = 0
    for k in 0..dx {
        let row: Vec<(usize, f64)> = (0..=ni).map(|i| (w[i][k], 1.0)).collect();
        prog.add_equality(row, 0.0);
    }
    // z_0 in Z_0
    for (l, c) in p.set_for(0).constraints.iter().enumerate() {
        prog.constraints.push(ConstraintSum {
            label: format!("c[{l}](z0)"),
            terms: vec![Term::new(c.clone(), z0.clone())],
            constant: 0.0,
            nonlinear: !c.is_affine(),
        });
    }
    // lambda_i c_l(v_i / lambda_i) <= 0
    for i in 1..=ni {
        for (l, c) in p.set_for(i).constraints.iter().enumerate() {
            let mut coords = v[i - 1].clone();
            coords.push(lambda[i - 1]);
            prog.constraints.push(ConstraintSum {
                label: format!("persp c[{l}] for {i}"),
                terms: vec![Term::new(
                    FunctionExpr::perspective(c.clone())?,
                    coords.clone(),
                )],
                constant: 0.0,
                nonlinear: !c.is_affine(),
            });
        }
    }
    if ni == 0 {
        // lambda block is a placeholder; pin it
        prog.add_equality(vec![(lambda[0], 1.0)], 0.0);
    }
    Ok(prog)
}

/// Objective of the unconvexified dual best at a given point, with the
/// closed perspective convention at `lambda_i = 0` (the `z_i` stays fixed).
pub fn dual_best_objective(
    p: &RobustProblem,
    w: &[Vec<f64>],
    z: &[Vec<f64>],
    lambda: &[f64],
) -> Result<ExtReal, RobustError> {
    let mut total = p.objective.partial_conjugate_1(&w[0], &z[0])?.neg();
    for (i, f) in p.constraints.iter().enumerate() {
        let li = lambda[i];
        let term = if li > 0.0 {
            let ws: Vec<f64> = w[i + 1].iter().map(|v| v / li).collect();
            let zi = &z[i + 1];
            crate::ext::ext_scale(li, f.partial_conjugate_1(&ws, zi)?)?
        } else {
            // 0 f^{*1}(w/0, z) = recession of p* at w
            f.p_conj().recession_value(&w[i + 1])?
        };
        total = ext_add(total, term.neg())?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlaterFlag {
    Strict,
    Plain,
    None,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct SlaterReport {
    pub point: Vec<f64>,
    /// minimum slack over all inequality constraints
    pub margin_all: f64,
    /// minimum slack over nonlinear constraints (others held feasible)
    pub margin_nonlinear: f64,
    pub flag: SlaterFlag,
}

/// Max-min-slack search on an uncertainty set (or any constraint list).
/// Returns `None` when no Slater point exists under this representation.
pub fn slater_search(set: &UncertaintySet, tol: &Tolerances) -> Option<SlaterReport> {
    let prog = set.membership_program();
    slater_search_on(&prog, tol, &[], true)
}

pub(crate) fn slater_search_on(
    prog: &FiniteConvexProgram,
    tol: &Tolerances,
    positive_coords: &[usize],
    check_domains: bool,
) -> Option<SlaterReport> {
    // relative-interior membership is only certified for full-dimensional
    // domains; reformulation programs skip the check because their flat
    // domains are affine subspaces, where ri membership is automatic
    let domains_ok = !check_domains
        || prog
            .constraints
            .iter()
            .flat_map(|c| c.terms.iter())
            .all(|t| t.expr.certs().full_dim_dom || t.expr.certs().full_dom);
    let all = solver::slater_search_program(prog, tol, false, positive_coords).ok()?;
    let nl = solver::slater_search_program(prog, tol, true, positive_coords).ok()?;
    let (point, margin_all) = match all {
        Feasibility::Point { x, slack } => (x, slack),
        Feasibility::Infeasible => return None,
        Feasibility::Inconclusive => (vec![], f64::NEG_INFINITY),
    };
    let (point_nl, margin_nonlinear) = match nl {
        Feasibility::Point { x, slack } => (x, slack),
        Feasibility::Infeasible => return None,
        Feasibility::Inconclusive => (point.clone(), f64::NEG_INFINITY),
    };
    let flag = if !domains_ok {
        SlaterFlag::Unknown
    } else if margin_all > tol.feas {
        SlaterFlag::Strict
    } else if margin_nonlinear > tol.feas {
        SlaterFlag::Plain
    } else if margin_nonlinear >= -tol.feas {
        SlaterFlag::None
    } else {
        SlaterFlag::None
    };
    if flag == SlaterFlag::None && margin_nonlinear <= tol.feas {
        return None;
    }
    Some(SlaterReport {
        point: if flag == SlaterFlag::Plain { point_nl } else { point },
        margin_all,
        margin_nonlinear,
        flag,
    })
}

/// True iff `v` is a recession direction of the set: `0 c_l(v/0) <= 0` for
/// every face.
pub fn recession_check(
    set: &UncertaintySet,
    v: &[f64],
    tol: &Tolerances,
) -> Result<bool, RobustError> {
    for c in &set.constraints {
        match c.recession_value(v)? {
            Finite(r) if r <= tol.zero => {}
            ExtReal::NegInf => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    StrongDualityCertified,
    WeakOnly,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct DualityReport {
    pub pw_value: ExtReal,
    pub db_value: ExtReal,
    pub gap: f64,
    pub slater_primal: SlaterFlag,
    pub slater_dual: SlaterFlag,
    pub z_bounded: bool,
    pub verdict: Verdict,
    pub pw_status: SolveStatus,
    pub db_status: SolveStatus,
    /// Builder caveats, e.g. one-sided bounds from lifted conjugates whose
    /// infimum may not be attained.
    pub notes: Vec<String>,
}

/// Solve both reformulations and certify only what is verifiable: values,
/// gap, and a verdict derived only from verified sufficient conditions.
pub fn duality_report(p: &RobustProblem, tol: &Tolerances) -> Result<DualityReport, RobustError> {
    // nonemptiness of the uncertainty sets comes first
    for i in 0..=p.constraints.len() {
        let set = p.set_for(i);
        if matches!(
            solver::feasibility(&set.membership_program(), tol)?,
            Feasibility::Infeasible
        ) {
            return Err(RobustError::EmptyUncertaintySet { index: i });
        }
        if matches!(&p.sets, SetAssignment::Shared(_)) {
            break;
        }
    }
    let pw = build_primal_worst_cvx(p)?;
    let db = build_dual_best_cvx(p)?;
    let mut notes = pw.notes.clone();
    notes.extend(db.notes.clone());
    let (pw_sol, db_sol) = solver::solve_pair(&pw, &db, tol)?;

    // bounded uncertainty sets?
    let mut z_bounded = true;
    let sets: Vec<&UncertaintySet> = match &p.sets {
        SetAssignment::Shared(s) => vec![s],
        SetAssignment::PerIndex(v) => v.iter().collect(),
    };
    for s in sets {
        match solver::unboundedness_probe(&s.membership_program(), 1e7, tol)? {
            Boundedness::Bounded => {}
            _ => z_bounded = false,
        }
    }

    // strict primal Slater: strict slack through the reformulated constraints
    // soundly upper-bounds the embedded sup
    let slater_primal = slater_search_on(&pw, tol, &[], false)
        .map(|r| r.flag)
        .unwrap_or(SlaterFlag::None);
    // dual Slater with positive multipliers
    let lambda_coords = db.block_coords("lambda").unwrap_or_default();
    let slater_dual = slater_search_on(&db, tol, &lambda_coords, false)
        .map(|r| r.flag)
        .unwrap_or(SlaterFlag::None);

    finish_report(pw_sol, db_sol, slater_primal, slater_dual, z_bounded, notes, tol)
}

pub(crate) fn finish_report(
    pw_sol: Solution,
    db_sol: Solution,
    slater_primal: SlaterFlag,
    slater_dual: SlaterFlag,
    z_bounded: bool,
    notes: Vec<String>,
    tol: &Tolerances,
) -> Result<DualityReport, RobustError> {
    let pw_value = pw_sol.objective;
    let db_value = db_sol.objective;
    let gap = match (pw_value, db_value) {
        (Finite(a), Finite(b)) => a - b,
        (PosInf, PosInf) | (ExtReal::NegInf, ExtReal::NegInf) => 0.0,
        _ => f64::INFINITY,
    };
    let certified = (slater_primal == SlaterFlag::Strict && z_bounded)
        || (slater_dual == SlaterFlag::Strict || slater_dual == SlaterFlag::Plain);
    let scale = match (pw_value, db_value) {
        (Finite(a), Finite(b)) => a.abs().max(b.abs()).max(1.0),
        _ => 1.0,
    };
    let close = gap.abs() <= (tol.opt * 100.0).max(1e-4 * scale);
    let verdict = if certified && close {
        Verdict::StrongDualityCertified
    } else if gap > (tol.opt * 100.0).max(1e-4 * scale) {
        Verdict::WeakOnly
    } else {
        Verdict::Inconclusive
    };
    let report = DualityReport {
        pw_value,
        db_value,
        gap,
        slater_primal,
        slater_dual,
        z_bounded,
        verdict,
        pw_status: pw_sol.status,
        db_status: db_sol.status,
        notes,
    };
    if matches!(pw_sol.status, SolveStatus::Stalled) || matches!(db_sol.status, SolveStatus::Stalled)
    {
        return Err(RobustError::SolverFailure {
            report: Box::new(report),
        });
    }
    Ok(report)
}

/// The classical convex primal/dual pair with no uncertain parameters.
pub mod classical {
    use super::*;

    /// `min f_0(x) s.t. f_i(x) <= 0` for proper, closed, convex `f_i`.
    pub fn build_primal(fs: &[FunctionExpr]) -> Result<FiniteConvexProgram, RobustError> {
        let dx = fs[0].dim();
        let mut prog = FiniteConvexProgram::new("P", Sense::Min);
        let x = prog.add_block("x", dx, VarCone::Free);
        prog.objective.push(Term::new(fs[0].clone(), x.clone()));
        for (i, f) in fs.iter().enumerate().skip(1) {
            prog.constraints.push(ConstraintSum {
                label: format!("f[{i}] <= 0"),
                terms: vec![Term::new(f.clone(), x.clone())],
                constant: 0.0,
                nonlinear: !f.is_affine(),
            });
        }
        Ok(prog)
    }

    /// The explicit dual: maximize `-f_0*(w_0) - sum_i lambda_i f_i*(w_i/lambda_i)`
    /// subject to `sum_i w_i = 0`.
    pub fn build_dual(fs: &[FunctionExpr]) -> Result<FiniteConvexProgram, RobustError> {
        let dx = fs[0].dim();
        let ni = fs.len() - 1;
        let mut prog = FiniteConvexProgram::new("D", Sense::Max);
        let w: Vec<Vec<usize>> = (0..fs.len())
            .map(|i| prog.add_block(format!("w[{i}]"), dx, VarCone::Free))
            .collect();
        let lambda = prog.add_block("lambda", ni.max(1), VarCone::Nonneg);
        {
            let conj = fs[0].conjugate()?;
            let terms = instantiate_conjugate(&mut prog, &conj, &w[0], None, "aux[0]")?;
            prog.objective.extend(terms);
        }
        for i in 1..fs.len() {
            let conj = fs[i].conjugate()?;
            let terms = instantiate_conjugate(
                &mut prog,
                &conj,
                &w[i],
                Some(lambda[i - 1]),
                &format!("aux[{i}]"),
            )?;
            prog.objective.extend(terms);
        }
        for k in 0..dx {
            let row: Vec<(usize, f64)> = (0..fs.len()).map(|i| (w[i][k], 1.0)).collect();
            prog.add_equality(row, 0.0);
        }
        if ni == 0 {
            prog.add_equality(vec![(lambda[0], 1.0)], 0.0);
        }
        Ok(prog)
    }

    /// Solve the pair and report values, gap and verdict.
    pub fn report(fs: &[FunctionExpr], tol: &Tolerances) -> Result<DualityReport, RobustError> {
        let p = build_primal(fs)?;
        let d = build_dual(fs)?;
        // the classical pair can have a duality gap, so each side's value is
        // not a valid bound for the other; solve them independently
        let ps = solver::solve(&p, tol)?;
        let ds = solver::solve(&d, tol)?;
        let sp = slater_search_on(&p, tol, &[], true)
            .map(|r| r.flag)
            .unwrap_or(SlaterFlag::None);
        let lambda_coords = d.block_coords("lambda").unwrap_or_default();
        let sd = slater_search_on(&d, tol, &lambda_coords, false)
            .map(|r| r.flag)
            .unwrap_or(SlaterFlag::None);
        let mut notes = p.notes.clone();
        notes.extend(d.notes.clone());
        finish_report(ps, ds, sp, sd, true, notes, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn xz_on_box() -> RobustProblem {
        // f_0(x, z) = x z on Z = [-1, 1], no constraints
        let f0 = SaddleFunction::bi_affine(
            vec![0.0],
            0.0,
            Mat::from_rows(vec![vec![1.0]]),
            vec![0.0],
            0.0,
        )
        .unwrap();
        RobustProblem::new(
            f0,
            vec![],
            SetAssignment::Shared(UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn min_max_of_xz_on_box_is_zero() {
        let p = xz_on_box();
        let pw = build_primal_worst_cvx(&p).unwrap();
        let db = build_dual_best_cvx(&p).unwrap();
        let ps = solver::solve(&pw, &tols()).unwrap();
        let ds = solver::solve(&db, &tols()).unwrap();
        assert!(
            ps.objective.as_f64().abs() < 1e-6,
            "pw {:?} ({:?})",
            ps.objective,
            ps.status
        );
        assert!(
            ds.objective.as_f64().abs() < 1e-6,
            "db {:?} ({:?})",
            ds.objective,
            ds.status
        );
    }

    #[test]
    fn report_certifies_strong_duality_on_box() {
        let p = xz_on_box();
        let r = duality_report(&p, &tols()).unwrap();
        assert!(r.z_bounded);
        assert!(r.gap.abs() < 1e-4);
        assert_eq!(r.verdict, Verdict::StrongDualityCertified);
    }

    #[test]
    fn slater_of_box_and_of_degenerate_quadratic() {
        let box_set = UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap();
        let r = slater_search(&box_set, &tols()).unwrap();
        assert!((r.point[0]).abs() < 1e-6);
        assert!((r.margin_all - 1.0).abs() < 1e-6, "margin {}", r.margin_all);

        // {z : z^2 <= 0} admits no Slater point under this representation
        let quad = UncertaintySet::new(
            1,
            vec![FunctionExpr::norm_power(2.0, 1.0, crate::expr::Norm::L2, 1).unwrap()],
        )
        .unwrap();
        assert!(slater_search(&quad, &tols()).is_none());
    }


    #[test]
    fn primal_worst_variable_counts() {
        // one constraint, two box faces, scalar x and z: x plus 2*(2+1)
        // y-scalars plus 2*2 multipliers, and one coupling row per index
        let f0 = SaddleFunction::bi_affine(
            vec![1.0],
            0.0,
            Mat::from_rows(vec![vec![1.0]]),
            vec![0.0],
            0.0,
        )
        .unwrap();
        let f1 = SaddleFunction::bi_affine(
            vec![1.0],
            -1.0,
            Mat::from_rows(vec![vec![0.5]]),
            vec![0.0],
            0.0,
        )
        .unwrap();
        let p = RobustProblem::new(
            f0,
            vec![f1],
            SetAssignment::Shared(UncertaintySet::box_set(vec![-1.0], vec![1.0]).unwrap()),
        )
        .unwrap();
        let pw = build_primal_worst_cvx(&p).unwrap();
        assert_eq!(pw.num_vars(), 1 + 2 * 3 + 2 * 2);
        assert_eq!(pw.equalities.len(), 2);
        assert_eq!(pw.constraints.len(), 1);
    }

    #[test]
    fn recession_checks() {
        let half = UncertaintySet::new(1, vec![FunctionExpr::affine(vec![-1.0], 0.0)]).unwrap();
        assert!(recession_check(&half, &[1.0], &tols()).unwrap());
        let unit = UncertaintySet::box_set(vec![0.0], vec![1.0]).unwrap();
        assert!(!recession_check(&unit, &[1.0], &tols()).unwrap());
        // z2 >= z1^2: (0, 1) is a recession direction
        let para = UncertaintySet::new(
            1 + 1,
            vec![FunctionExpr::plus_affine(
                FunctionExpr::on_coords(
                    FunctionExpr::norm_power(2.0, 1.0, crate::expr::Norm::L2, 1).unwrap(),
                    &[0],
                    2,
                )
                .unwrap(),
                vec![0.0, -1.0],
                0.0,
            )
            .unwrap()],
        )
        .unwrap();
        assert!(recession_check(&para, &[0.0, 1.0], &tols()).unwrap());
        assert!(!recession_check(&para, &[1.0, 0.0], &tols()).unwrap());
    }
}
