//! Moment-based ambiguity sets and the uncertainty-quantification pair.
//!
//! The worst-case expectation of a piecewise-concave disutility over all
//! distributions with given support and generalized moment bounds reduces to
//! a pair of finite convex programs: a minimization built from conjugates
//! (the reformulated ambiguous primal worst) and a concave maximization over
//! perspectivised per-piece mass/positions (the reformulated ambiguous dual
//! best), whose solutions carry the worst-case distribution directly. The
//! generalized builders accept component supports with probabilities and
//! cone-valued moment functions over orthant or second-order cones.

use crate::cone::{CConvexFunction, ProperCone};
use crate::expr::{ExprError, FunctionExpr};
use crate::ext::{ExtReal, Finite, NegInf, PosInf, Tolerances};
use crate::linalg::Mat;
use crate::program::{ConstraintSum, FiniteConvexProgram, Sense, Term, VarCone};
use crate::robust::{instantiate_conjugate, RobustError, UncertaintySet};
use crate::solver::{self, Feasibility, Solution, SolverError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DroError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Robust(#[from] RobustError),
    #[error(transparent)]
    Foundation(#[from] crate::ext::FoundationError),
    #[error("assumption (S) violated: every piece has an empty effective support")]
    AssumptionSViolated,
    #[error("worst case not attained: piece {piece} has lambda ~ 0 with a nonzero transfer \
             direction; use epsilon_optimal_distribution")]
    UnattainedWorstCase { piece: usize },
    #[error("the supplied interior solution does not have strictly positive weights")]
    NoInteriorSlater,
    #[error("unsupported cone for the generalized builders")]
    UnsupportedCone,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Support + moment bounds: all distributions on `S` with `E[h_j] <= mu_j`.
#[derive(Debug, Clone)]
pub struct AmbiguitySet {
    pub support: UncertaintySet,
    pub moments: Vec<(FunctionExpr, f64)>,
}

impl AmbiguitySet {
    pub fn new(
        support: UncertaintySet,
        moments: Vec<(FunctionExpr, f64)>,
    ) -> Result<Self, DroError> {
        for (h, _) in &moments {
            if h.dim() != support.dim {
                return Err(DroError::DimensionMismatch {
                    expected: support.dim,
                    got: h.dim(),
                });
            }
            if !h.is_convex() {
                return Err(DroError::Expr(ExprError::NotConvex(
                    "moment functions must be convex".into(),
                )));
            }
        }
        Ok(AmbiguitySet { support, moments })
    }

    pub fn dim(&self) -> usize {
        self.support.dim
    }
}

/// `g(z) = max_i g_i(z)` stored through the negated convex pieces.
#[derive(Debug, Clone)]
pub struct Disutility {
    pub neg_pieces: Vec<FunctionExpr>,
}

impl Disutility {
    pub fn new(neg_pieces: Vec<FunctionExpr>) -> Result<Self, DroError> {
        // reuse the max-of-concave validation
        FunctionExpr::max_of_concave(neg_pieces.clone())?;
        Ok(Disutility { neg_pieces })
    }

    pub fn dim(&self) -> usize {
        self.neg_pieces[0].dim()
    }

    pub fn eval(&self, z: &[f64]) -> Result<ExtReal, DroError> {
        let mut best = NegInf;
        for p in &self.neg_pieces {
            best = best.max(p.eval(z)?.neg());
        }
        Ok(best)
    }

    /// Index of a maximizing piece at `z` (ties to the first).
    pub fn argmax_piece(&self, z: &[f64]) -> Result<usize, DroError> {
        let mut best = NegInf;
        let mut idx = 0;
        for (i, p) in self.neg_pieces.iter().enumerate() {
            let v = p.eval(z)?.neg();
            if v > best {
                best = v;
                idx = i;
            }
        }
        Ok(idx)
    }
}

/// Atoms with strictly positive probabilities summing to one.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    pub atoms: Vec<(Vec<f64>, f64)>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(Vec<f64>, f64)>) -> Result<Self, DroError> {
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if atoms.iter().any(|(_, p)| *p <= 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(DroError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(DiscreteDistribution { atoms })
    }

    /// Expectation with the infeasibility-dominates-unboundedness
    /// convention: `+inf` wins for moment
    /// functions, `-inf` dominates for disutilities (infeasibility beats
    /// unboundedness on both sides).
    pub fn expectation(
        &self,
        f: impl Fn(&[f64]) -> Result<ExtReal, DroError>,
        infinity_wins: ExtReal,
    ) -> Result<ExtReal, DroError> {
        let mut acc = 0.0f64;
        for (z, p) in &self.atoms {
            match f(z)? {
                Finite(v) => acc += p * v,
                inf => {
                    if inf == infinity_wins {
                        return Ok(infinity_wins);
                    }
                    return Ok(inf);
                }
            }
        }
        Ok(Finite(acc))
    }

    pub fn expected_disutility(&self, g: &Disutility) -> Result<ExtReal, DroError> {
        self.expectation(|z| g.eval(z), NegInf)
    }

    pub fn expected_moment(&self, h: &FunctionExpr) -> Result<ExtReal, DroError> {
        self.expectation(|z| Ok(h.eval(z)?), PosInf)
    }
}

/// Drop pieces whose effective support is empty (assumption (S)); returns
/// kept piece indices and warnings.
pub fn check_assumption_s(
    a: &AmbiguitySet,
    g: &Disutility,
    tol: &Tolerances,
) -> Result<(Vec<usize>, Vec<String>), DroError> {
    let mut kept = Vec::new();
    let mut notes = Vec::new();
    const BIG: f64 = 1e8;
    for (i, neg_g) in g.neg_pieces.iter().enumerate() {
        let mut p = a.support.membership_program();
        let z = p.block_coords("z").unwrap();
        // domain surrogates: finite values for h_j and -g_i
        for (j, (h, _)) in a.moments.iter().enumerate() {
            p.constraints.push(ConstraintSum {
                label: format!("dom h[{j}]"),
                terms: vec![Term::new(h.clone(), z.clone())],
                constant: -BIG,
                nonlinear: !h.is_affine(),
            });
        }
        p.constraints.push(ConstraintSum {
            label: "dom -g".into(),
            terms: vec![Term::new(neg_g.clone(), z.clone())],
            constant: -BIG,
            nonlinear: !neg_g.is_affine(),
        });
        match solver::feasibility(&p, tol)? {
            Feasibility::Point { .. } => kept.push(i),
            Feasibility::Infeasible => {
                notes.push(format!(
                    "piece {i} dropped: empty effective support (does not change the value)"
                ));
            }
            Feasibility::Inconclusive => {
                kept.push(i);
                notes.push(format!("piece {i}: effective-support check inconclusive"));
            }
        }
    }
    if kept.is_empty() {
        return Err(DroError::AssumptionSViolated);
    }
    Ok((kept, notes))
}

/// The boxed reformulated ambiguous primal worst problem (AP-W').
pub fn build_apw_cvx(
    a: &AmbiguitySet,
    g: &Disutility,
    tol: &Tolerances,
) -> Result<FiniteConvexProgram, DroError> {
    let (kept, notes) = check_assumption_s(a, g, tol)?;
    let dz = a.dim();
    let nj = a.moments.len();
    let mut prog = FiniteConvexProgram::new("AP-W'", Sense::Min);
    prog.notes = notes;
    let alpha = prog.add_block("alpha", 1, VarCone::Free);
    let beta = prog.add_block("beta", nj.max(1), VarCone::Nonneg);
    if nj == 0 {
        prog.add_equality(vec![(beta[0], 1.0)], 0.0);
    }
    prog.objective
        .push(Term::new(FunctionExpr::affine(vec![1.0], 0.0), alpha.clone()));
    for (j, (_, mu)) in a.moments.iter().enumerate() {
        prog.objective.push(Term::new(
            FunctionExpr::affine(vec![*mu], 0.0),
            vec![beta[j]],
        ));
    }

    for &i in &kept {
        let neg_g = &g.neg_pieces[i];
        let y0 = prog.add_block(format!("y0[{i}]"), dz, VarCone::Free);
        let mut coupling: Vec<Vec<(usize, f64)>> =
            (0..dz).map(|k| vec![(y0[k], 1.0)]).collect();
        let mut terms = Vec::new();
        let cg = neg_g.conjugate()?;
        terms.extend(instantiate_conjugate(
            &mut prog,
            &cg,
            &y0,
            None,
            &format!("auxg[{i}]"),
        )?);
        let mut nonlinear = !neg_g.is_affine();
        for (j, (h, _)) in a.moments.iter().enumerate() {
            let y1 = prog.add_block(format!("y1[{i}][{j}]"), dz, VarCone::Free);
            let ch = h.conjugate()?;
            terms.extend(instantiate_conjugate(
                &mut prog,
                &ch,
                &y1,
                Some(beta[j]),
                &format!("auxh[{i}][{j}]"),
            )?);
            nonlinear = nonlinear || !h.is_affine();
            for (k, row) in coupling.iter_mut().enumerate() {
                row.push((y1[k], 1.0));
            }
        }
        for (l, c) in a.support.constraints.iter().enumerate() {
            let y2 = prog.add_block(format!("y2[{i}][{l}]"), dz, VarCone::Free);
            let nu = prog.add_block(format!("nu[{i}][{l}]"), 1, VarCone::Nonneg);
            let cc = c.conjugate()?;
            terms.extend(instantiate_conjugate(
                &mut prog,
                &cc,
                &y2,
                Some(nu[0]),
                &format!("auxc[{i}][{l}]"),
            )?);
            nonlinear = nonlinear || !c.is_affine();
            for (k, row) in coupling.iter_mut().enumerate() {
                row.push((y2[k], 1.0));
            }
        }
        // ... <= alpha
        terms.push(Term::new(FunctionExpr::affine(vec![-1.0], 0.0), alpha.clone()));
        prog.constraints.push(ConstraintSum {
            label: format!("piece {i}"),
            terms,
            constant: 0.0,
            nonlinear,
        });
        for row in coupling {
            prog.add_equality(row, 0.0);
        }
    }
    Ok(prog)
}

/// The boxed reformulated ambiguous dual best problem (AD-B').
pub fn build_adb_cvx(
    a: &AmbiguitySet,
    g: &Disutility,
    tol: &Tolerances,
) -> Result<FiniteConvexProgram, DroError> {
    let (kept, notes) = check_assumption_s(a, g, tol)?;
    let dz = a.dim();
    let nj = a.moments.len();
    let mut prog = FiniteConvexProgram::new("AD-B'", Sense::Max);
    prog.notes = notes;
    let ni = kept.len();
    let tau = prog.add_block("tau", ni, VarCone::Free);
    let lambda = prog.add_block("lambda", ni, VarCone::Nonneg);
    let omega: Vec<Vec<usize>> = (0..ni)
        .map(|r| prog.add_block(format!("omega[{r}]"), nj.max(1), VarCone::Free))
        .collect();
    let v: Vec<Vec<usize>> = (0..ni)
        .map(|r| prog.add_block(format!("v[{r}]"), dz, VarCone::Free))
        .collect();

    // stored min form of `max sum tau`
    for &t in &tau {
        prog.objective
            .push(Term::new(FunctionExpr::affine(vec![-1.0], 0.0), vec![t]));
    }
    // sum lambda = 1
    prog.add_equality(lambda.iter().map(|&c| (c, 1.0)).collect(), 1.0);
    // sum_i omega_ij <= mu_j
    for j in 0..nj {
        let mu = a.moments[j].1;
        prog.constraints.push(ConstraintSum {
            label: format!("moment budget {j}"),
            terms: omega
                .iter()
                .map(|om| Term::new(FunctionExpr::affine(vec![1.0], 0.0), vec![om[j]]))
                .collect(),
            constant: -mu,
            nonlinear: false,
        });
    }
    if nj == 0 {
        for om in &omega {
            prog.add_equality(vec![(om[0], 1.0)], 0.0);
        }
    }
    for (r, &i) in kept.iter().enumerate() {
        let mut vl = v[r].clone();
        vl.push(lambda[r]);
        // support: lambda c_l(v/lambda) <= 0
        for (l, c) in a.support.constraints.iter().enumerate() {
            prog.constraints.push(ConstraintSum {
                label: format!("support[{l}] piece {i}"),
                terms: vec![Term::new(
                    FunctionExpr::perspective(c.clone())?,
                    vl.clone(),
                )],
                constant: 0.0,
                nonlinear: !c.is_affine(),
            });
        }
        // moments: lambda h_j(v/lambda) <= omega_j
        for (j, (h, _)) in a.moments.iter().enumerate() {
            let mut terms = vec![Term::new(FunctionExpr::perspective(h.clone())?, vl.clone())];
            terms.push(Term::new(
                FunctionExpr::affine(vec![-1.0], 0.0),
                vec![omega[r][j]],
            ));
            prog.constraints.push(ConstraintSum {
                label: format!("moment[{j}] piece {i}"),
                terms,
                constant: 0.0,
                nonlinear: !h.is_affine(),
            });
        }
        // disutility: tau_i <= lambda g_i(v/lambda)
        let neg_g = &g.neg_pieces[i];
        let mut terms = vec![Term::new(
            FunctionExpr::perspective(neg_g.clone())?,
            vl.clone(),
        )];
        terms.push(Term::new(FunctionExpr::affine(vec![1.0], 0.0), vec![tau[r]]));
        prog.constraints.push(ConstraintSum {
            label: format!("disutility piece {i}"),
            terms,
            constant: 0.0,
            nonlinear: !neg_g.is_affine(),
        });
    }
    Ok(prog)
}

/// Read the worst-case distribution off an (AD-B')-style solution: piece `i`
/// contributes the atom `v_i / lambda_i` with probability `lambda_i`.
pub fn extract_distribution(
    prog: &FiniteConvexProgram,
    sol: &Solution,
    tol: &Tolerances,
) -> Result<DiscreteDistribution, DroError> {
    let lambda = prog
        .block_values("lambda", &sol.x)
        .expect("lambda block")
        .to_vec();
    let mut atoms = Vec::new();
    for (r, &l) in lambda.iter().enumerate() {
        let v = prog
            .block_values(&format!("v[{r}]"), &sol.x)
            .expect("v block");
        if l > tol.zero {
            atoms.push((v.iter().map(|x| x / l).collect::<Vec<f64>>(), l));
        } else {
            let vnorm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vnorm > (tol.zero).sqrt() {
                return Err(DroError::UnattainedWorstCase { piece: r });
            }
        }
    }
    // renormalize away solver noise
    let total: f64 = atoms.iter().map(|(_, p)| p).sum();
    for (_, p) in atoms.iter_mut() {
        *p /= total;
    }
    DiscreteDistribution::new(atoms)
}

/// Blend an eps-optimal solution with an interior (all-positive-weight)
/// solution so the blend stays 2eps-optimal with strictly positive weights,
/// then extract its distribution. For unbounded programs, pass an
/// eps-solution whose objective is at least `1/eps`; the same blend then
/// certifies a value of at least `1/(2 eps)`.
pub fn epsilon_optimal_distribution(
    prog: &FiniteConvexProgram,
    sol: &Solution,
    interior: &Solution,
    eps: f64,
    tol: &Tolerances,
) -> Result<DiscreteDistribution, DroError> {
    let li = prog
        .block_values("lambda", &interior.x)
        .expect("lambda block");
    if li.iter().any(|&l| l <= tol.zero) {
        return Err(DroError::NoInteriorSlater);
    }
    let obj_sol = sol.objective.as_f64();
    let obj_int = interior.objective.as_f64();
    // the objective is linear, so the admissible blend weight is closed-form
    let theta = if obj_sol - obj_int > eps {
        (eps / (obj_sol - obj_int)).min(1.0)
    } else {
        1.0
    };
    let x: Vec<f64> = sol
        .x
        .iter()
        .zip(&interior.x)
        .map(|(a, b)| (1.0 - theta) * a + theta * b)
        .collect();
    let blended = Solution {
        x,
        objective: Finite((1.0 - theta) * obj_sol + theta * obj_int),
        status: sol.status,
        kkt_residual: sol.kkt_residual.max(interior.kkt_residual),
        iterations: sol.iterations,
    };
    extract_distribution(prog, &blended, tol)
}

/// Surrogate for a candidate Slater distribution: per-piece weights and
/// means plus the true moment/support expectations under the candidate.
#[derive(Debug, Clone)]
pub struct SlaterDistributionCandidate {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub moment_expectations: Vec<f64>,
    pub support_expectations: Vec<f64>,
    /// Condition (i) of the definition is measure-theoretic and cannot be
    /// verified from finite data; it is declared by the caller.
    pub declared_absolutely_continuous: bool,
}

#[derive(Debug, Clone)]
pub struct SlaterDistributionReport {
    pub ok: bool,
    pub reasons: Vec<String>,
    pub absolute_continuity: &'static str,
    /// On success, the (AD-B')-style Slater point built from the candidate:
    /// `(tau, lambda, omega, v)` flattened into named parts.
    pub adb_point: Option<AdbSlaterPoint>,
}

#[derive(Debug, Clone)]
pub struct AdbSlaterPoint {
    pub lambda: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
}

/// Check conditions (ii)-(iv) of the Slater-distribution definition on a
/// candidate and construct the induced (AD-B') Slater point.
pub fn slater_distribution_check(
    a: &AmbiguitySet,
    g: &Disutility,
    cand: &SlaterDistributionCandidate,
    tol: &Tolerances,
) -> Result<SlaterDistributionReport, DroError> {
    let mut reasons = Vec::new();
    let ni = g.neg_pieces.len();
    if cand.weights.len() != ni || cand.means.len() != ni {
        return Err(DroError::DimensionMismatch {
            expected: ni,
            got: cand.weights.len(),
        });
    }
    if cand.weights.iter().any(|&w| w <= tol.zero) {
        reasons.push("a piece weight is not strictly positive".into());
    }
    let wsum: f64 = cand.weights.iter().sum();
    if (wsum - 1.0).abs() > 1e-6 {
        reasons.push(format!("piece weights sum to {wsum}, not 1"));
    }
    for (j, (h, mu)) in a.moments.iter().enumerate() {
        let e = cand.moment_expectations[j];
        if h.is_affine() {
            if e > mu + tol.feas {
                reasons.push(format!("moment {j}: E[h] = {e} exceeds {mu}"));
            }
        } else if e >= mu - tol.feas {
            reasons.push(format!(
                "moment {j} is nonlinear and needs strict slack: E[h] = {e}, bound {mu}"
            ));
        }
    }
    for (l, c) in a.support.constraints.iter().enumerate() {
        let e = cand.support_expectations[l];
        if c.is_affine() {
            if e > tol.feas {
                reasons.push(format!("support face {l}: E[c] = {e} > 0"));
            }
        } else if e >= -tol.feas {
            reasons.push(format!(
                "support face {l} is nonlinear and needs E[c] < 0 strictly, got {e}"
            ));
        }
    }
    let ok = reasons.is_empty();
    let adb_point = if ok {
        // per the construction: z_i the piece means, u_i > h(z_i), t_i < g_i(z_i)
        let mut omega = Vec::with_capacity(ni);
        let mut tau = Vec::with_capacity(ni);
        let mut v = Vec::with_capacity(ni);
        let mut slack_j = Vec::with_capacity(a.moments.len());
        for (j, (h, mu)) in a.moments.iter().enumerate() {
            let total: f64 = cand
                .weights
                .iter()
                .zip(&cand.means)
                .map(|(w, z)| w * h.eval(z).map(|v| v.as_f64()).unwrap_or(f64::INFINITY))
                .sum();
            slack_j.push(((mu - total) * 0.5).max(0.0));
            let _ = j;
        }
        for (i, (w, z)) in cand.weights.iter().zip(&cand.means).enumerate() {
            v.push(z.iter().map(|x| w * x).collect::<Vec<f64>>());
            let mut om = Vec::with_capacity(a.moments.len());
            for (j, (h, _)) in a.moments.iter().enumerate() {
                let hv = h.eval(z)?.as_f64();
                om.push(w * (hv + slack_j[j]));
            }
            omega.push(om);
            let gi = g.neg_pieces[i].eval(z)?.neg().as_f64();
            tau.push(w * (gi - 1.0));
        }
        Some(AdbSlaterPoint {
            lambda: cand.weights.clone(),
            v,
            omega,
            tau,
        })
    } else {
        None
    };
    Ok(SlaterDistributionReport {
        ok,
        reasons,
        absolute_continuity: if cand.declared_absolutely_continuous {
            "declared by caller, unverified"
        } else {
            "not declared"
        },
        adb_point,
    })
}

// ---- generalized (conic / component) version ----

/// One component of a generalized ambiguity set: conic support constraints
/// `c_lk(z) <=_C 0`, the component probability, and its disutility pieces.
#[derive(Debug, Clone)]
pub struct GeneralizedComponent {
    pub support: Vec<CConvexFunction>,
    pub prob: f64,
    pub neg_pieces: Vec<FunctionExpr>,
}

/// A cone-valued moment constraint `E[h_j(z)] <=_{H_j} mu_j` with one
/// component function per support component.
#[derive(Debug, Clone)]
pub struct GeneralizedMoment {
    pub cone: ProperCone,
    pub per_component: Vec<CConvexFunction>,
    pub bound: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GeneralizedAmbiguitySet {
    pub components: Vec<GeneralizedComponent>,
    pub moments: Vec<GeneralizedMoment>,
    pub dim: usize,
}

impl GeneralizedAmbiguitySet {
    pub fn new(
        dim: usize,
        components: Vec<GeneralizedComponent>,
        moments: Vec<GeneralizedMoment>,
    ) -> Result<Self, DroError> {
        let psum: f64 = components.iter().map(|c| c.prob).sum();
        if components.iter().any(|c| c.prob <= 0.0) || (psum - 1.0).abs() > 1e-9 {
            return Err(DroError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for m in &moments {
            if m.bound.len() != m.cone.dim() || m.per_component.len() != components.len() {
                return Err(DroError::DimensionMismatch {
                    expected: m.cone.dim(),
                    got: m.bound.len(),
                });
            }
        }
        Ok(GeneralizedAmbiguitySet {
            components,
            moments,
            dim,
        })
    }
}


/// Membership program for one generalized component (orthant rows or SOC
/// norm constraints over the argument).
fn gen_support_program(comp: &GeneralizedComponent, dim: usize) -> Result<FiniteConvexProgram, DroError> {
    let mut p = FiniteConvexProgram::new("generalized-component", Sense::Min);
    let z = p.add_block("z", dim, VarCone::Free);
    p.objective
        .push(Term::new(FunctionExpr::constant(dim, 0.0), z.clone()));
    for (l, c) in comp.support.iter().enumerate() {
        match c {
            CConvexFunction::Componentwise { components } => {
                for (r, comp_fn) in components.iter().enumerate() {
                    p.constraints.push(ConstraintSum {
                        label: format!("support[{l}] row {r}"),
                        terms: vec![Term::new(comp_fn.clone(), z.clone())],
                        constant: 0.0,
                        nonlinear: !comp_fn.is_affine(),
                    });
                }
            }
            CConvexFunction::SocStructured {
                head_mat,
                head_off,
                tail,
            } => {
                // ||H z + e|| + tail(z) <= 0
                let norm_expr = FunctionExpr::affine_precompose(
                    FunctionExpr::norm_power(1.0, 1.0, crate::expr::Norm::L2, head_mat.rows)?,
                    head_mat.clone(),
                    head_off.clone(),
                )?;
                p.constraints.push(ConstraintSum {
                    label: format!("support[{l}] soc"),
                    terms: vec![
                        Term::new(norm_expr, z.clone()),
                        Term::new(tail.clone(), z.clone()),
                    ],
                    constant: 0.0,
                    nonlinear: true,
                });
            }
        }
    }
    Ok(p)
}

/// Eagerly verify assumption (S_g): every piece of every component must have
/// a nonempty effective support; empty pieces are dropped with a note.
pub fn check_assumption_s_g(
    a: &GeneralizedAmbiguitySet,
    tol: &Tolerances,
) -> Result<(Vec<Vec<usize>>, Vec<String>), DroError> {
    const BIG: f64 = 1e8;
    let mut kept_all = Vec::new();
    let mut notes = Vec::new();
    for (k, comp) in a.components.iter().enumerate() {
        let mut kept = Vec::new();
        for (i, neg_g) in comp.neg_pieces.iter().enumerate() {
            let mut p = gen_support_program(comp, a.dim)?;
            let z = p.block_coords("z").unwrap();
            for (j, m) in a.moments.iter().enumerate() {
                // finite scalarized moment values stand in for dom membership
                let basis = m.cone.dual_basis();
                for r in 0..basis.rows {
                    let lam = basis.row(r).to_vec();
                    let scalar = crate::cone::scalarize(&m.per_component[k], &lam, tol.zero)
                        .map_err(|e| DroError::Expr(ExprError::UnsupportedComposition(
                            format!("scalarize moment {j}: {e}"),
                        )))?;
                    p.constraints.push(ConstraintSum {
                        label: format!("dom h[{j}] basis {r}"),
                        terms: vec![Term::new(scalar.clone(), z.clone())],
                        constant: -BIG,
                        nonlinear: !scalar.is_affine(),
                    });
                }
            }
            p.constraints.push(ConstraintSum {
                label: "dom -g".into(),
                terms: vec![Term::new(neg_g.clone(), z.clone())],
                constant: -BIG,
                nonlinear: !neg_g.is_affine(),
            });
            match solver::feasibility(&p, tol)? {
                Feasibility::Infeasible => notes.push(format!(
                    "component {k} piece {i} dropped: empty effective support"
                )),
                _ => kept.push(i),
            }
        }
        if kept.is_empty() {
            return Err(DroError::AssumptionSViolated);
        }
        kept_all.push(kept);
    }
    Ok((kept_all, notes))
}

fn cone_block(cone: ProperCone) -> VarCone {
    match cone {
        ProperCone::NonnegOrthant(_) => VarCone::Nonneg,
        ProperCone::SecondOrderCone(_) => VarCone::Soc,
    }
}

/// Terms for `(beta' h)*(y)` with `beta` a variable block in the dual cone.
/// Orthant rows split into per-row scalar perspectives with their own `y`
/// split variables; the SOC structured class has the closed form
/// `beta_t phi*((y - H' beta_h)/beta_t) - beta_h' e`.
fn variable_weighted_conjugate_terms(
    prog: &mut FiniteConvexProgram,
    h: &CConvexFunction,
    beta: &[usize],
    y_total: &[usize],
    tag: &str,
) -> Result<Vec<Term>, DroError> {
    let dz = h.arg_dim();
    match h {
        CConvexFunction::Componentwise { components } => {
            let mut terms = Vec::new();
            let mut split_rows: Vec<Vec<(usize, f64)>> =
                (0..dz).map(|k| vec![(y_total[k], -1.0)]).collect();
            for (r, comp) in components.iter().enumerate() {
                let yr = prog.add_block(format!("{tag}-row{r}"), dz, VarCone::Free);
                let conj = comp.conjugate()?;
                terms.extend(instantiate_conjugate(
                    prog,
                    &conj,
                    &yr,
                    Some(beta[r]),
                    &format!("{tag}-aux{r}"),
                )?);
                for (k, row) in split_rows.iter_mut().enumerate() {
                    row.push((yr[k], 1.0));
                }
            }
            for row in split_rows {
                prog.add_equality(row, 0.0);
            }
            Ok(terms)
        }
        CConvexFunction::SocStructured {
            head_mat,
            head_off,
            tail,
        } => {
            let m = head_mat.rows;
            let conj = tail.conjugate()?;
            if !conj.is_closed_form() {
                return Err(DroError::UnsupportedCone);
            }
            // Perspective(phi*) over ((y - H' beta_h), beta_t), then the
            // affine offset -beta_h' e
            let persp = FunctionExpr::perspective(conj.expr.clone())?;
            // argument map over (y[dz], beta_h[m], beta_t[1])
            let mut a = Mat::zeros(dz + 1, dz + m + 1);
            for r in 0..dz {
                a[(r, r)] = 1.0;
                for c in 0..m {
                    a[(r, dz + c)] = -head_mat[(c, r)];
                }
            }
            a[(dz, dz + m)] = 1.0;
            let composed = FunctionExpr::affine_precompose(persp, a, vec![0.0; dz + 1])?;
            let mut lin = vec![0.0; dz + m + 1];
            for c in 0..m {
                lin[dz + c] = -head_off[c];
            }
            let full = FunctionExpr::plus_affine(composed, lin, 0.0)?;
            let mut coords = y_total.to_vec();
            coords.extend(&beta[..m]);
            coords.push(beta[m]);
            Ok(vec![Term::new(full, coords)])
        }
    }
}

/// Perspective membership terms `lambda f(v/lambda) <=_C target` as one
/// convex constraint per orthant row, or as a single norm-plus-perspective
/// constraint for the SOC. `target` is an optional omega block (`None`
/// means zero).
fn cone_perspective_le(
    prog: &mut FiniteConvexProgram,
    f: &CConvexFunction,
    v: &[usize],
    lambda: usize,
    target: Option<&[usize]>,
    label: &str,
) -> Result<(), DroError> {
    let mut vl: Vec<usize> = v.to_vec();
    vl.push(lambda);
    match f {
        CConvexFunction::Componentwise { components } => {
            for (r, comp) in components.iter().enumerate() {
                let mut terms = vec![Term::new(
                    FunctionExpr::perspective(comp.clone())?,
                    vl.clone(),
                )];
                if let Some(t) = target {
                    terms.push(Term::new(FunctionExpr::affine(vec![-1.0], 0.0), vec![t[r]]));
                }
                prog.constraints.push(ConstraintSum {
                    label: format!("{label} row {r}"),
                    terms,
                    constant: 0.0,
                    nonlinear: !comp.is_affine(),
                });
            }
            Ok(())
        }
        CConvexFunction::SocStructured {
            head_mat,
            head_off,
            tail,
        } => {
            // || lambda*head(v/lambda) - omega_head || <= omega_tail - lambda tail(v/lambda)
            // head perspective is affine: H v + e lambda
            let m = head_mat.rows;
            let dz = tail.dim();
            // rows of the norm argument over (v, lambda, omega_head)
            let width = dz + 1 + m;
            let mut a = Mat::zeros(m, width);
            for r in 0..m {
                for c in 0..dz {
                    a[(r, c)] = head_mat[(r, c)];
                }
                a[(r, dz)] = head_off[r];
                a[(r, dz + 1 + r)] = -1.0;
            }
            let norm_expr = FunctionExpr::affine_precompose(
                FunctionExpr::norm_power(1.0, 1.0, crate::expr::Norm::L2, m)?,
                a,
                vec![0.0; m],
            )?;
            let mut coords = v.to_vec();
            coords.push(lambda);
            let omega = target.ok_or(DroError::UnsupportedCone)?;
            coords.extend(&omega[..m]);
            let mut terms = vec![Term::new(norm_expr, coords)];
            terms.push(Term::new(
                FunctionExpr::perspective(tail.clone())?,
                vl.clone(),
            ));
            terms.push(Term::new(
                FunctionExpr::affine(vec![-1.0], 0.0),
                vec![omega[m]],
            ));
            prog.constraints.push(ConstraintSum {
                label: label.to_string(),
                terms,
                constant: 0.0,
                nonlinear: true,
            });
            Ok(())
        }
    }
}

/// The generalized reformulated ambiguous primal worst problem (AP-W' with
/// components and cone moments).
pub fn build_apw_cvx_g(
    a: &GeneralizedAmbiguitySet,
    tol: &Tolerances,
) -> Result<FiniteConvexProgram, DroError> {
    let (kept, notes) = check_assumption_s_g(a, tol)?;
    let dz = a.dim;
    let nk = a.components.len();
    let mut prog = FiniteConvexProgram::new("AP-W'_g", Sense::Min);
    prog.notes = notes;
    let alpha = prog.add_block("alpha", nk, VarCone::Free);
    let beta: Vec<Vec<usize>> = a
        .moments
        .iter()
        .enumerate()
        .map(|(j, m)| prog.add_block(format!("beta[{j}]"), m.cone.dim(), cone_block(m.cone)))
        .collect();
    for (k, comp) in a.components.iter().enumerate() {
        prog.objective.push(Term::new(
            FunctionExpr::affine(vec![comp.prob], 0.0),
            vec![alpha[k]],
        ));
    }
    for (j, m) in a.moments.iter().enumerate() {
        for (r, mu) in m.bound.iter().enumerate() {
            prog.objective.push(Term::new(
                FunctionExpr::affine(vec![*mu], 0.0),
                vec![beta[j][r]],
            ));
        }
    }
    for (k, comp) in a.components.iter().enumerate() {
        for &i in &kept[k] {
            let neg_g = &comp.neg_pieces[i];
            let y0 = prog.add_block(format!("y0[{i}][{k}]"), dz, VarCone::Free);
            let mut coupling: Vec<Vec<(usize, f64)>> =
                (0..dz).map(|r| vec![(y0[r], 1.0)]).collect();
            let mut terms = Vec::new();
            let cg = neg_g.conjugate()?;
            terms.extend(instantiate_conjugate(
                &mut prog,
                &cg,
                &y0,
                None,
                &format!("auxg[{i}][{k}]"),
            )?);
            for (j, m) in a.moments.iter().enumerate() {
                let y1 = prog.add_block(format!("y1[{i}][{j}][{k}]"), dz, VarCone::Free);
                terms.extend(variable_weighted_conjugate_terms(
                    &mut prog,
                    &m.per_component[k],
                    &beta[j],
                    &y1,
                    &format!("wh[{i}][{j}][{k}]"),
                )?);
                for (r, row) in coupling.iter_mut().enumerate() {
                    row.push((y1[r], 1.0));
                }
            }
            for (l, c) in comp.support.iter().enumerate() {
                let nu = prog.add_block(
                    format!("nu[{i}][{l}][{k}]"),
                    c.cone().dim(),
                    cone_block(c.cone()),
                );
                let y2 = prog.add_block(format!("y2[{i}][{l}][{k}]"), dz, VarCone::Free);
                terms.extend(variable_weighted_conjugate_terms(
                    &mut prog,
                    c,
                    &nu,
                    &y2,
                    &format!("wc[{i}][{l}][{k}]"),
                )?);
                for (r, row) in coupling.iter_mut().enumerate() {
                    row.push((y2[r], 1.0));
                }
            }
            terms.push(Term::new(
                FunctionExpr::affine(vec![-1.0], 0.0),
                vec![alpha[k]],
            ));
            prog.constraints.push(ConstraintSum {
                label: format!("piece {i} comp {k}"),
                terms,
                constant: 0.0,
                nonlinear: true,
            });
            for row in coupling {
                prog.add_equality(row, 0.0);
            }
        }
    }
    Ok(prog)
}

/// The generalized reformulated ambiguous dual best problem (AD-B'_g).
pub fn build_adb_cvx_g(
    a: &GeneralizedAmbiguitySet,
    tol: &Tolerances,
) -> Result<FiniteConvexProgram, DroError> {
    let (kept, notes) = check_assumption_s_g(a, tol)?;
    let dz = a.dim;
    let mut prog = FiniteConvexProgram::new("AD-B'_g", Sense::Max);
    prog.notes = notes;
    let mut tau_blocks = Vec::new();
    let mut lambda_blocks = Vec::new();
    for (k, _) in a.components.iter().enumerate() {
        let ni = kept[k].len();
        tau_blocks.push(prog.add_block(format!("tau[{k}]"), ni, VarCone::Free));
        lambda_blocks.push(prog.add_block(format!("lambda[{k}]"), ni, VarCone::Nonneg));
    }
    // one omega block per (piece, moment, component)
    let mut omega: Vec<Vec<Vec<Vec<usize>>>> = Vec::new(); // [k][r][j] -> coords
    let mut v: Vec<Vec<Vec<usize>>> = Vec::new(); // [k][r]
    for (k, _) in a.components.iter().enumerate() {
        let mut per_piece_om = Vec::new();
        let mut per_piece_v = Vec::new();
        for &i in &kept[k] {
            let mut oj = Vec::new();
            for (j, m) in a.moments.iter().enumerate() {
                oj.push(prog.add_block(
                    format!("omega[{i}][{j}][{k}]"),
                    m.cone.dim(),
                    VarCone::Free,
                ));
            }
            per_piece_om.push(oj);
            per_piece_v.push(prog.add_block(format!("v[{i}][{k}]"), dz, VarCone::Free));
        }
        omega.push(per_piece_om);
        v.push(per_piece_v);
    }

    for tb in &tau_blocks {
        for &t in tb {
            prog.objective
                .push(Term::new(FunctionExpr::affine(vec![-1.0], 0.0), vec![t]));
        }
    }
    // sum_i lambda_ik = p_k
    for (k, comp) in a.components.iter().enumerate() {
        prog.add_equality(
            lambda_blocks[k].iter().map(|&c| (c, 1.0)).collect(),
            comp.prob,
        );
    }
    // sum_{ik} omega_ijk <=_{H_j} mu_j
    for (j, m) in a.moments.iter().enumerate() {
        match m.cone {
            ProperCone::NonnegOrthant(d) => {
                for r in 0..d {
                    let mut terms = Vec::new();
                    for (k, _) in a.components.iter().enumerate() {
                        for rr in 0..kept[k].len() {
                            terms.push(Term::new(
                                FunctionExpr::affine(vec![1.0], 0.0),
                                vec![omega[k][rr][j][r]],
                            ));
                        }
                    }
                    prog.constraints.push(ConstraintSum {
                        label: format!("moment budget {j} row {r}"),
                        terms,
                        constant: -m.bound[r],
                        nonlinear: false,
                    });
                }
            }
            ProperCone::SecondOrderCone(d) => {
                // mu - sum omega in SOC: slack block with equalities
                let s = prog.add_block(format!("ms[{j}]"), d, VarCone::Soc);
                for r in 0..d {
                    let mut row = vec![(s[r], 1.0)];
                    for (k, _) in a.components.iter().enumerate() {
                        for rr in 0..kept[k].len() {
                            row.push((omega[k][rr][j][r], 1.0));
                        }
                    }
                    prog.add_equality(row, m.bound[r]);
                }
            }
        }
    }
    for (k, comp) in a.components.iter().enumerate() {
        for (r_idx, &i) in kept[k].iter().enumerate() {
            let neg_g = &comp.neg_pieces[i];
            let li = lambda_blocks[k][r_idx];
            for (l, c) in comp.support.iter().enumerate() {
                match c {
                    CConvexFunction::Componentwise { .. } => cone_perspective_le(
                        &mut prog,
                        c,
                        &v[k][r_idx],
                        li,
                        None,
                        &format!("support[{l}] piece {i} comp {k}"),
                    )?,
                    CConvexFunction::SocStructured { .. } => {
                        // lambda c(v/lambda) <=_SOC 0 with a pinned zero target
                        let zero = prog.add_block(
                            format!("zc[{i}][{l}][{k}]"),
                            c.cone().dim(),
                            VarCone::Free,
                        );
                        for &zc in &zero {
                            prog.add_equality(vec![(zc, 1.0)], 0.0);
                        }
                        cone_perspective_le(
                            &mut prog,
                            c,
                            &v[k][r_idx],
                            li,
                            Some(&zero),
                            &format!("support[{l}] piece {i} comp {k}"),
                        )?;
                    }
                }
            }
            for (j, m) in a.moments.iter().enumerate() {
                cone_perspective_le(
                    &mut prog,
                    &m.per_component[k],
                    &v[k][r_idx],
                    li,
                    Some(&omega[k][r_idx][j]),
                    &format!("moment[{j}] piece {i} comp {k}"),
                )?;
            }
            let mut vl = v[k][r_idx].clone();
            vl.push(li);
            let mut terms = vec![Term::new(
                FunctionExpr::perspective(neg_g.clone())?,
                vl,
            )];
            terms.push(Term::new(
                FunctionExpr::affine(vec![1.0], 0.0),
                vec![tau_blocks[k][r_idx]],
            ));
            prog.constraints.push(ConstraintSum {
                label: format!("disutility piece {i} comp {k}"),
                terms,
                constant: 0.0,
                nonlinear: !neg_g.is_affine(),
            });
        }
    }
    Ok(prog)
}

/// Worst-case distribution from a generalized dual-best solution.
pub fn extract_distribution_g(
    a: &GeneralizedAmbiguitySet,
    prog: &FiniteConvexProgram,
    sol: &Solution,
    tol: &Tolerances,
) -> Result<DiscreteDistribution, DroError> {
    let mut atoms = Vec::new();
    for (k, comp) in a.components.iter().enumerate() {
        let lambda = prog
            .block_values(&format!("lambda[{k}]"), &sol.x)
            .expect("lambda block");
        for i in 0..comp.neg_pieces.len() {
            let l = lambda[i];
            let vv = prog
                .block_values(&format!("v[{i}][{k}]"), &sol.x)
                .expect("v block");
            if l > tol.zero {
                atoms.push((vv.iter().map(|x| x / l).collect::<Vec<f64>>(), l));
            } else {
                let vnorm: f64 = vv.iter().map(|x| x * x).sum::<f64>().sqrt();
                if vnorm > (tol.zero).sqrt() {
                    return Err(DroError::UnattainedWorstCase { piece: i });
                }
            }
        }
    }
    let total: f64 = atoms.iter().map(|(_, p)| p).sum();
    for (_, p) in atoms.iter_mut() {
        *p /= total;
    }
    DiscreteDistribution::new(atoms)
}

/// Grid-LP oracle value of the primal uncertainty quantification problem.
pub fn oracle_worst_case_expectation(
    a: &AmbiguitySet,
    g: &Disutility,
    lo: &[f64],
    hi: &[f64],
    res: f64,
    tol: &Tolerances,
) -> Result<(f64, Vec<(Vec<f64>, f64)>), DroError> {
    let grid = crate::oracle::grid_points(lo, hi, res).map_err(oracle_err)?;
    let mut pts = Vec::new();
    let mut obj = Vec::new();
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); a.moments.len()];
    for z in grid {
        if !a.support.contains(&z, tol.feas)? {
            continue;
        }
        let gv = match g.eval(&z)? {
            Finite(v) => v,
            NegInf => continue,
            PosInf => unreachable!("pieces are finite above"),
        };
        let mut hvals = Vec::with_capacity(a.moments.len());
        let mut ok = true;
        for (h, _) in &a.moments {
            match h.eval(&z)? {
                Finite(v) => hvals.push(v),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        for (j, v) in hvals.into_iter().enumerate() {
            rows[j].push(v);
        }
        obj.push(gv);
        pts.push(z);
    }
    if pts.is_empty() {
        return Err(oracle_err(crate::oracle::OracleError::EmptyGridFeasible));
    }
    let lp = crate::oracle::MassLp {
        obj,
        group: vec![0; pts.len()],
        group_mass: vec![1.0],
        rows: rows
            .into_iter()
            .zip(a.moments.iter().map(|(_, mu)| *mu))
            .map(|(coefs, rhs)| (coefs, rhs))
            .collect(),
    };
    let sol = crate::oracle::solve_mass_lp(&lp).map_err(oracle_err)?;
    let masses = sol
        .masses
        .iter()
        .map(|&(i, p)| (pts[i].clone(), p))
        .collect();
    Ok((sol.value, masses))
}

fn oracle_err(e: crate::oracle::OracleError) -> DroError {
    DroError::Expr(ExprError::UnsupportedComposition(format!("oracle: {e}")))
}

/// Jensen-merge: group atoms by their maximizing piece and replace each
/// group with its barycenter. By convexity this never decreases the
/// objective nor violates the moment bounds (used by the property tests).
pub fn jensen_merge(
    dist: &DiscreteDistribution,
    g: &Disutility,
) -> Result<DiscreteDistribution, DroError> {
    let mut groups: std::collections::BTreeMap<usize, (Vec<f64>, f64)> =
        std::collections::BTreeMap::new();
    let dim = dist.atoms[0].0.len();
    for (z, p) in &dist.atoms {
        let i = g.argmax_piece(z)?;
        let e = groups.entry(i).or_insert((vec![0.0; dim], 0.0));
        for (acc, zi) in e.0.iter_mut().zip(z) {
            *acc += p * zi;
        }
        e.1 += p;
    }
    let atoms = groups
        .into_values()
        .map(|(zsum, p)| (zsum.iter().map(|v| v / p).collect(), p))
        .collect();
    DiscreteDistribution::new(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Norm;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn second_moment_set(lo: f64, hi: f64, mu: f64) -> AmbiguitySet {
        AmbiguitySet::new(
            UncertaintySet::box_set(vec![lo], vec![hi]).unwrap(),
            vec![(
                FunctionExpr::norm_power(2.0, 1.0, Norm::L2, 1).unwrap(),
                mu,
            )],
        )
        .unwrap()
    }

    fn linear_g() -> Disutility {
        // g(z) = z, one piece
        Disutility::new(vec![FunctionExpr::affine(vec![-1.0], 0.0)]).unwrap()
    }

    fn abs_g() -> Disutility {
        // g(z) = |z| as max(z, -z)
        Disutility::new(vec![
            FunctionExpr::affine(vec![-1.0], 0.0),
            FunctionExpr::affine(vec![1.0], 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn apw_value_is_one_for_linear_g() {
        let a = second_moment_set(0.0, 10.0, 1.0);
        let g = linear_g();
        let apw = build_apw_cvx(&a, &g, &tols()).unwrap();
        let sol = solver::solve(&apw, &tols()).unwrap();
        assert!(
            (sol.objective.as_f64() - 1.0).abs() < 2e-3,
            "standalone value {:?} status {:?}",
            sol.objective,
            sol.status
        );
        // the weak-duality pair sharpens both sides
        let adb = build_adb_cvx(&a, &g, &tols()).unwrap();
        let (s_min, s_max) = solver::solve_pair(&apw, &adb, &tols()).unwrap();
        assert!(
            (s_min.objective.as_f64() - 1.0).abs() < 1e-4,
            "pair min {:?}",
            s_min.objective
        );
        assert!(
            (s_max.objective.as_f64() - 1.0).abs() < 1e-4,
            "pair max {:?}",
            s_max.objective
        );
        assert!((s_min.objective.as_f64() - s_max.objective.as_f64()).abs() < 1e-4);
    }

    #[test]
    fn adb_value_and_extraction_for_linear_g() {
        let a = second_moment_set(0.0, 10.0, 1.0);
        let g = linear_g();
        let prog = build_adb_cvx(&a, &g, &tols()).unwrap();
        let sol = solver::solve(&prog, &tols()).unwrap();
        assert!(
            (sol.objective.as_f64() - 1.0).abs() < 2e-4,
            "value {:?} status {:?}",
            sol.objective,
            sol.status
        );
        let dist = extract_distribution(&prog, &sol, &tols()).unwrap();
        assert_eq!(dist.atoms.len(), 1);
        assert!((dist.atoms[0].0[0] - 1.0).abs() < 1e-2);
        let eg = dist.expected_disutility(&g).unwrap().as_f64();
        assert!(eg >= sol.objective.as_f64() - 1e-3);
    }

    #[test]
    fn degenerate_moment_pins_mass_at_zero() {
        // mu = 0 with h = z^2 on [-1,1]: the worst distribution is delta_0
        let a = second_moment_set(-1.0, 1.0, 0.0);
        let g = linear_g();
        let prog = build_adb_cvx(&a, &g, &tols()).unwrap();
        let sol = solver::solve(&prog, &tols()).unwrap();
        assert!(sol.objective.as_f64().abs() < 1e-4);
        let dist = extract_distribution(&prog, &sol, &tols()).unwrap();
        for (z, _) in &dist.atoms {
            assert!(z[0].abs() < 1e-3);
        }
    }

    #[test]
    fn slater_distribution_check_on_uniform_surrogate() {
        // uniform on [-1,1]: piece means +-1/2, E[z^2] = 1/3 < 1 strictly
        let a = second_moment_set(-10.0, 10.0, 1.0);
        let g = abs_g();
        let cand = SlaterDistributionCandidate {
            weights: vec![0.5, 0.5],
            means: vec![vec![0.5], vec![-0.5]],
            moment_expectations: vec![1.0 / 3.0],
            support_expectations: vec![0.5 - 10.0, -0.5 - 10.0, 0.5 - 10.0, -0.5 - 10.0],
            declared_absolutely_continuous: true,
        };
        let rep = slater_distribution_check(&a, &g, &cand, &tols()).unwrap();
        assert!(rep.ok, "reasons: {:?}", rep.reasons);
        assert!(rep.adb_point.is_some());

        // mu = 0 leaves no strict slack for the nonlinear moment
        let tight = second_moment_set(-10.0, 10.0, 0.0);
        let rep2 = slater_distribution_check(
            &tight,
            &g,
            &SlaterDistributionCandidate {
                weights: vec![0.5, 0.5],
                means: vec![vec![0.0], vec![0.0]],
                moment_expectations: vec![0.0],
                support_expectations: vec![-10.0, -10.0, -10.0, -10.0],
                declared_absolutely_continuous: true,
            },
            &tols(),
        )
        .unwrap();
        assert!(!rep2.ok);
    }


    #[test]
    fn apw_variable_counts() {
        // I = 1, J = 1, L = 2, d_z = 1: alpha, beta, 1*(1+1+2) y-scalars and
        // 2 multipliers
        let a = second_moment_set(0.0, 10.0, 1.0);
        let g = linear_g();
        let prog = build_apw_cvx(&a, &g, &tols()).unwrap();
        assert_eq!(prog.num_vars(), 1 + 1 + 4 + 2);
        assert_eq!(prog.constraints.len(), 1);
    }

    #[test]
    fn oracle_matches_solved_value() {
        let a = second_moment_set(0.0, 10.0, 1.0);
        let g = linear_g();
        let (val, _) =
            oracle_worst_case_expectation(&a, &g, &[0.0], &[10.0], 1e-3, &tols()).unwrap();
        assert!((val - 1.0).abs() < 2e-3, "oracle {val}");
    }
}
