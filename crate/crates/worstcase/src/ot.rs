//! Optimal-transport ambiguity balls around discrete nominal distributions.
//!
//! The worst-case expected disutility over a transport ball admits two
//! finite convex reformulations: a minimization whose constraints involve
//! the cost's partial conjugate (used for distributionally robust decision
//! problems) and an explicit concave maximization over per-atom mass/offset
//! pairs whose solution carries the worst-case distribution. Atoms with
//! vanishing mass but nonzero offsets are escape directions; the asymptotic
//! family sends them to infinity with decaying probabilities.

use crate::dro::{DiscreteDistribution, Disutility, DroError};
use crate::expr::{ExprError, FunctionExpr, Norm, SaddleFunction};
use crate::ext::{ExtReal, Finite, Tolerances};
use crate::linalg::Mat;
use crate::program::{ConstraintSum, FiniteConvexProgram, Sense, Term, VarCone};
use crate::robust::{instantiate_conjugate, recession_check, UncertaintySet};
use crate::solver::{Feasibility, Solution};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OtError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Dro(#[from] DroError),
    #[error(transparent)]
    Robust(#[from] crate::robust::RobustError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error("escape atom (piece {piece}, nominal {atom}) fails the recession test; \
             tighten the solve")]
    NotRecession { piece: usize, atom: usize },
    #[error("a superlinear cost admits no escape atoms; piece {piece} at nominal {atom} \
             signals solver noise")]
    SuperlinearEscape { piece: usize, atom: usize },
    #[error("the solution has escape directions; use asymptotic_distribution")]
    HasEscapeDirections,
    #[error("n = {n} is below the largest escape count {need}")]
    PreconditionN { n: usize, need: usize },
    #[error("invalid optimal-transport ambiguity: {0}")]
    BadAmbiguity(String),
}

/// Norm-power transport cost family `d(z, z') = ||z - z'||^p`.
#[derive(Debug, Clone, Copy)]
pub struct WassersteinCost {
    pub p: f64,
    pub norm: Norm,
    /// dual exponent and coefficient of the closed-form partial conjugate
    /// `d*1(y, z') = y'z' + phi(q) ||y||_*^q` (`phi = None` means the
    /// dual-unit-ball indicator of the `p = 1` case)
    pub q: f64,
    pub phi: Option<f64>,
}

/// Closed-form data for `d(z, z') = ||z - z'||^p` costs.
pub fn wasserstein_cost(p: f64, norm: Norm) -> Result<WassersteinCost, OtError> {
    let npc = crate::expr::norm_power_conjugate(p)?;
    Ok(WassersteinCost {
        p,
        norm,
        q: npc.q,
        phi: npc.phi,
    })
}

impl WassersteinCost {
    /// `d(., z_k)` as an expression (`p = inf` is the unit-ball indicator
    /// around the atom).
    pub fn cost_expr(&self, center: &[f64]) -> Result<FunctionExpr, OtError> {
        let d = center.len();
        let base = FunctionExpr::norm_power(self.p, 1.0, self.norm, d)?;
        Ok(FunctionExpr::affine_precompose(
            base,
            Mat::identity(d),
            center.iter().map(|v| -v).collect(),
        )?)
    }

    pub fn superlinear(&self) -> bool {
        self.p > 1.0
    }
}

/// Transport ball `{ P on S : D(P, nominal) <= radius }` with per-atom cost
/// expressions `d(., z_k)`.
#[derive(Debug, Clone)]
pub struct OTAmbiguity {
    pub nominal: DiscreteDistribution,
    pub costs: Vec<FunctionExpr>,
    pub radius: f64,
    pub support: UncertaintySet,
    pub identity_of_indiscernibles: bool,
    pub superlinear: bool,
}

impl OTAmbiguity {
    pub fn new(
        nominal: DiscreteDistribution,
        costs: Vec<FunctionExpr>,
        radius: f64,
        support: UncertaintySet,
        identity_of_indiscernibles: bool,
        superlinear: bool,
    ) -> Result<Self, OtError> {
        if radius < 0.0 {
            return Err(OtError::BadAmbiguity(format!(
                "radius must be nonnegative, got {radius}"
            )));
        }
        if costs.len() != nominal.atoms.len() {
            return Err(OtError::BadAmbiguity(
                "one cost expression per nominal atom is required".into(),
            ));
        }
        for k in 0..nominal.atoms.len() {
            for l in 0..k {
                let same = nominal.atoms[k]
                    .0
                    .iter()
                    .zip(&nominal.atoms[l].0)
                    .all(|(a, b)| (a - b).abs() < 1e-12);
                if same {
                    return Err(OtError::BadAmbiguity(
                        "nominal atoms must be mutually distinct".into(),
                    ));
                }
            }
        }
        for (z, _) in &nominal.atoms {
            if !support.contains(z, 1e-7).map_err(DroError::from)? {
                return Err(OtError::BadAmbiguity(
                    "every nominal atom must lie in the support set".into(),
                ));
            }
        }
        Ok(OTAmbiguity {
            nominal,
            costs,
            radius,
            support,
            identity_of_indiscernibles,
            superlinear,
        })
    }

    /// Standard norm-power ambiguity around a nominal distribution.
    pub fn wasserstein(
        nominal: DiscreteDistribution,
        cost: WassersteinCost,
        radius: f64,
        support: UncertaintySet,
    ) -> Result<Self, OtError> {
        let costs = nominal
            .atoms
            .iter()
            .map(|(z, _)| cost.cost_expr(z))
            .collect::<Result<Vec<_>, _>>()?;
        OTAmbiguity::new(nominal, costs, radius, support, true, cost.superlinear())
    }

    pub fn dim(&self) -> usize {
        self.support.dim
    }

    /// Transport cost of a discrete distribution whose atom `j` was moved
    /// from nominal atom `assign[j]`.
    pub fn transport_cost(
        &self,
        dist: &DiscreteDistribution,
        assign: &[usize],
    ) -> Result<ExtReal, OtError> {
        let mut acc = Finite(0.0);
        for ((z, p), &k) in dist.atoms.iter().zip(assign) {
            let c = self.costs[k].eval(z)?;
            acc = crate::ext::ext_add(acc, crate::ext::ext_scale(*p, c).unwrap_or(c))
                .map_err(ExprError::from)?;
        }
        Ok(acc)
    }
}

/// Pieces applicable to nominal atom `k`: nonempty `dom(-g_i) ∩ dom(d_k) ∩ S`
/// decided by feasibility solves.
pub fn applicable_pieces(
    o: &OTAmbiguity,
    g: &Disutility,
    tol: &Tolerances,
) -> Result<(Vec<Vec<usize>>, Vec<String>), OtError> {
    const BIG: f64 = 1e8;
    let mut out = Vec::with_capacity(o.nominal.atoms.len());
    let mut notes = Vec::new();
    for (k, _) in o.nominal.atoms.iter().enumerate() {
        let mut keep = Vec::new();
        for (i, neg_g) in g.neg_pieces.iter().enumerate() {
            let mut p = o.support.membership_program();
            let z = p.block_coords("z").unwrap();
            p.constraints.push(ConstraintSum {
                label: "dom d".into(),
                terms: vec![Term::new(o.costs[k].clone(), z.clone())],
                constant: -BIG,
                nonlinear: !o.costs[k].is_affine(),
            });
            p.constraints.push(ConstraintSum {
                label: "dom -g".into(),
                terms: vec![Term::new(neg_g.clone(), z.clone())],
                constant: -BIG,
                nonlinear: !neg_g.is_affine(),
            });
            match crate::solver::feasibility(&p, tol)? {
                Feasibility::Infeasible => {
                    notes.push(format!("piece {i} inapplicable to nominal atom {k}"));
                }
                _ => keep.push(i),
            }
        }
        if keep.is_empty() {
            return Err(OtError::BadAmbiguity(format!(
                "no piece applies to nominal atom {k}"
            )));
        }
        out.push(keep);
    }
    Ok((out, notes))
}

/// The minimization reformulation (AP-W'_OT):
/// `min sum_k p_k alpha_k + radius * beta` with per-(piece, atom) dualized
/// constraints.
pub fn build_ot_primal_cvx(
    o: &OTAmbiguity,
    g: &Disutility,
    tol: &Tolerances,
) -> Result<FiniteConvexProgram, OtError> {
    let (pieces, notes) = applicable_pieces(o, g, tol)?;
    let dz = o.dim();
    let mut prog = FiniteConvexProgram::new("AP-W'_OT", Sense::Min);
    prog.notes = notes;
    let nk = o.nominal.atoms.len();
    let alpha = prog.add_block("alpha", nk, VarCone::Free);
    let beta = prog.add_block("beta", 1, VarCone::Nonneg);
    for (k, (_, pk)) in o.nominal.atoms.iter().enumerate() {
        prog.objective.push(Term::new(
            FunctionExpr::affine(vec![*pk], 0.0),
            vec![alpha[k]],
        ));
    }
    prog.objective.push(Term::new(
        FunctionExpr::affine(vec![o.radius], 0.0),
        beta.clone(),
    ));
    for (k, keep) in pieces.iter().enumerate() {
        for &i in keep {
            let y0 = prog.add_block(format!("y0[{i}][{k}]"), dz, VarCone::Free);
            let y1 = prog.add_block(format!("y1[{i}][{k}]"), dz, VarCone::Free);
            let mut coupling: Vec<Vec<(usize, f64)>> = (0..dz)
                .map(|r| vec![(y0[r], 1.0), (y1[r], 1.0)])
                .collect();
            let mut terms = Vec::new();
            let cg = g.neg_pieces[i].conjugate()?;
            terms.extend(instantiate_conjugate(
                &mut prog,
                &cg,
                &y0,
                None,
                &format!("auxg[{i}][{k}]"),
            )?);
            // beta * d*1(y1/beta, z_k): the conjugate of the per-atom cost
            let cd = o.costs[k].conjugate()?;
            terms.extend(instantiate_conjugate(
                &mut prog,
                &cd,
                &y1,
                Some(beta[0]),
                &format!("auxd[{i}][{k}]"),
            )?);
            for (l, c) in o.support.constraints.iter().enumerate() {
                let y2 = prog.add_block(format!("y2[{i}][{l}][{k}]"), dz, VarCone::Free);
                let nu = prog.add_block(format!("nu[{i}][{l}][{k}]"), 1, VarCone::Nonneg);
                let cc = c.conjugate()?;
                terms.extend(instantiate_conjugate(
                    &mut prog,
                    &cc,
                    &y2,
                    Some(nu[0]),
                    &format!("auxc[{i}][{l}][{k}]"),
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
                label: format!("piece {i} atom {k}"),
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

/// The explicit concave maximization over `(lambda_ik, v_ik)` after the
/// variable substitution `v <- v + z_k lambda`.
pub fn build_ot_dual_cvx_explicit(
    o: &OTAmbiguity,
    g: &Disutility,
    tol: &Tolerances,
) -> Result<FiniteConvexProgram, OtError> {
    let (pieces, notes) = applicable_pieces(o, g, tol)?;
    let dz = o.dim();
    let mut prog = FiniteConvexProgram::new("AD-B'_OT explicit", Sense::Max);
    prog.notes = notes;
    if o.identity_of_indiscernibles {
        prog.notes
            .push("cost satisfies the identity of indiscernibles: the program is solvable".into());
    }
    let mut lambda_blocks: Vec<Vec<usize>> = Vec::new();
    let mut v_blocks: Vec<Vec<Vec<usize>>> = Vec::new();
    for (k, keep) in pieces.iter().enumerate() {
        lambda_blocks.push(prog.add_block(format!("lambda[{k}]"), keep.len(), VarCone::Nonneg));
        let mut vk = Vec::new();
        for &i in keep {
            vk.push(prog.add_block(format!("v[{i}][{k}]"), dz, VarCone::Free));
        }
        v_blocks.push(vk);
    }
    // objective: max sum lambda g_i(z_k + v/lambda); stored min form uses the
    // negated pieces shifted to the atom
    for (k, keep) in pieces.iter().enumerate() {
        let zk = &o.nominal.atoms[k].0;
        for (r, &i) in keep.iter().enumerate() {
            let shifted = FunctionExpr::affine_precompose(
                g.neg_pieces[i].clone(),
                Mat::identity(dz),
                zk.clone(),
            )?;
            let mut coords = v_blocks[k][r].clone();
            coords.push(lambda_blocks[k][r]);
            prog.objective
                .push(Term::new(FunctionExpr::perspective(shifted)?, coords));
        }
    }
    // per-atom mass: sum_i lambda_ik = p_k
    for (k, _) in pieces.iter().enumerate() {
        prog.add_equality(
            lambda_blocks[k].iter().map(|&c| (c, 1.0)).collect(),
            o.nominal.atoms[k].1,
        );
    }
    // support: lambda c_l(z_k + v/lambda) <= 0
    for (k, keep) in pieces.iter().enumerate() {
        let zk = &o.nominal.atoms[k].0;
        for (r, &i) in keep.iter().enumerate() {
            for (l, c) in o.support.constraints.iter().enumerate() {
                let shifted =
                    FunctionExpr::affine_precompose(c.clone(), Mat::identity(dz), zk.clone())?;
                let mut coords = v_blocks[k][r].clone();
                coords.push(lambda_blocks[k][r]);
                prog.constraints.push(ConstraintSum {
                    label: format!("support[{l}] piece {i} atom {k}"),
                    terms: vec![Term::new(FunctionExpr::perspective(shifted)?, coords)],
                    constant: 0.0,
                    nonlinear: !c.is_affine(),
                });
            }
        }
    }
    // budget: sum lambda d(z_k + v/lambda, z_k) <= radius
    {
        let mut terms = Vec::new();
        for (k, keep) in pieces.iter().enumerate() {
            let zk = &o.nominal.atoms[k].0;
            for (r, _) in keep.iter().enumerate() {
                let shifted = FunctionExpr::affine_precompose(
                    o.costs[k].clone(),
                    Mat::identity(dz),
                    zk.clone(),
                )?;
                let mut coords = v_blocks[k][r].clone();
                coords.push(lambda_blocks[k][r]);
                terms.push(Term::new(FunctionExpr::perspective(shifted)?, coords));
            }
        }
        prog.constraints.push(ConstraintSum {
            label: "transport budget".into(),
            terms,
            constant: -o.radius,
            nonlinear: true,
        });
    }
    Ok(prog)
}

/// Per-atom classification of an explicit-program solution.
#[derive(Debug, Clone)]
pub struct IndexPartition {
    /// piece indices with positive mass, per nominal atom
    pub i_plus: Vec<Vec<usize>>,
    /// vanished mass and offset
    pub i_zero: Vec<Vec<usize>>,
    /// vanished mass, nonzero offset (escape directions)
    pub i_inf: Vec<Vec<usize>>,
    /// pieces kept per atom (builder order)
    pub pieces: Vec<Vec<usize>>,
}

impl IndexPartition {
    pub fn escapes(&self) -> usize {
        self.i_inf.iter().map(|v| v.len()).sum()
    }

    pub fn max_escapes_per_atom(&self) -> usize {
        self.i_inf.iter().map(|v| v.len()).max().unwrap_or(0)
    }
}

/// Split the solved `(lambda, v)` into positive/zero/escape index sets.
/// Values below the solver's feasibility noise are snapped to zero before
/// the exact thresholds apply, and every escape candidate must pass the
/// recession test.
pub fn classify_indices(
    o: &OTAmbiguity,
    g: &Disutility,
    prog: &FiniteConvexProgram,
    sol: &Solution,
    tol: &Tolerances,
) -> Result<IndexPartition, OtError> {
    let (pieces, _) = applicable_pieces(o, g, tol)?;
    let snap = |v: f64| if v.abs() <= tol.feas * 10.0 { 0.0 } else { v };
    let mut i_plus = Vec::new();
    let mut i_zero = Vec::new();
    let mut i_inf = Vec::new();
    for (k, keep) in pieces.iter().enumerate() {
        let lambda = prog
            .block_values(&format!("lambda[{k}]"), &sol.x)
            .expect("lambda block");
        let mut plus = Vec::new();
        let mut zero = Vec::new();
        let mut inf = Vec::new();
        for (r, &i) in keep.iter().enumerate() {
            let l = snap(lambda[r]);
            let v: Vec<f64> = prog
                .block_values(&format!("v[{i}][{k}]"), &sol.x)
                .expect("v block")
                .iter()
                .map(|x| snap(*x))
                .collect();
            let vnorm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if l > tol.zero {
                plus.push(i);
            } else if vnorm <= tol.zero {
                zero.push(i);
            } else {
                if !recession_check(&o.support, &v, tol)? {
                    return Err(OtError::NotRecession { piece: i, atom: k });
                }
                if o.superlinear {
                    return Err(OtError::SuperlinearEscape { piece: i, atom: k });
                }
                inf.push(i);
            }
        }
        i_plus.push(plus);
        i_zero.push(zero);
        i_inf.push(inf);
    }
    Ok(IndexPartition {
        i_plus,
        i_zero,
        i_inf,
        pieces,
    })
}

/// The worst-case distribution when no escape directions are present:
/// atom `z_k + v_ik/lambda_ik` with probability `lambda_ik`.
pub fn optimal_distribution(
    o: &OTAmbiguity,
    g: &Disutility,
    prog: &FiniteConvexProgram,
    sol: &Solution,
    tol: &Tolerances,
) -> Result<DiscreteDistribution, OtError> {
    let part = classify_indices(o, g, prog, sol, tol)?;
    if part.escapes() > 0 {
        return Err(OtError::HasEscapeDirections);
    }
    let mut atoms = Vec::new();
    for (k, keep) in part.pieces.iter().enumerate() {
        let zk = &o.nominal.atoms[k].0;
        let lambda = prog
            .block_values(&format!("lambda[{k}]"), &sol.x)
            .expect("lambda block");
        for (r, &i) in keep.iter().enumerate() {
            let l = lambda[r];
            if l <= tol.zero {
                continue;
            }
            let v = prog
                .block_values(&format!("v[{i}][{k}]"), &sol.x)
                .expect("v block");
            atoms.push((
                zk.iter().zip(v).map(|(z, vv)| z + vv / l).collect::<Vec<f64>>(),
                l,
            ));
        }
    }
    let total: f64 = atoms.iter().map(|(_, p)| p).sum();
    for (_, p) in atoms.iter_mut() {
        *p /= total;
    }
    Ok(DiscreteDistribution::new(atoms)?)
}

/// The asymptotic family: positive atoms keep their positions with weights
/// scaled by `1 - |I_inf_k|/n`; escape atoms sit at `z_k + n v / p_k` with
/// weight `p_k / n`. Transport cost stays within the radius for every
/// admissible `n`, and the expected disutility is nondecreasing in `n`.
pub fn asymptotic_distribution(
    o: &OTAmbiguity,
    g: &Disutility,
    prog: &FiniteConvexProgram,
    sol: &Solution,
    n: usize,
    tol: &Tolerances,
) -> Result<DiscreteDistribution, OtError> {
    let part = classify_indices(o, g, prog, sol, tol)?;
    let need = part.max_escapes_per_atom();
    if n < need.max(1) {
        return Err(OtError::PreconditionN { n, need });
    }
    if part.escapes() == 0 {
        return optimal_distribution(o, g, prog, sol, tol);
    }
    let mut atoms = Vec::new();
    for (k, keep) in part.pieces.iter().enumerate() {
        let zk = &o.nominal.atoms[k].0;
        let pk = o.nominal.atoms[k].1;
        let shrink = 1.0 - part.i_inf[k].len() as f64 / n as f64;
        let lambda = prog
            .block_values(&format!("lambda[{k}]"), &sol.x)
            .expect("lambda block");
        for (r, &i) in keep.iter().enumerate() {
            let v = prog
                .block_values(&format!("v[{i}][{k}]"), &sol.x)
                .expect("v block");
            if part.i_plus[k].contains(&i) {
                let l = lambda[r];
                let w = l * shrink;
                if w > 0.0 {
                    atoms.push((
                        zk.iter().zip(v).map(|(z, vv)| z + vv / l).collect::<Vec<f64>>(),
                        w,
                    ));
                }
            } else if part.i_inf[k].contains(&i) {
                atoms.push((
                    zk.iter()
                        .zip(v)
                        .map(|(z, vv)| z + n as f64 * vv / pk)
                        .collect::<Vec<f64>>(),
                    pk / n as f64,
                ));
            }
        }
    }
    let total: f64 = atoms.iter().map(|(_, p)| p).sum();
    for (_, p) in atoms.iter_mut() {
        *p /= total;
    }
    Ok(DiscreteDistribution::new(atoms)?)
}

/// Decision-dependent variant: appends a convex decision block `x` to
/// (AP-W'_OT), with saddle pieces `g_i(x, z)` and a convex feasible set for
/// `x`. The explicit dual is `x`-parametric and is not emitted.
pub fn build_ot_primal_with_decision(
    o: &OTAmbiguity,
    pieces: &[SaddleFunction],
    x_set: &[FunctionExpr],
    tol: &Tolerances,
) -> Result<FiniteConvexProgram, OtError> {
    let dz = o.dim();
    let dx = pieces
        .first()
        .map(|s| s.dim_x())
        .ok_or_else(|| OtError::BadAmbiguity("at least one saddle piece is required".into()))?;
    for s in pieces {
        if s.dim_x() != dx || s.dim_z() != dz {
            return Err(OtError::BadAmbiguity("saddle piece dimensions differ".into()));
        }
    }
    let _ = tol;
    let nk = o.nominal.atoms.len();
    let mut prog = FiniteConvexProgram::new("AP-W'_OT+decision", Sense::Min);
    let x = prog.add_block("x", dx, VarCone::Free);
    let alpha = prog.add_block("alpha", nk, VarCone::Free);
    let beta = prog.add_block("beta", 1, VarCone::Nonneg);
    for (k, (_, pk)) in o.nominal.atoms.iter().enumerate() {
        prog.objective.push(Term::new(
            FunctionExpr::affine(vec![*pk], 0.0),
            vec![alpha[k]],
        ));
    }
    prog.objective.push(Term::new(
        FunctionExpr::affine(vec![o.radius], 0.0),
        beta.clone(),
    ));
    for (h, hexpr) in x_set.iter().enumerate() {
        prog.constraints.push(ConstraintSum {
            label: format!("decision set {h}"),
            terms: vec![Term::new(hexpr.clone(), x.clone())],
            constant: 0.0,
            nonlinear: !hexpr.is_affine(),
        });
    }
    for k in 0..nk {
        for (i, s) in pieces.iter().enumerate() {
            let y0 = prog.add_block(format!("y0[{i}][{k}]"), dz, VarCone::Free);
            let y1 = prog.add_block(format!("y1[{i}][{k}]"), dz, VarCone::Free);
            let mut coupling: Vec<Vec<(usize, f64)>> = (0..dz)
                .map(|r| vec![(y0[r], 1.0), (y1[r], 1.0)])
                .collect();
            // (-g_i(x, .))*(y0) = p_i(x) + (-q_i)*(y0 + Q_i' x)
            let mut terms = vec![Term::new(s.p().clone(), x.clone())];
            {
                let mut a = Mat::zeros(dz, dx + dz);
                for r in 0..dz {
                    for c in 0..dx {
                        a[(r, c)] = s.coupling()[(c, r)];
                    }
                    a[(r, dx + r)] = 1.0;
                }
                let composed =
                    FunctionExpr::affine_precompose(s.q_neg_conj().clone(), a, vec![0.0; dz])?;
                let mut coords = x.clone();
                coords.extend(&y0);
                terms.push(Term::new(composed, coords));
            }
            let cd = o.costs[k].conjugate()?;
            terms.extend(instantiate_conjugate(
                &mut prog,
                &cd,
                &y1,
                Some(beta[0]),
                &format!("auxd[{i}][{k}]"),
            )?);
            for (l, c) in o.support.constraints.iter().enumerate() {
                let y2 = prog.add_block(format!("y2[{i}][{l}][{k}]"), dz, VarCone::Free);
                let nu = prog.add_block(format!("nu[{i}][{l}][{k}]"), 1, VarCone::Nonneg);
                let cc = c.conjugate()?;
                terms.extend(instantiate_conjugate(
                    &mut prog,
                    &cc,
                    &y2,
                    Some(nu[0]),
                    &format!("auxc[{i}][{l}][{k}]"),
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
                label: format!("piece {i} atom {k}"),
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

/// Grid-LP oracle for the transport-ball worst case: masses on a grid with
/// per-nominal-atom totals and the transport budget row.
pub fn oracle_ot_worst_case(
    o: &OTAmbiguity,
    g: &Disutility,
    lo: &[f64],
    hi: &[f64],
    res: f64,
    tol: &Tolerances,
) -> Result<(f64, Vec<(Vec<f64>, f64)>), OtError> {
    let grid = crate::oracle::grid_points(lo, hi, res)
        .map_err(|e| OtError::BadAmbiguity(format!("oracle: {e}")))?;
    let nk = o.nominal.atoms.len();
    let mut obj = Vec::new();
    let mut group = Vec::new();
    let mut budget = Vec::new();
    let mut pts = Vec::new();
    for z in &grid {
        if !o.support.contains(z, tol.feas).map_err(DroError::from)? {
            continue;
        }
        let gv = match g.eval(z)? {
            Finite(v) => v,
            _ => continue,
        };
        for k in 0..nk {
            let c = match o.costs[k].eval(z)? {
                Finite(v) => v,
                _ => continue,
            };
            obj.push(gv);
            group.push(k);
            budget.push(c);
            pts.push(z.clone());
        }
    }
    let lp = crate::oracle::MassLp {
        obj,
        group,
        group_mass: o.nominal.atoms.iter().map(|(_, p)| *p).collect(),
        rows: vec![(budget, o.radius)],
    };
    let sol = crate::oracle::solve_mass_lp(&lp)
        .map_err(|e| OtError::BadAmbiguity(format!("oracle: {e}")))?;
    Ok((
        sol.value,
        sol.masses
            .iter()
            .map(|&(i, p)| (pts[i].clone(), p))
            .collect(),
    ))
}
