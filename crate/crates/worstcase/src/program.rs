//! Finite convex programs emitted by the reformulation builders.
//!
//! A program is a list of named variable blocks with cone domains, an
//! objective and inequality constraints given as sums of expression terms
//! over selected coordinates, and linear equalities. The solver always
//! minimizes the stored terms; a `Max` program stores the negated (convex)
//! objective and re-signs the reported value, so certificates stay uniform:
//! stored terms are convex, which means the objective is convex for `Min`
//! programs and concave for `Max` programs.

use crate::expr::{ExprError, FunctionExpr};
use crate::ext::{ext_add, ext_sum, ExtReal, Finite};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarCone {
    Free,
    Nonneg,
    /// Block is `(head..., tail)` with `||head||_2 <= tail`.
    Soc,
}

#[derive(Debug, Clone)]
pub struct VarBlock {
    /// Which reformulation symbol the block houses (`x`, `w0`, `lambda`, ...).
    pub name: String,
    pub dim: usize,
    pub cone: VarCone,
    pub offset: usize,
}

/// One summand: `expr` applied to the listed global coordinates.
#[derive(Debug, Clone)]
pub struct Term {
    pub expr: FunctionExpr,
    pub vars: Vec<usize>,
}

impl Term {
    pub fn new(expr: FunctionExpr, vars: Vec<usize>) -> Self {
        assert_eq!(expr.dim(), vars.len(), "term arity mismatch");
        Term { expr, vars }
    }

    pub fn eval(&self, x: &[f64]) -> Result<ExtReal, ExprError> {
        let sub: Vec<f64> = self.vars.iter().map(|&i| x[i]).collect();
        self.expr.eval(&sub)
    }
}

/// `constant + sum of terms <= 0`.
#[derive(Debug, Clone)]
pub struct ConstraintSum {
    pub label: String,
    pub terms: Vec<Term>,
    pub constant: f64,
    /// True when the constraint came from a non-affine source function;
    /// drives the Slater classification.
    pub nonlinear: bool,
}

impl ConstraintSum {
    pub fn value(&self, x: &[f64]) -> Result<ExtReal, ExprError> {
        let mut vals = vec![Finite(self.constant)];
        for t in &self.terms {
            vals.push(t.eval(x)?);
        }
        Ok(ext_sum(vals)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub struct FiniteConvexProgram {
    /// Which boxed reformulation produced this program.
    pub provenance: String,
    pub sense: Sense,
    pub blocks: Vec<VarBlock>,
    pub objective: Vec<Term>,
    pub obj_constant: f64,
    pub constraints: Vec<ConstraintSum>,
    /// Sparse rows `sum_i a_i x_i = b`.
    pub equalities: Vec<(Vec<(usize, f64)>, f64)>,
    /// Reformulation warnings (dropped pieces, one-sided bounds, ...).
    pub notes: Vec<String>,
}

impl FiniteConvexProgram {
    pub fn new(provenance: impl Into<String>, sense: Sense) -> Self {
        FiniteConvexProgram {
            provenance: provenance.into(),
            sense,
            blocks: Vec::new(),
            objective: Vec::new(),
            obj_constant: 0.0,
            constraints: Vec::new(),
            equalities: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Register a block and get its coordinate range.
    pub fn add_block(
        &mut self,
        name: impl Into<String>,
        dim: usize,
        cone: VarCone,
    ) -> Vec<usize> {
        let offset = self.num_vars();
        self.blocks.push(VarBlock {
            name: name.into(),
            dim,
            cone,
            offset,
        });
        (offset..offset + dim).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.blocks.last().map(|b| b.offset + b.dim).unwrap_or(0)
    }

    pub fn block_coords(&self, name: &str) -> Option<Vec<usize>> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .map(|b| (b.offset..b.offset + b.dim).collect())
    }

    pub fn block_values<'a>(&self, name: &str, x: &'a [f64]) -> Option<&'a [f64]> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .map(|b| &x[b.offset..b.offset + b.dim])
    }

    pub fn add_equality(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push((row, rhs));
    }

    /// Raw minimized value (sense-agnostic): `obj_constant + sum of terms`.
    pub fn min_form_value(&self, x: &[f64]) -> Result<ExtReal, ExprError> {
        let mut vals = vec![Finite(self.obj_constant)];
        for t in &self.objective {
            vals.push(t.eval(x)?);
        }
        Ok(ext_sum(vals)?)
    }

    /// Sense-adjusted objective value at a point.
    pub fn objective_value(&self, x: &[f64]) -> Result<ExtReal, ExprError> {
        let raw = self.min_form_value(x)?;
        Ok(match self.sense {
            Sense::Min => raw,
            Sense::Max => raw.neg(),
        })
    }

    /// Largest constraint/equality violation at a point (+inf terms included).
    pub fn max_violation(&self, x: &[f64]) -> Result<f64, ExprError> {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            match c.value(x)? {
                Finite(v) => worst = worst.max(v),
                ExtReal::PosInf => return Ok(f64::INFINITY),
                ExtReal::NegInf => {}
            }
        }
        for (row, rhs) in &self.equalities {
            let lhs: f64 = row.iter().map(|&(i, a)| a * x[i]).sum();
            worst = worst.max((lhs - rhs).abs());
        }
        for b in &self.blocks {
            match b.cone {
                VarCone::Free => {}
                VarCone::Nonneg => {
                    for i in b.offset..b.offset + b.dim {
                        worst = worst.max(-x[i]);
                    }
                }
                VarCone::Soc => {
                    let head = &x[b.offset..b.offset + b.dim - 1];
                    let tail = x[b.offset + b.dim - 1];
                    let n: f64 = head.iter().map(|v| v * v).sum::<f64>().sqrt();
                    worst = worst.max(n - tail);
                }
            }
        }
        Ok(worst)
    }

    /// Every variable block must appear in at least one expression or row.
    pub fn validate(&self) -> Result<(), ExprError> {
        let n = self.num_vars();
        let mut used = vec![false; n];
        for t in self.objective.iter().chain(
            self.constraints.iter().flat_map(|c| c.terms.iter()),
        ) {
            for &i in &t.vars {
                used[i] = true;
            }
        }
        for (row, _) in &self.equalities {
            for &(i, _) in row {
                used[i] = true;
            }
        }
        for b in &self.blocks {
            if b.cone != VarCone::Free {
                for i in b.offset..b.offset + b.dim {
                    used[i] = true;
                }
            }
        }
        if let Some(idx) = used.iter().position(|u| !u) {
            let block = self
                .blocks
                .iter()
                .find(|b| idx >= b.offset && idx < b.offset + b.dim)
                .map(|b| b.name.clone())
                .unwrap_or_default();
            return Err(ExprError::BadParameter(format!(
                "variable {idx} (block '{block}') appears in no expression"
            )));
        }
        Ok(())
    }

    /// Concavity check along a random chord for `Max` programs (convexity for
    /// `Min`): for feasible `a`, `b` and `theta` in [0,1], the stored
    /// (minimized) value satisfies the convexity inequality.
    pub fn chord_convexity_gap(
        &self,
        a: &[f64],
        b: &[f64],
        theta: f64,
    ) -> Result<f64, ExprError> {
        let mix: Vec<f64> = a
            .iter()
            .zip(b)
            .map(|(ai, bi)| theta * ai + (1.0 - theta) * bi)
            .collect();
        let va = self.min_form_value(a)?;
        let vb = self.min_form_value(b)?;
        let vm = self.min_form_value(&mix)?;
        // convex: vm <= theta va + (1-theta) vb; report max(0, violation)
        let bound = ext_add(
            crate::ext::ext_scale(theta, va)?,
            crate::ext::ext_scale(1.0 - theta, vb)?,
        )?;
        Ok(match (vm, bound) {
            (Finite(m), Finite(bd)) => (m - bd).max(0.0),
            (ExtReal::PosInf, ExtReal::PosInf) => 0.0,
            (ExtReal::PosInf, _) => f64::INFINITY,
            _ => 0.0,
        })
    }
}
