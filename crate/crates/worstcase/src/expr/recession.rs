//! Perspective evaluation and recession functions.
//!
//! The perspective of a proper, closed, convex `f` is `t f(x/t)` for `t > 0`
//! and the support function of `dom(f*)` at `t = 0`. The naive limit
//! `lim_{t->0} t f(x/t)` is wrong in general (it can fail to be closed), so
//! every atom ships an explicit recession evaluator and the combinators chain
//! them; the lim-inf definition only appears in the oracle tests.

use super::{Atom, ExprError, FunctionExpr, Node};
use crate::ext::{ext_add, ext_scale, ext_sum, ExtReal, Finite, PosInf};
use crate::linalg::dot;

impl FunctionExpr {
    /// `t f(x/t)` for `t > 0`; the recession value at `t = 0`; `+inf` for `t < 0`.
    pub fn perspective_eval(&self, x: &[f64], t: f64) -> Result<ExtReal, ExprError> {
        if x.len() != self.dim() {
            return Err(ExprError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if t < 0.0 {
            return Ok(PosInf);
        }
        if t == 0.0 {
            return self.recession_value(x);
        }
        let scaled: Vec<f64> = x.iter().map(|v| v / t).collect();
        Ok(ext_scale(t, self.eval(&scaled)?)?)
    }

    /// The recession function `r_f(x) = sup { w'x : w in dom(f*) }`, which is
    /// also the perspective of `f` at `(x, 0)`.
    pub fn recession_value(&self, x: &[f64]) -> Result<ExtReal, ExprError> {
        if x.len() != self.dim() {
            return Err(ExprError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        self.recession_unchecked(x)
    }

    fn recession_unchecked(&self, x: &[f64]) -> Result<ExtReal, ExprError> {
        match self.node() {
            Node::Atom(atom) => atom_recession(atom, x),
            Node::AffinePre { a, inner, .. } => {
                // offsets do not move recession: r_{f(A.+b)} = r_f(A.)
                let y = a.mul_vec(x);
                inner.recession_unchecked(&y)
            }
            Node::PlusAffine { a, inner, .. } => {
                let base = inner.recession_unchecked(x)?;
                Ok(ext_add(base, Finite(dot(a, x)))?)
            }
            Node::Scale { t, inner } => Ok(ext_scale(*t, inner.recession_unchecked(x)?)?),
            Node::SumBlocks { terms } => {
                let mut vals = Vec::with_capacity(terms.len());
                for (f, block) in terms {
                    let sub: Vec<f64> = block.iter().map(|&i| x[i]).collect();
                    vals.push(f.recession_unchecked(&sub)?);
                }
                Ok(ext_sum(vals)?)
            }
            // perspectives are positively homogeneous: they are their own
            // recession function
            Node::Perspective { inner } => {
                let (y, t) = x.split_at(self.dim() - 1);
                inner.perspective_eval(y, t[0])
            }
            Node::SublevelShift { inner } => {
                let (w, s) = x.split_at(self.dim() - 1);
                let v = inner.recession_unchecked(w)?;
                let total = match v {
                    PosInf => PosInf,
                    other => ext_add(other, Finite(s[0]))?,
                };
                Ok(if total <= Finite(0.0) {
                    Finite(0.0)
                } else {
                    PosInf
                })
            }
            Node::MaxOfConcave { .. } => Err(ExprError::NotConvex(
                "recession function of a max-of-concave node is undefined here".into(),
            )),
        }
    }
}

fn indicator_of(cond: bool) -> ExtReal {
    if cond {
        Finite(0.0)
    } else {
        PosInf
    }
}

fn atom_recession(atom: &Atom, x: &[f64]) -> Result<ExtReal, ExprError> {
    Ok(match atom {
        // dom(f*) = {a}
        Atom::Affine { a, .. } => Finite(dot(a, x)),
        // dom(f*) = R^n
        Atom::IndicatorSingleton { .. } => indicator_of(x.iter().all(|v| *v == 0.0)),
        // indicator of the box's recession cone
        Atom::IndicatorBox { lo, hi } => {
            let ok = x.iter().zip(lo.iter().zip(hi)).all(|(xi, (l, h))| {
                (*xi <= 0.0 || *h == f64::INFINITY) && (*xi >= 0.0 || *l == f64::NEG_INFINITY)
            });
            indicator_of(ok)
        }
        Atom::IndicatorNormBall { .. } => indicator_of(x.iter().all(|v| *v == 0.0)),
        Atom::NormPower {
            p, weight, norm, ..
        } => {
            if *p == 1.0 {
                // positively homogeneous: equals itself
                Finite(weight * norm.eval(x))
            } else {
                // p in (1, inf): dom(f*) = R^n; p = inf: ball recedes nowhere
                indicator_of(x.iter().all(|v| *v == 0.0))
            }
        }
        // a perspective, hence positively homogeneous
        Atom::QuadOverLin => {
            let (x1, x2) = (x[0], x[1]);
            if x2 > 0.0 {
                Finite(x1 * x1 / x2)
            } else if x2 == 0.0 && x1 == 0.0 {
                Finite(0.0)
            } else {
                PosInf
            }
        }
        // dom(f*) = [0, inf) for sign > 0, (-inf, 0] for sign < 0
        Atom::Exponential { sign } => indicator_of(sign * x[0] <= 0.0),
        // dom(exp) = R
        Atom::NegEntropy => indicator_of(x[0] == 0.0),
        // dom((-ln)*) = (-inf, 0)
        Atom::NegLog => indicator_of(x[0] >= 0.0),
        // dom(-ln) = (0, inf)
        Atom::NegLogConj => indicator_of(x[0] <= 0.0),
        // support functions are positively homogeneous
        Atom::SupportOfBox { .. } => super::eval_atom(atom, x),
    })
}
