//! Extended-real-valued convex functions as atom/combinator trees.
//!
//! Every [`FunctionExpr`] carries proper/closed/convex certificates fixed at
//! construction, evaluates to an [`ExtReal`] (`+inf` outside its domain), and
//! knows its conjugate and recession function in closed form wherever the
//! rule table permits.

mod conjugate;
mod recession;
mod saddle;

pub use conjugate::{norm_power_conjugate, scale_conjugate, ConjugateResult, Exactness, NormPowerConjugate, ScaleRule};
pub use saddle::SaddleFunction;

use crate::ext::{ext_add, ext_scale, ext_sum, ExtReal, Finite, PosInf};
use crate::linalg::{dot, Mat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("scale factor must be strictly positive, got {0}")]
    NonpositiveScale(f64),
    #[error("sum blocks overlap or exceed the declared dimension")]
    OverlappingBlocks,
    #[error("unsupported composition: {0}")]
    UnsupportedComposition(String),
    #[error("expression is not certified convex: {0}")]
    NotConvex(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Foundation(#[from] crate::ext::FoundationError),
}

/// Norms with known duals: `L1* = LInf`, `L2* = L2`, `LInf* = L1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

impl Norm {
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::LInf,
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::LInf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// A subgradient of `x -> ||x||` at `x` (any selection at kinks).
    pub fn subgrad(self, x: &[f64]) -> Vec<f64> {
        match self {
            Norm::L1 => x.iter().map(|v| v.signum() * f64::from(*v != 0.0)).collect(),
            Norm::L2 => {
                let n = self.eval(x);
                if n <= 1e-300 {
                    vec![0.0; x.len()]
                } else {
                    x.iter().map(|v| v / n).collect()
                }
            }
            Norm::LInf => {
                let mut g = vec![0.0; x.len()];
                if let Some((i, v)) = x
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                {
                    if *v != 0.0 {
                        g[i] = v.signum();
                    }
                }
                g
            }
        }
    }
}

/// Primitive proper, closed, convex functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// `a'x + b`
    Affine { a: Vec<f64>, b: f64 },
    /// Indicator of `{point}`.
    IndicatorSingleton { point: Vec<f64> },
    /// Indicator of `[lo, hi]`, bounds may be infinite.
    IndicatorBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Indicator of `{x : ||x - center|| <= radius}`.
    IndicatorNormBall {
        center: Vec<f64>,
        radius: f64,
        norm: Norm,
    },
    /// `weight * ||x||^p` for `p in [1, inf)`; `p = inf` is the unit-ball
    /// indicator convention.
    NormPower {
        p: f64,
        weight: f64,
        norm: Norm,
        dim: usize,
    },
    /// Closed perspective of the square: `x1^2/x2` on `x2 > 0`, `delta_0(x1)`
    /// at `x2 = 0`, `+inf` for `x2 < 0`.
    QuadOverLin,
    /// `exp(sign * x)`, one variable, `sign != 0`.
    Exponential { sign: f64 },
    /// `x ln x - x` on `x >= 0` (conjugate partner of the exponential).
    NegEntropy,
    /// `-ln x` on `x > 0`.
    NegLog,
    /// `-1 - ln(-w)` on `w < 0` (conjugate partner of `-ln`).
    NegLogConj,
    /// Support function of `[lo, hi]`.
    SupportOfBox { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Atom(Atom),
    /// `x -> inner(A x + b)`
    AffinePre {
        a: Mat,
        b: Vec<f64>,
        inner: Box<FunctionExpr>,
    },
    /// `x -> inner(x) + a'x + b`
    PlusAffine {
        a: Vec<f64>,
        b: f64,
        inner: Box<FunctionExpr>,
    },
    /// `x -> t * inner(x)`, `t > 0`
    Scale { t: f64, inner: Box<FunctionExpr> },
    /// Sum of terms over pairwise-disjoint variable blocks.
    SumBlocks { terms: Vec<(FunctionExpr, Vec<usize>)> },
    /// `(x, t) -> t * inner(x/t)` closed at `t = 0` via the recession
    /// function; `t` is the last coordinate.
    Perspective { inner: Box<FunctionExpr> },
    /// `(w, s) -> delta(inner(w) + s <= 0)`; `s` is the last coordinate.
    SublevelShift { inner: Box<FunctionExpr> },
    /// `x -> max_i -neg_pieces[i](x)`. Not convex: only the ambiguity-set
    /// builders may consume this node, piece by piece.
    MaxOfConcave { neg_pieces: Vec<FunctionExpr> },
}

/// Certificates computed at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certs {
    pub convex: bool,
    /// `dom = R^dim` certified.
    pub full_dom: bool,
    /// Domain certified to have nonempty interior.
    pub full_dim_dom: bool,
    pub affine: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionExpr {
    node: Node,
    dim: usize,
    certs: Certs,
}

impl FunctionExpr {
    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn certs(&self) -> Certs {
        self.certs
    }

    pub fn is_convex(&self) -> bool {
        self.certs.convex
    }

    pub fn is_affine(&self) -> bool {
        self.certs.affine
    }

    pub fn has_full_domain(&self) -> bool {
        self.certs.full_dom
    }

    // ---- atom constructors ----

    pub fn affine(a: Vec<f64>, b: f64) -> Self {
        let dim = a.len();
        FunctionExpr {
            node: Node::Atom(Atom::Affine { a, b }),
            dim,
            certs: Certs {
                convex: true,
                full_dom: true,
                full_dim_dom: true,
                affine: true,
            },
        }
    }

    pub fn constant(dim: usize, b: f64) -> Self {
        Self::affine(vec![0.0; dim], b)
    }

    pub fn indicator_singleton(point: Vec<f64>) -> Self {
        let dim = point.len();
        FunctionExpr {
            node: Node::Atom(Atom::IndicatorSingleton { point }),
            dim,
            certs: Certs {
                convex: true,
                full_dom: false,
                full_dim_dom: false,
                affine: false,
            },
        }
    }

    pub fn indicator_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ExprError> {
        if lo.len() != hi.len() {
            return Err(ExprError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(ExprError::BadParameter("empty box: lo > hi".into()));
        }
        let dim = lo.len();
        let full = lo.iter().all(|l| *l == f64::NEG_INFINITY)
            && hi.iter().all(|h| *h == f64::INFINITY);
        let full_dim = lo.iter().zip(&hi).all(|(l, h)| l < h);
        Ok(FunctionExpr {
            node: Node::Atom(Atom::IndicatorBox { lo, hi }),
            dim,
            certs: Certs {
                convex: true,
                full_dom: full,
                full_dim_dom: full_dim,
                affine: false,
            },
        })
    }

    pub fn indicator_norm_ball(
        center: Vec<f64>,
        radius: f64,
        norm: Norm,
    ) -> Result<Self, ExprError> {
        if radius < 0.0 {
            return Err(ExprError::BadParameter(format!(
                "norm ball radius must be nonnegative, got {radius}"
            )));
        }
        let dim = center.len();
        Ok(FunctionExpr {
            node: Node::Atom(Atom::IndicatorNormBall {
                center,
                radius,
                norm,
            }),
            dim,
            certs: Certs {
                convex: true,
                full_dom: false,
                full_dim_dom: radius > 0.0,
                affine: false,
            },
        })
    }

    pub fn norm_power(p: f64, weight: f64, norm: Norm, dim: usize) -> Result<Self, ExprError> {
        if !(p >= 1.0) {
            return Err(ExprError::BadParameter(format!(
                "norm power needs p >= 1, got {p}"
            )));
        }
        if weight < 0.0 {
            return Err(ExprError::BadParameter(format!(
                "norm power weight must be nonnegative, got {weight}"
            )));
        }
        let ball = p.is_infinite();
        Ok(FunctionExpr {
            node: Node::Atom(Atom::NormPower {
                p,
                weight,
                norm,
                dim,
            }),
            dim,
            certs: Certs {
                convex: true,
                full_dom: !ball,
                full_dim_dom: true,
                affine: false,
            },
        })
    }

    pub fn quad_over_lin() -> Self {
        FunctionExpr {
            node: Node::Atom(Atom::QuadOverLin),
            dim: 2,
            certs: Certs {
                convex: true,
                full_dom: false,
                full_dim_dom: true,
                affine: false,
            },
        }
    }

    pub fn exponential(sign: f64) -> Result<Self, ExprError> {
        if sign == 0.0 || !sign.is_finite() {
            return Err(ExprError::BadParameter(format!(
                "exponential sign must be finite and nonzero, got {sign}"
            )));
        }
        Ok(FunctionExpr {
            node: Node::Atom(Atom::Exponential { sign }),
            dim: 1,
            certs: Certs {
                convex: true,
                full_dom: true,
                full_dim_dom: true,
                affine: false,
            },
        })
    }

    pub fn neg_entropy() -> Self {
        FunctionExpr {
            node: Node::Atom(Atom::NegEntropy),
            dim: 1,
            certs: Certs {
                convex: true,
                full_dom: false,
                full_dim_dom: true,
                affine: false,
            },
        }
    }

    pub fn neg_log() -> Self {
        FunctionExpr {
            node: Node::Atom(Atom::NegLog),
            dim: 1,
            certs: Certs {
                convex: true,
                full_dom: false,
                full_dim_dom: true,
                affine: false,
            },
        }
    }

    pub fn neg_log_conj() -> Self {
        FunctionExpr {
            node: Node::Atom(Atom::NegLogConj),
            dim: 1,
            certs: Certs {
                convex: true,
                full_dom: false,
                full_dim_dom: true,
                affine: false,
            },
        }
    }

    pub fn support_of_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ExprError> {
        if lo.len() != hi.len() {
            return Err(ExprError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(ExprError::BadParameter("empty box: lo > hi".into()));
        }
        let dim = lo.len();
        let bounded = lo.iter().all(|l| l.is_finite()) && hi.iter().all(|h| h.is_finite());
        Ok(FunctionExpr {
            node: Node::Atom(Atom::SupportOfBox { lo, hi }),
            dim,
            certs: Certs {
                convex: true,
                full_dom: bounded,
                full_dim_dom: true,
                affine: false,
            },
        })
    }

    // ---- combinators ----

    pub fn affine_precompose(inner: FunctionExpr, a: Mat, b: Vec<f64>) -> Result<Self, ExprError> {
        if a.rows != inner.dim || b.len() != inner.dim {
            return Err(ExprError::DimensionMismatch {
                expected: inner.dim,
                got: a.rows,
            });
        }
        let dim = a.cols;
        let certs = Certs {
            convex: inner.certs.convex,
            full_dom: inner.certs.full_dom,
            full_dim_dom: inner.certs.full_dom,
            affine: inner.certs.affine,
        };
        Ok(FunctionExpr {
            node: Node::AffinePre {
                a,
                b,
                inner: Box::new(inner),
            },
            dim,
            certs,
        })
    }

    /// Convenience: `inner` applied to a subset of an `outer_dim`-vector.
    pub fn on_coords(
        inner: FunctionExpr,
        coords: &[usize],
        outer_dim: usize,
    ) -> Result<Self, ExprError> {
        if coords.len() != inner.dim {
            return Err(ExprError::DimensionMismatch {
                expected: inner.dim,
                got: coords.len(),
            });
        }
        let mut a = Mat::zeros(inner.dim, outer_dim);
        for (r, &c) in coords.iter().enumerate() {
            a[(r, c)] = 1.0;
        }
        let b = vec![0.0; inner.dim];
        Self::affine_precompose(inner, a, b)
    }

    pub fn plus_affine(inner: FunctionExpr, a: Vec<f64>, b: f64) -> Result<Self, ExprError> {
        if a.len() != inner.dim {
            return Err(ExprError::DimensionMismatch {
                expected: inner.dim,
                got: a.len(),
            });
        }
        let dim = inner.dim;
        let certs = Certs {
            affine: inner.certs.affine,
            ..inner.certs
        };
        Ok(FunctionExpr {
            node: Node::PlusAffine {
                a,
                b,
                inner: Box::new(inner),
            },
            dim,
            certs,
        })
    }

    pub fn plus_const(inner: FunctionExpr, b: f64) -> Self {
        let dim = inner.dim;
        Self::plus_affine(inner, vec![0.0; dim], b).expect("dims match")
    }

    pub fn scale(t: f64, inner: FunctionExpr) -> Result<Self, ExprError> {
        if !(t > 0.0) {
            return Err(ExprError::NonpositiveScale(t));
        }
        let dim = inner.dim;
        let certs = inner.certs;
        Ok(FunctionExpr {
            node: Node::Scale {
                t,
                inner: Box::new(inner),
            },
            dim,
            certs,
        })
    }

    pub fn sum_blocks(
        dim: usize,
        terms: Vec<(FunctionExpr, Vec<usize>)>,
    ) -> Result<Self, ExprError> {
        let mut seen = vec![false; dim];
        for (f, block) in &terms {
            if f.dim != block.len() {
                return Err(ExprError::DimensionMismatch {
                    expected: f.dim,
                    got: block.len(),
                });
            }
            for &i in block {
                if i >= dim || seen[i] {
                    return Err(ExprError::OverlappingBlocks);
                }
                seen[i] = true;
            }
        }
        let certs = Certs {
            convex: terms.iter().all(|(f, _)| f.certs.convex),
            full_dom: terms.iter().all(|(f, _)| f.certs.full_dom),
            full_dim_dom: terms.iter().all(|(f, _)| f.certs.full_dim_dom),
            affine: terms.iter().all(|(f, _)| f.certs.affine),
        };
        Ok(FunctionExpr {
            node: Node::SumBlocks { terms },
            dim,
            certs,
        })
    }

    pub fn perspective(inner: FunctionExpr) -> Result<Self, ExprError> {
        if !inner.certs.convex {
            return Err(ExprError::NotConvex(
                "perspective requires a convex inner function".into(),
            ));
        }
        let dim = inner.dim + 1;
        let certs = Certs {
            convex: true,
            full_dom: false,
            full_dim_dom: inner.certs.full_dim_dom,
            affine: false,
        };
        Ok(FunctionExpr {
            node: Node::Perspective {
                inner: Box::new(inner),
            },
            dim,
            certs,
        })
    }

    pub fn sublevel_shift(inner: FunctionExpr) -> Result<Self, ExprError> {
        if !inner.certs.convex {
            return Err(ExprError::NotConvex(
                "sublevel sets require a convex inner function".into(),
            ));
        }
        let dim = inner.dim + 1;
        Ok(FunctionExpr {
            node: Node::SublevelShift {
                inner: Box::new(inner),
            },
            dim,
            certs: Certs {
                convex: true,
                full_dom: false,
                full_dim_dom: true,
                affine: false,
            },
        })
    }

    pub fn max_of_concave(neg_pieces: Vec<FunctionExpr>) -> Result<Self, ExprError> {
        let dim = neg_pieces
            .first()
            .map(|f| f.dim)
            .ok_or_else(|| ExprError::BadParameter("max of concave needs pieces".into()))?;
        for f in &neg_pieces {
            if f.dim != dim {
                return Err(ExprError::DimensionMismatch {
                    expected: dim,
                    got: f.dim,
                });
            }
            if !f.certs.convex {
                return Err(ExprError::NotConvex(
                    "each negated piece must be convex".into(),
                ));
            }
        }
        Ok(FunctionExpr {
            node: Node::MaxOfConcave { neg_pieces },
            dim,
            certs: Certs {
                convex: false,
                full_dom: false,
                full_dim_dom: false,
                affine: false,
            },
        })
    }

    // ---- evaluation ----

    /// Evaluate; `+inf` outside the domain.
    pub fn eval(&self, x: &[f64]) -> Result<ExtReal, ExprError> {
        if x.len() != self.dim {
            return Err(ExprError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.eval_unchecked(x)
    }

    fn eval_unchecked(&self, x: &[f64]) -> Result<ExtReal, ExprError> {
        match &self.node {
            Node::Atom(atom) => Ok(eval_atom(atom, x)),
            Node::AffinePre { a, b, inner } => {
                let mut y = a.mul_vec(x);
                for (yi, bi) in y.iter_mut().zip(b) {
                    *yi += bi;
                }
                inner.eval_unchecked(&y)
            }
            Node::PlusAffine { a, b, inner } => {
                let base = inner.eval_unchecked(x)?;
                Ok(ext_add(base, Finite(dot(a, x) + b))?)
            }
            Node::Scale { t, inner } => Ok(ext_scale(*t, inner.eval_unchecked(x)?)?),
            Node::SumBlocks { terms } => {
                let mut vals = Vec::with_capacity(terms.len());
                for (f, block) in terms {
                    let sub: Vec<f64> = block.iter().map(|&i| x[i]).collect();
                    vals.push(f.eval_unchecked(&sub)?);
                }
                Ok(ext_sum(vals)?)
            }
            Node::Perspective { inner } => {
                let (y, t) = x.split_at(self.dim - 1);
                inner.perspective_eval(y, t[0])
            }
            Node::SublevelShift { inner } => {
                let (w, s) = x.split_at(self.dim - 1);
                let v = inner.eval_unchecked(w)?;
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
            Node::MaxOfConcave { neg_pieces } => {
                let mut best = crate::ext::NegInf;
                for f in neg_pieces {
                    let v = f.eval_unchecked(x)?.neg();
                    best = best.max(v);
                }
                Ok(best)
            }
        }
    }

    /// True when `x` lies in the domain.
    pub fn in_domain(&self, x: &[f64]) -> Result<bool, ExprError> {
        Ok(!self.eval(x)?.is_pos_inf())
    }
}

fn eval_atom(atom: &Atom, x: &[f64]) -> ExtReal {
    match atom {
        Atom::Affine { a, b } => Finite(dot(a, x) + b),
        Atom::IndicatorSingleton { point } => {
            if x.iter().zip(point).all(|(xi, pi)| xi == pi) {
                Finite(0.0)
            } else {
                PosInf
            }
        }
        Atom::IndicatorBox { lo, hi } => {
            let inside = x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(xi, (l, h))| *xi >= *l && *xi <= *h);
            if inside {
                Finite(0.0)
            } else {
                PosInf
            }
        }
        Atom::IndicatorNormBall {
            center,
            radius,
            norm,
        } => {
            let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
            if norm.eval(&d) <= *radius {
                Finite(0.0)
            } else {
                PosInf
            }
        }
        Atom::NormPower {
            p, weight, norm, ..
        } => {
            let n = norm.eval(x);
            if p.is_infinite() {
                if n <= 1.0 {
                    Finite(0.0)
                } else {
                    PosInf
                }
            } else {
                Finite(weight * n.powf(*p))
            }
        }
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
        Atom::Exponential { sign } => Finite((sign * x[0]).exp()),
        Atom::NegEntropy => {
            let v = x[0];
            if v > 0.0 {
                Finite(v * v.ln() - v)
            } else if v == 0.0 {
                Finite(0.0)
            } else {
                PosInf
            }
        }
        Atom::NegLog => {
            if x[0] > 0.0 {
                Finite(-x[0].ln())
            } else {
                PosInf
            }
        }
        Atom::NegLogConj => {
            if x[0] < 0.0 {
                Finite(-1.0 - (-x[0]).ln())
            } else {
                PosInf
            }
        }
        Atom::SupportOfBox { lo, hi } => {
            let mut total = 0.0;
            for (wi, (l, h)) in x.iter().zip(lo.iter().zip(hi)) {
                let v = if *wi > 0.0 {
                    wi * h
                } else if *wi < 0.0 {
                    wi * l
                } else {
                    0.0
                };
                if v == f64::INFINITY {
                    return PosInf;
                }
                total += v;
            }
            Finite(total)
        }
    }
}
