//! Extended-real arithmetic and the global tolerance policy.
//!
//! Every value produced by the function algebra is an [`ExtReal`]: a finite
//! double, `+inf` or `-inf`. The one sum that convex analysis leaves undefined,
//! `(+inf) + (-inf)`, is a hard error here rather than a silent NaN, and
//! `0 * (+/-inf)` is likewise rejected at this layer: the only place such a
//! limit has a meaning is perspective evaluation, which owns its own rule.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoundationError {
    /// `(+inf) + (-inf)` has no consistent value.
    #[error("indeterminate sum: (+inf) + (-inf)")]
    IndeterminateSum,
    /// `0 * (+/-inf)` is reserved for perspective semantics.
    #[error("indeterminate product: 0 * (+/-inf)")]
    IndeterminateProduct,
    #[error("invalid tolerance configuration: {0}")]
    BadTolerances(String),
}

/// An extended real number. Ordering is total: `-inf < finite < +inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

pub use ExtReal::{Finite, NegInf, PosInf};

impl ExtReal {
    pub fn finite(v: f64) -> Self {
        debug_assert!(v.is_finite(), "ExtReal::finite got {v}");
        Finite(v)
    }

    /// Classify an f64, mapping IEEE infinities to the extended tags.
    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            PosInf
        } else if v == f64::NEG_INFINITY {
            NegInf
        } else {
            debug_assert!(!v.is_nan());
            Finite(v)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Finite(_))
    }

    pub fn is_pos_inf(self) -> bool {
        matches!(self, PosInf)
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, NegInf)
    }

    /// Finite payload, or the IEEE infinity of the matching sign.
    pub fn as_f64(self) -> f64 {
        match self {
            NegInf => f64::NEG_INFINITY,
            Finite(v) => v,
            PosInf => f64::INFINITY,
        }
    }

    pub fn neg(self) -> ExtReal {
        match self {
            NegInf => PosInf,
            Finite(v) => Finite(-v),
            PosInf => NegInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => write!(f, "-inf"),
            Finite(v) => write!(f, "{v}"),
            PosInf => write!(f, "+inf"),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_total(other))
    }
}

impl ExtReal {
    pub fn cmp_total(&self, other: &Self) -> Ordering {
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.partial_cmp(b).expect("NaN in ExtReal"),
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self.cmp_total(&other) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self.cmp_total(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

/// `a + b` under extended arithmetic; `(+inf) + (-inf)` is an error.
pub fn ext_add(a: ExtReal, b: ExtReal) -> Result<ExtReal, FoundationError> {
    match (a, b) {
        (PosInf, NegInf) | (NegInf, PosInf) => Err(FoundationError::IndeterminateSum),
        (PosInf, _) | (_, PosInf) => Ok(PosInf),
        (NegInf, _) | (_, NegInf) => Ok(NegInf),
        (Finite(x), Finite(y)) => Ok(Finite(x + y)),
    }
}

/// `t * a` for `t >= 0`; `0 * (+/-inf)` is an error (perspective logic owns it).
pub fn ext_scale(t: f64, a: ExtReal) -> Result<ExtReal, FoundationError> {
    debug_assert!(t >= 0.0);
    match a {
        Finite(v) => Ok(Finite(t * v)),
        inf => {
            if t == 0.0 {
                Err(FoundationError::IndeterminateProduct)
            } else {
                Ok(inf)
            }
        }
    }
}

/// Sum a sequence of extended reals, failing on any indeterminate pair.
pub fn ext_sum<I: IntoIterator<Item = ExtReal>>(vals: I) -> Result<ExtReal, FoundationError> {
    let mut acc = Finite(0.0);
    for v in vals {
        acc = ext_add(acc, v)?;
    }
    Ok(acc)
}

/// Shared tolerance policy. `zero <= feas <= 10 * opt` and all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Admissible constraint slack.
    pub feas: f64,
    /// Admissible objective gap.
    pub opt: f64,
    /// Treat-as-zero threshold for probabilities and multipliers.
    pub zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas: 1e-7,
            opt: 1e-6,
            zero: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn new(feas: f64, opt: f64, zero: f64) -> Result<Self, FoundationError> {
        if !(feas > 0.0 && opt > 0.0 && zero > 0.0) {
            return Err(FoundationError::BadTolerances(
                "all tolerances must be strictly positive".into(),
            ));
        }
        if !(zero <= feas && feas <= opt * 10.0) {
            return Err(FoundationError::BadTolerances(format!(
                "need zero <= feas <= 10*opt, got zero={zero}, feas={feas}, opt={opt}"
            )));
        }
        Ok(Tolerances {
            feas,
            opt,
            zero,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn absorbing_infinity() {
        assert_eq!(ext_add(PosInf, Finite(3.0)), Ok(PosInf));
        assert_eq!(ext_add(Finite(2.0), Finite(3.0)), Ok(Finite(5.0)));
        assert_eq!(
            ext_add(PosInf, NegInf),
            Err(FoundationError::IndeterminateSum)
        );
    }

    #[test]
    fn scaling() {
        assert_eq!(ext_scale(2.0, PosInf), Ok(PosInf));
        assert_eq!(ext_scale(0.0, Finite(7.0)), Ok(Finite(0.0)));
        assert_eq!(
            ext_scale(0.0, PosInf),
            Err(FoundationError::IndeterminateProduct)
        );
    }

    #[test]
    fn ordering_is_total() {
        assert!(NegInf < Finite(-1e300));
        assert!(Finite(1e300) < PosInf);
        assert!(NegInf < PosInf);
    }

    #[test]
    fn tolerance_invariants() {
        assert!(Tolerances::new(1e-7, 1e-6, 1e-9).is_ok());
        assert!(Tolerances::new(0.0, 1e-6, 1e-9).is_err());
        assert!(Tolerances::new(1e-3, 1e-6, 1e-9).is_err());
        assert!(Tolerances::new(1e-7, 1e-6, 1e-6).is_err());
    }

    fn arb_ext() -> impl Strategy<Value = ExtReal> {
        prop_oneof![
            Just(NegInf),
            Just(PosInf),
            (-1e6f64..1e6).prop_map(Finite),
        ]
    }

    proptest! {
        #[test]
        fn add_commutes(a in arb_ext(), b in arb_ext()) {
            prop_assert_eq!(ext_add(a, b).ok(), ext_add(b, a).ok());
        }

        // Associativity on triples where all partial sums are defined.
        #[test]
        fn add_associates(a in arb_ext(), b in arb_ext(), c in arb_ext()) {
            let left = ext_add(a, b).and_then(|ab| ext_add(ab, c));
            let right = ext_add(b, c).and_then(|bc| ext_add(a, bc));
            if let (Ok(l), Ok(r)) = (left, right) {
                match (l, r) {
                    (Finite(x), Finite(y)) => prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs())),
                    _ => prop_assert_eq!(l, r),
                }
            }
        }

        // a <= b implies a + c <= b + c whenever both sides are defined.
        #[test]
        fn order_respects_add(a in arb_ext(), b in arb_ext(), c in arb_ext()) {
            if a <= b {
                if let (Ok(ac), Ok(bc)) = (ext_add(a, c), ext_add(b, c)) {
                    prop_assert!(ac <= bc);
                }
            }
        }
    }
}
