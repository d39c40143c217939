//! JSON problem-spec schema and canonical report serialization.
//!
//! Atoms are referenced by registered names with parameter objects, so specs
//! stay language-agnostic and machine-writable. Parsing reports the JSON
//! pointer path of the offending element. Serialization uses sorted keys
//! (canonical) and floats rounded to 12 significant digits.

use crate::cone::{CConvexFunction, ProperCone};
use crate::dro::{
    AmbiguitySet, DiscreteDistribution, Disutility, GeneralizedAmbiguitySet,
    GeneralizedComponent, GeneralizedMoment,
};
use crate::expr::{FunctionExpr, Norm, SaddleFunction};
use crate::ext::Tolerances;
use crate::linalg::Mat;
use crate::ot::{wasserstein_cost, OTAmbiguity};
use crate::program::{FiniteConvexProgram, Sense, Term, VarCone};
use crate::robust::{RobustProblem, SetAssignment, UncertaintySet};
use serde_json::{json, Value};
use thiserror::Error;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema error at {path}: {message}")]
    At { path: String, message: String },
    #[error("unsupported composition: {0}")]
    Unsupported(String),
}

fn err<T>(path: &str, message: impl Into<String>) -> Result<T, SchemaError> {
    Err(SchemaError::At {
        path: path.to_string(),
        message: message.into(),
    })
}

macro_rules! bail_expr {
    ($path:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return err($path, format!("{e}")),
        }
    };
}

// ---- low-level value readers ----

fn get<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value, SchemaError> {
    v.get(key)
        .ok_or_else(|| SchemaError::At {
            path: format!("{path}/{key}"),
            message: "missing field".into(),
        })
}

fn as_f64(v: &Value, path: &str) -> Result<f64, SchemaError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| SchemaError::At {
                path: path.into(),
                message: "not a finite number".into(),
            }),
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        Value::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Value::Null => Ok(f64::INFINITY),
        _ => err(path, "expected a number"),
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize, SchemaError> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| SchemaError::At {
            path: path.into(),
            message: "expected a nonnegative integer".into(),
        })
}

fn vec_f64(v: &Value, path: &str) -> Result<Vec<f64>, SchemaError> {
    let arr = v.as_array().ok_or_else(|| SchemaError::At {
        path: path.into(),
        message: "expected an array of numbers".into(),
    })?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| as_f64(x, &format!("{path}/{i}")))
        .collect()
}

fn vec_f64_signed_inf(v: &Value, path: &str, neg: bool) -> Result<Vec<f64>, SchemaError> {
    // nulls default to +inf; lower bounds read them as -inf
    let mut out = vec_f64(v, path)?;
    if neg {
        let arr = v.as_array().unwrap();
        for (i, item) in arr.iter().enumerate() {
            if item.is_null() {
                out[i] = f64::NEG_INFINITY;
            }
        }
    }
    Ok(out)
}

fn matrix(v: &Value, path: &str) -> Result<Mat, SchemaError> {
    let arr = v.as_array().ok_or_else(|| SchemaError::At {
        path: path.into(),
        message: "expected an array of rows".into(),
    })?;
    let rows = arr
        .iter()
        .enumerate()
        .map(|(i, r)| vec_f64(r, &format!("{path}/{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return err(path, "matrix needs at least one row");
    }
    Ok(Mat::from_rows(rows))
}

fn norm(v: &Value, path: &str) -> Result<Norm, SchemaError> {
    match v.as_str() {
        Some("l1") => Ok(Norm::L1),
        Some("l2") => Ok(Norm::L2),
        Some("linf") => Ok(Norm::LInf),
        _ => err(path, "expected one of \"l1\", \"l2\", \"linf\""),
    }
}

// ---- expressions ----

pub fn parse_expr(v: &Value, path: &str) -> Result<FunctionExpr, SchemaError> {
    if let Some(atom) = v.get("atom") {
        let kind = atom.as_str().ok_or_else(|| SchemaError::At {
            path: format!("{path}/atom"),
            message: "expected an atom name".into(),
        })?;
        return match kind {
            "affine" => Ok(FunctionExpr::affine(
                vec_f64(get(v, "a", path)?, &format!("{path}/a"))?,
                as_f64(get(v, "b", path)?, &format!("{path}/b"))?,
            )),
            "indicator_singleton" => Ok(FunctionExpr::indicator_singleton(vec_f64(
                get(v, "point", path)?,
                &format!("{path}/point"),
            )?)),
            "indicator_box" => {
                let lo = vec_f64_signed_inf(get(v, "lo", path)?, &format!("{path}/lo"), true)?;
                let hi = vec_f64(get(v, "hi", path)?, &format!("{path}/hi"))?;
                Ok(bail_expr!(path, FunctionExpr::indicator_box(lo, hi)))
            }
            "indicator_norm_ball" => Ok(bail_expr!(
                path,
                FunctionExpr::indicator_norm_ball(
                    vec_f64(get(v, "center", path)?, &format!("{path}/center"))?,
                    as_f64(get(v, "radius", path)?, &format!("{path}/radius"))?,
                    norm(get(v, "norm", path)?, &format!("{path}/norm"))?,
                )
            )),
            "norm_power" => Ok(bail_expr!(
                path,
                FunctionExpr::norm_power(
                    as_f64(get(v, "p", path)?, &format!("{path}/p"))?,
                    as_f64(get(v, "weight", path)?, &format!("{path}/weight"))?,
                    norm(get(v, "norm", path)?, &format!("{path}/norm"))?,
                    as_usize(get(v, "dim", path)?, &format!("{path}/dim"))?,
                )
            )),
            "quad_over_lin" => Ok(FunctionExpr::quad_over_lin()),
            "exponential" => Ok(bail_expr!(
                path,
                FunctionExpr::exponential(as_f64(get(v, "sign", path)?, &format!("{path}/sign"))?)
            )),
            "neg_entropy" => Ok(FunctionExpr::neg_entropy()),
            "neg_log" => Ok(FunctionExpr::neg_log()),
            "neg_log_conj" => Ok(FunctionExpr::neg_log_conj()),
            "support_of_box" => {
                let lo = vec_f64_signed_inf(get(v, "lo", path)?, &format!("{path}/lo"), true)?;
                let hi = vec_f64(get(v, "hi", path)?, &format!("{path}/hi"))?;
                Ok(bail_expr!(path, FunctionExpr::support_of_box(lo, hi)))
            }
            other => err(&format!("{path}/atom"), format!("unknown atom '{other}'")),
        };
    }
    if let Some(op) = v.get("op") {
        let kind = op.as_str().ok_or_else(|| SchemaError::At {
            path: format!("{path}/op"),
            message: "expected an operation name".into(),
        })?;
        return match kind {
            "affine_precompose" => {
                let inner = parse_expr(get(v, "inner", path)?, &format!("{path}/inner"))?;
                let a = matrix(get(v, "matrix", path)?, &format!("{path}/matrix"))?;
                let b = vec_f64(get(v, "offset", path)?, &format!("{path}/offset"))?;
                Ok(bail_expr!(path, FunctionExpr::affine_precompose(inner, a, b)))
            }
            "plus_affine" => {
                let inner = parse_expr(get(v, "inner", path)?, &format!("{path}/inner"))?;
                let a = vec_f64(get(v, "a", path)?, &format!("{path}/a"))?;
                let b = as_f64(get(v, "b", path)?, &format!("{path}/b"))?;
                Ok(bail_expr!(path, FunctionExpr::plus_affine(inner, a, b)))
            }
            "scale" => {
                let inner = parse_expr(get(v, "inner", path)?, &format!("{path}/inner"))?;
                let t = as_f64(get(v, "t", path)?, &format!("{path}/t"))?;
                Ok(bail_expr!(path, FunctionExpr::scale(t, inner)))
            }
            "sum_blocks" => {
                let dim = as_usize(get(v, "dim", path)?, &format!("{path}/dim"))?;
                let terms = get(v, "terms", path)?
                    .as_array()
                    .ok_or_else(|| SchemaError::At {
                        path: format!("{path}/terms"),
                        message: "expected an array".into(),
                    })?;
                let mut parsed = Vec::new();
                for (i, t) in terms.iter().enumerate() {
                    let tp = format!("{path}/terms/{i}");
                    let e = parse_expr(get(t, "expr", &tp)?, &format!("{tp}/expr"))?;
                    let coords = get(t, "coords", &tp)?
                        .as_array()
                        .ok_or_else(|| SchemaError::At {
                            path: format!("{tp}/coords"),
                            message: "expected an array".into(),
                        })?
                        .iter()
                        .enumerate()
                        .map(|(j, c)| as_usize(c, &format!("{tp}/coords/{j}")))
                        .collect::<Result<Vec<_>, _>>()?;
                    parsed.push((e, coords));
                }
                Ok(bail_expr!(path, FunctionExpr::sum_blocks(dim, parsed)))
            }
            "perspective" => {
                let inner = parse_expr(get(v, "inner", path)?, &format!("{path}/inner"))?;
                Ok(bail_expr!(path, FunctionExpr::perspective(inner)))
            }
            "sublevel_shift" => {
                let inner = parse_expr(get(v, "inner", path)?, &format!("{path}/inner"))?;
                Ok(bail_expr!(path, FunctionExpr::sublevel_shift(inner)))
            }
            "max_of_concave" => {
                let pieces = get(v, "neg_pieces", path)?
                    .as_array()
                    .ok_or_else(|| SchemaError::At {
                        path: format!("{path}/neg_pieces"),
                        message: "expected an array".into(),
                    })?
                    .iter()
                    .enumerate()
                    .map(|(i, p)| parse_expr(p, &format!("{path}/neg_pieces/{i}")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(bail_expr!(path, FunctionExpr::max_of_concave(pieces)))
            }
            other => err(&format!("{path}/op"), format!("unknown operation '{other}'")),
        };
    }
    err(path, "expected an object with an \"atom\" or \"op\" field")
}

pub fn expr_to_value(e: &FunctionExpr) -> Value {
    use crate::expr::{Atom, Node};
    fn bound_to_value(x: f64) -> Value {
        if x.is_finite() {
            json!(round12(x))
        } else {
            Value::Null
        }
    }
    match e.node() {
        Node::Atom(a) => match a {
            Atom::Affine { a, b } => json!({"atom": "affine", "a": round_vec(a), "b": round12(*b)}),
            Atom::IndicatorSingleton { point } => {
                json!({"atom": "indicator_singleton", "point": round_vec(point)})
            }
            Atom::IndicatorBox { lo, hi } => json!({
                "atom": "indicator_box",
                "lo": lo.iter().map(|x| bound_to_value(*x)).collect::<Vec<_>>(),
                "hi": hi.iter().map(|x| bound_to_value(*x)).collect::<Vec<_>>(),
            }),
            Atom::IndicatorNormBall {
                center,
                radius,
                norm,
            } => json!({
                "atom": "indicator_norm_ball",
                "center": round_vec(center),
                "radius": round12(*radius),
                "norm": norm_name(*norm),
            }),
            Atom::NormPower {
                p,
                weight,
                norm,
                dim,
            } => json!({
                "atom": "norm_power",
                "p": if p.is_finite() { json!(round12(*p)) } else { json!("inf") },
                "weight": round12(*weight),
                "norm": norm_name(*norm),
                "dim": dim,
            }),
            Atom::QuadOverLin => json!({"atom": "quad_over_lin"}),
            Atom::Exponential { sign } => json!({"atom": "exponential", "sign": round12(*sign)}),
            Atom::NegEntropy => json!({"atom": "neg_entropy"}),
            Atom::NegLog => json!({"atom": "neg_log"}),
            Atom::NegLogConj => json!({"atom": "neg_log_conj"}),
            Atom::SupportOfBox { lo, hi } => json!({
                "atom": "support_of_box",
                "lo": lo.iter().map(|x| bound_to_value(*x)).collect::<Vec<_>>(),
                "hi": hi.iter().map(|x| bound_to_value(*x)).collect::<Vec<_>>(),
            }),
        },
        Node::AffinePre { a, b, inner } => json!({
            "op": "affine_precompose",
            "inner": expr_to_value(inner),
            "matrix": mat_to_value(a),
            "offset": round_vec(b),
        }),
        Node::PlusAffine { a, b, inner } => json!({
            "op": "plus_affine",
            "inner": expr_to_value(inner),
            "a": round_vec(a),
            "b": round12(*b),
        }),
        Node::Scale { t, inner } => json!({
            "op": "scale",
            "t": round12(*t),
            "inner": expr_to_value(inner),
        }),
        Node::SumBlocks { terms } => json!({
            "op": "sum_blocks",
            "dim": e.dim(),
            "terms": terms.iter().map(|(f, c)| json!({
                "expr": expr_to_value(f),
                "coords": c,
            })).collect::<Vec<_>>(),
        }),
        Node::Perspective { inner } => json!({
            "op": "perspective",
            "inner": expr_to_value(inner),
        }),
        Node::SublevelShift { inner } => json!({
            "op": "sublevel_shift",
            "inner": expr_to_value(inner),
        }),
        Node::MaxOfConcave { neg_pieces } => json!({
            "op": "max_of_concave",
            "neg_pieces": neg_pieces.iter().map(expr_to_value).collect::<Vec<_>>(),
        }),
    }
}

fn norm_name(n: Norm) -> &'static str {
    match n {
        Norm::L1 => "l1",
        Norm::L2 => "l2",
        Norm::LInf => "linf",
    }
}

fn mat_to_value(m: &Mat) -> Value {
    Value::Array(
        (0..m.rows)
            .map(|i| Value::Array(m.row(i).iter().map(|x| json!(round12(*x))).collect()))
            .collect(),
    )
}

/// Round to 12 significant digits (report canonical form).
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| round12(*x)).collect()
}

// ---- problem specs ----

#[derive(Debug)]
pub enum ProblemSpec {
    Robust(RobustProblem),
    UqMoment {
        ambiguity: AmbiguitySet,
        disutility: Disutility,
    },
    UqMomentGeneralized(GeneralizedAmbiguitySet),
    UqOt {
        ambiguity: OTAmbiguity,
        disutility: Disutility,
    },
}

#[derive(Debug)]
pub struct ParsedSpec {
    pub problem: ProblemSpec,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub grid: Option<(Vec<f64>, Vec<f64>, f64)>,
    pub max_iter: usize,
    pub conjugate_fixtures: Vec<(FunctionExpr, FunctionExpr)>,
}

fn parse_set(v: &Value, path: &str) -> Result<UncertaintySet, SchemaError> {
    let dim = as_usize(get(v, "dim", path)?, &format!("{path}/dim"))?;
    let cs = get(v, "constraints", path)?
        .as_array()
        .ok_or_else(|| SchemaError::At {
            path: format!("{path}/constraints"),
            message: "expected an array".into(),
        })?
        .iter()
        .enumerate()
        .map(|(i, c)| parse_expr(c, &format!("{path}/constraints/{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    match UncertaintySet::new(dim, cs) {
        Ok(s) => Ok(s),
        Err(e) => err(path, format!("{e}")),
    }
}

fn parse_saddle(v: &Value, path: &str) -> Result<SaddleFunction, SchemaError> {
    let p = parse_expr(get(v, "p", path)?, &format!("{path}/p"))?;
    let q_neg = parse_expr(get(v, "q_neg", path)?, &format!("{path}/q_neg"))?;
    let coupling = matrix(get(v, "coupling", path)?, &format!("{path}/coupling"))?;
    match SaddleFunction::new(p, coupling, q_neg) {
        Ok(s) => Ok(s),
        Err(e) => err(path, format!("{e}")),
    }
}

fn parse_ccf(v: &Value, path: &str) -> Result<CConvexFunction, SchemaError> {
    if let Some(cw) = v.get("componentwise") {
        let comps = cw
            .as_array()
            .ok_or_else(|| SchemaError::At {
                path: format!("{path}/componentwise"),
                message: "expected an array".into(),
            })?
            .iter()
            .enumerate()
            .map(|(i, c)| parse_expr(c, &format!("{path}/componentwise/{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        return match CConvexFunction::componentwise(comps) {
            Ok(f) => Ok(f),
            Err(e) => err(path, format!("{e}")),
        };
    }
    if let Some(soc) = v.get("soc") {
        let sp = format!("{path}/soc");
        let head = matrix(get(soc, "head_matrix", &sp)?, &format!("{sp}/head_matrix"))?;
        let off = vec_f64(get(soc, "head_offset", &sp)?, &format!("{sp}/head_offset"))?;
        let tail = parse_expr(get(soc, "tail", &sp)?, &format!("{sp}/tail"))?;
        return match CConvexFunction::soc_structured(head, off, tail) {
            Ok(f) => Ok(f),
            Err(e) => err(&sp, format!("{e}")),
        };
    }
    err(path, "expected \"componentwise\" or \"soc\"")
}

pub fn parse_spec(v: &Value) -> Result<ParsedSpec, SchemaError> {
    let version = as_usize(get(v, "schema_version", "")?, "/schema_version")?;
    if version as u64 != SCHEMA_VERSION {
        return err("/schema_version", format!("unsupported version {version}"));
    }
    let tolerances = match v.get("tolerances") {
        None => Tolerances::default(),
        Some(t) => {
            let d = Tolerances::default();
            let feas = t.get("feas").map(|x| as_f64(x, "/tolerances/feas")).transpose()?;
            let opt = t.get("opt").map(|x| as_f64(x, "/tolerances/opt")).transpose()?;
            let zero = t.get("zero").map(|x| as_f64(x, "/tolerances/zero")).transpose()?;
            match Tolerances::new(
                feas.unwrap_or(d.feas),
                opt.unwrap_or(d.opt),
                zero.unwrap_or(d.zero),
            ) {
                Ok(t) => t,
                Err(e) => return err("/tolerances", format!("{e}")),
            }
        }
    };
    let seed = v
        .get("solver")
        .and_then(|s| s.get("seed"))
        .and_then(|x| x.as_u64())
        .unwrap_or(0);
    let max_iter = v
        .get("solver")
        .and_then(|s| s.get("max_iter"))
        .and_then(|x| x.as_u64())
        .map(|x| x as usize)
        .unwrap_or(200_000);
    let grid = match v.get("oracle") {
        None => None,
        Some(o) => {
            let lo = vec_f64_signed_inf(get(o, "lo", "/oracle")?, "/oracle/lo", true)?;
            let hi = vec_f64(get(o, "hi", "/oracle")?, "/oracle/hi")?;
            let res = as_f64(get(o, "res", "/oracle")?, "/oracle/res")?;
            Some((lo, hi, res))
        }
    };
    let mut conjugate_fixtures = Vec::new();
    if let Some(fx) = v.get("conjugate_fixtures") {
        let arr = fx.as_array().ok_or_else(|| SchemaError::At {
            path: "/conjugate_fixtures".into(),
            message: "expected an array".into(),
        })?;
        for (i, f) in arr.iter().enumerate() {
            let fp = format!("/conjugate_fixtures/{i}");
            let e = parse_expr(get(f, "expr", &fp)?, &format!("{fp}/expr"))?;
            let c = parse_expr(get(f, "conjugate", &fp)?, &format!("{fp}/conjugate"))?;
            conjugate_fixtures.push((e, c));
        }
    }

    let kind = get(v, "kind", "")?.as_str().ok_or_else(|| SchemaError::At {
        path: "/kind".into(),
        message: "expected a string".into(),
    })?;
    let problem = match kind {
        "robust" => {
            let objective = parse_saddle(get(v, "objective", "")?, "/objective")?;
            let constraints = match v.get("constraints") {
                None => vec![],
                Some(cs) => cs
                    .as_array()
                    .ok_or_else(|| SchemaError::At {
                        path: "/constraints".into(),
                        message: "expected an array".into(),
                    })?
                    .iter()
                    .enumerate()
                    .map(|(i, c)| parse_saddle(c, &format!("/constraints/{i}")))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let unc = get(v, "uncertainty", "")?;
            let sets = if let Some(per) = unc.get("per_index") {
                let arr = per.as_array().ok_or_else(|| SchemaError::At {
                    path: "/uncertainty/per_index".into(),
                    message: "expected an array".into(),
                })?;
                SetAssignment::PerIndex(
                    arr.iter()
                        .enumerate()
                        .map(|(i, s)| parse_set(s, &format!("/uncertainty/per_index/{i}")))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            } else {
                SetAssignment::Shared(parse_set(unc, "/uncertainty")?)
            };
            match RobustProblem::new(objective, constraints, sets) {
                Ok(p) => ProblemSpec::Robust(p),
                Err(e) => return err("", format!("{e}")),
            }
        }
        "uq_moment" => {
            let support = parse_set(get(v, "support", "")?, "/support")?;
            let moments = get(v, "moments", "")?
                .as_array()
                .ok_or_else(|| SchemaError::At {
                    path: "/moments".into(),
                    message: "expected an array".into(),
                })?
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let mp = format!("/moments/{i}");
                    Ok((
                        parse_expr(get(m, "h", &mp)?, &format!("{mp}/h"))?,
                        as_f64(get(m, "mu", &mp)?, &format!("{mp}/mu"))?,
                    ))
                })
                .collect::<Result<Vec<_>, SchemaError>>()?;
            let pieces = parse_pieces(get(v, "disutility", "")?, "/disutility")?;
            let ambiguity = match AmbiguitySet::new(support, moments) {
                Ok(a) => a,
                Err(e) => return err("/support", format!("{e}")),
            };
            let disutility = match Disutility::new(pieces) {
                Ok(d) => d,
                Err(e) => return err("/disutility", format!("{e}")),
            };
            ProblemSpec::UqMoment {
                ambiguity,
                disutility,
            }
        }
        "uq_moment_generalized" => {
            let dim = as_usize(get(v, "dim", "")?, "/dim")?;
            let comps = get(v, "components", "")?
                .as_array()
                .ok_or_else(|| SchemaError::At {
                    path: "/components".into(),
                    message: "expected an array".into(),
                })?
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let cp = format!("/components/{k}");
                    let support = get(c, "support_cones", &cp)?
                        .as_array()
                        .ok_or_else(|| SchemaError::At {
                            path: format!("{cp}/support_cones"),
                            message: "expected an array".into(),
                        })?
                        .iter()
                        .enumerate()
                        .map(|(l, f)| parse_ccf(f, &format!("{cp}/support_cones/{l}")))
                        .collect::<Result<Vec<_>, _>>()?;
                    let prob = as_f64(get(c, "prob", &cp)?, &format!("{cp}/prob"))?;
                    let neg_pieces = parse_pieces(c, &cp)?;
                    Ok(GeneralizedComponent {
                        support,
                        prob,
                        neg_pieces,
                    })
                })
                .collect::<Result<Vec<_>, SchemaError>>()?;
            let moments = match v.get("moments") {
                None => vec![],
                Some(ms) => ms
                    .as_array()
                    .ok_or_else(|| SchemaError::At {
                        path: "/moments".into(),
                        message: "expected an array".into(),
                    })?
                    .iter()
                    .enumerate()
                    .map(|(j, m)| {
                        let mp = format!("/moments/{j}");
                        let cone_v = get(m, "cone", &mp)?;
                        let cone = if let Some(d) = cone_v.get("orthant") {
                            ProperCone::NonnegOrthant(as_usize(d, &format!("{mp}/cone/orthant"))?)
                        } else if let Some(d) = cone_v.get("soc") {
                            ProperCone::SecondOrderCone(as_usize(d, &format!("{mp}/cone/soc"))?)
                        } else {
                            return err(&format!("{mp}/cone"), "expected \"orthant\" or \"soc\"");
                        };
                        let per_component = get(m, "per_component", &mp)?
                            .as_array()
                            .ok_or_else(|| SchemaError::At {
                                path: format!("{mp}/per_component"),
                                message: "expected an array".into(),
                            })?
                            .iter()
                            .enumerate()
                            .map(|(k, f)| parse_ccf(f, &format!("{mp}/per_component/{k}")))
                            .collect::<Result<Vec<_>, _>>()?;
                        let bound = vec_f64(get(m, "bound", &mp)?, &format!("{mp}/bound"))?;
                        Ok(GeneralizedMoment {
                            cone,
                            per_component,
                            bound,
                        })
                    })
                    .collect::<Result<Vec<_>, SchemaError>>()?,
            };
            match GeneralizedAmbiguitySet::new(dim, comps, moments) {
                Ok(a) => ProblemSpec::UqMomentGeneralized(a),
                Err(e) => return err("/components", format!("{e}")),
            }
        }
        "uq_ot" => {
            let nom = get(v, "nominal", "")?;
            let atoms_v = get(nom, "atoms", "/nominal")?
                .as_array()
                .ok_or_else(|| SchemaError::At {
                    path: "/nominal/atoms".into(),
                    message: "expected an array".into(),
                })?;
            let probs = vec_f64(get(nom, "probs", "/nominal")?, "/nominal/probs")?;
            if probs.len() != atoms_v.len() {
                return err("/nominal/probs", "length differs from atoms");
            }
            let atoms = atoms_v
                .iter()
                .enumerate()
                .map(|(i, a)| vec_f64(a, &format!("/nominal/atoms/{i}")))
                .collect::<Result<Vec<_>, _>>()?;
            let nominal = match DiscreteDistribution::new(
                atoms.into_iter().zip(probs).collect(),
            ) {
                Ok(d) => d,
                Err(e) => return err("/nominal", format!("{e}")),
            };
            let support = parse_set(get(v, "support", "")?, "/support")?;
            let radius = as_f64(get(v, "radius", "")?, "/radius")?;
            let cost_v = get(v, "cost", "")?;
            let ambiguity = if let Some(w) = cost_v.get("wasserstein") {
                let p = as_f64(get(w, "p", "/cost/wasserstein")?, "/cost/wasserstein/p")?;
                let nrm = norm(
                    get(w, "norm", "/cost/wasserstein")?,
                    "/cost/wasserstein/norm",
                )?;
                let cost = match wasserstein_cost(p, nrm) {
                    Ok(c) => c,
                    Err(e) => return err("/cost/wasserstein", format!("{e}")),
                };
                match OTAmbiguity::wasserstein(nominal, cost, radius, support) {
                    Ok(a) => a,
                    Err(e) => return err("/cost", format!("{e}")),
                }
            } else if let Some(c) = cost_v.get("custom") {
                let cp = "/cost/custom";
                let exprs = get(c, "exprs", cp)?
                    .as_array()
                    .ok_or_else(|| SchemaError::At {
                        path: format!("{cp}/exprs"),
                        message: "expected an array".into(),
                    })?
                    .iter()
                    .enumerate()
                    .map(|(i, e)| parse_expr(e, &format!("{cp}/exprs/{i}")))
                    .collect::<Result<Vec<_>, _>>()?;
                let ii = get(c, "identity_of_indiscernibles", cp)?
                    .as_bool()
                    .ok_or_else(|| SchemaError::At {
                        path: format!("{cp}/identity_of_indiscernibles"),
                        message: "expected a bool".into(),
                    })?;
                let sl = get(c, "superlinear", cp)?.as_bool().ok_or_else(|| {
                    SchemaError::At {
                        path: format!("{cp}/superlinear"),
                        message: "expected a bool".into(),
                    }
                })?;
                match OTAmbiguity::new(nominal, exprs, radius, support, ii, sl) {
                    Ok(a) => a,
                    Err(e) => return err(cp, format!("{e}")),
                }
            } else {
                return err("/cost", "expected \"wasserstein\" or \"custom\"");
            };
            let pieces = parse_pieces(get(v, "disutility", "")?, "/disutility")?;
            let disutility = match Disutility::new(pieces) {
                Ok(d) => d,
                Err(e) => return err("/disutility", format!("{e}")),
            };
            ProblemSpec::UqOt {
                ambiguity,
                disutility,
            }
        }
        other => return err("/kind", format!("unknown kind '{other}'")),
    };
    Ok(ParsedSpec {
        problem,
        tolerances,
        seed,
        grid,
        max_iter,
        conjugate_fixtures,
    })
}

fn parse_pieces(v: &Value, path: &str) -> Result<Vec<FunctionExpr>, SchemaError> {
    get(v, "neg_pieces", path)?
        .as_array()
        .ok_or_else(|| SchemaError::At {
            path: format!("{path}/neg_pieces"),
            message: "expected an array".into(),
        })?
        .iter()
        .enumerate()
        .map(|(i, p)| parse_expr(p, &format!("{path}/neg_pieces/{i}")))
        .collect()
}

// ---- program serialization (reformulate output) ----

pub fn program_to_value(p: &FiniteConvexProgram) -> Value {
    let blocks: Vec<Value> = p
        .blocks
        .iter()
        .map(|b| {
            json!({
                "name": b.name,
                "dim": b.dim,
                "cone": match b.cone {
                    VarCone::Free => "free",
                    VarCone::Nonneg => "nonneg",
                    VarCone::Soc => "soc",
                },
                "offset": b.offset,
            })
        })
        .collect();
    let term_value = |t: &Term| {
        json!({
            "expr": expr_to_value(&t.expr),
            "vars": t.vars,
        })
    };
    json!({
        "schema_version": SCHEMA_VERSION,
        "provenance": p.provenance,
        "sense": match p.sense { Sense::Min => "min", Sense::Max => "max" },
        "blocks": blocks,
        "objective": {
            "constant": round12(p.obj_constant),
            "terms": p.objective.iter().map(term_value).collect::<Vec<_>>(),
        },
        "constraints": p.constraints.iter().map(|c| json!({
            "label": c.label,
            "constant": round12(c.constant),
            "nonlinear": c.nonlinear,
            "terms": c.terms.iter().map(term_value).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "equalities": p.equalities.iter().map(|(row, rhs)| json!({
            "row": row.iter().map(|(i, a)| json!([i, round12(*a)])).collect::<Vec<_>>(),
            "rhs": round12(*rhs),
        })).collect::<Vec<_>>(),
        "notes": p.notes,
    })
}

pub fn program_from_value(v: &Value) -> Result<FiniteConvexProgram, SchemaError> {
    let sense = match get(v, "sense", "")?.as_str() {
        Some("min") => Sense::Min,
        Some("max") => Sense::Max,
        _ => return err("/sense", "expected \"min\" or \"max\""),
    };
    let provenance = get(v, "provenance", "")?
        .as_str()
        .unwrap_or_default()
        .to_string();
    let mut p = FiniteConvexProgram::new(provenance, sense);
    for (i, b) in get(v, "blocks", "")?
        .as_array()
        .ok_or_else(|| SchemaError::At {
            path: "/blocks".into(),
            message: "expected an array".into(),
        })?
        .iter()
        .enumerate()
    {
        let bp = format!("/blocks/{i}");
        let cone = match get(b, "cone", &bp)?.as_str() {
            Some("free") => VarCone::Free,
            Some("nonneg") => VarCone::Nonneg,
            Some("soc") => VarCone::Soc,
            _ => return err(&format!("{bp}/cone"), "unknown cone"),
        };
        p.add_block(
            get(b, "name", &bp)?.as_str().unwrap_or_default(),
            as_usize(get(b, "dim", &bp)?, &format!("{bp}/dim"))?,
            cone,
        );
    }
    let parse_terms = |v: &Value, path: &str| -> Result<Vec<Term>, SchemaError> {
        v.as_array()
            .ok_or_else(|| SchemaError::At {
                path: path.into(),
                message: "expected an array".into(),
            })?
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let tp = format!("{path}/{i}");
                let e = parse_expr(get(t, "expr", &tp)?, &format!("{tp}/expr"))?;
                let vars = get(t, "vars", &tp)?
                    .as_array()
                    .ok_or_else(|| SchemaError::At {
                        path: format!("{tp}/vars"),
                        message: "expected an array".into(),
                    })?
                    .iter()
                    .enumerate()
                    .map(|(j, c)| as_usize(c, &format!("{tp}/vars/{j}")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Term::new(e, vars))
            })
            .collect()
    };
    let obj = get(v, "objective", "")?;
    p.obj_constant = as_f64(get(obj, "constant", "/objective")?, "/objective/constant")?;
    p.objective = parse_terms(get(obj, "terms", "/objective")?, "/objective/terms")?;
    for (i, c) in get(v, "constraints", "")?
        .as_array()
        .ok_or_else(|| SchemaError::At {
            path: "/constraints".into(),
            message: "expected an array".into(),
        })?
        .iter()
        .enumerate()
    {
        let cp = format!("/constraints/{i}");
        p.constraints.push(crate::program::ConstraintSum {
            label: get(c, "label", &cp)?.as_str().unwrap_or_default().to_string(),
            constant: as_f64(get(c, "constant", &cp)?, &format!("{cp}/constant"))?,
            nonlinear: get(c, "nonlinear", &cp)?.as_bool().unwrap_or(true),
            terms: parse_terms(get(c, "terms", &cp)?, &format!("{cp}/terms"))?,
        });
    }
    for (i, e) in get(v, "equalities", "")?
        .as_array()
        .ok_or_else(|| SchemaError::At {
            path: "/equalities".into(),
            message: "expected an array".into(),
        })?
        .iter()
        .enumerate()
    {
        let ep = format!("/equalities/{i}");
        let row = get(e, "row", &ep)?
            .as_array()
            .ok_or_else(|| SchemaError::At {
                path: format!("{ep}/row"),
                message: "expected an array".into(),
            })?
            .iter()
            .enumerate()
            .map(|(j, pair)| {
                let pp = format!("{ep}/row/{j}");
                let arr = pair.as_array().ok_or_else(|| SchemaError::At {
                    path: pp.clone(),
                    message: "expected [index, coef]".into(),
                })?;
                Ok((as_usize(&arr[0], &pp)?, as_f64(&arr[1], &pp)?))
            })
            .collect::<Result<Vec<_>, SchemaError>>()?;
        p.add_equality(row, as_f64(get(e, "rhs", &ep)?, &format!("{ep}/rhs"))?);
    }
    if let Some(notes) = v.get("notes").and_then(|n| n.as_array()) {
        p.notes = notes
            .iter()
            .filter_map(|n| n.as_str().map(String::from))
            .collect();
    }
    Ok(p)
}
