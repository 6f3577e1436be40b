//! Point evaluation and the equality decision procedure.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::print::var_text;
use super::{Atom, Context, DiffExpr, ExprError, Head, Rational, Var};

pub type Assignment = BTreeMap<Var, Rational>;

/// Sample points used by the randomized equality check.
pub const EQUALITY_SAMPLES: usize = 16;
/// Attempts before giving up on singular sample points.
pub const EQUALITY_ATTEMPTS: usize = 64;
pub const EQUALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Value::Float(x) => *x,
        }
    }
}

/// Evaluates `f` at `point`: exactly for polynomials, in floating point when
/// function atoms are present.
pub fn eval(f: &DiffExpr, point: &Assignment, ctx: &Context) -> Result<Value, ExprError> {
    if f.has_transcendental() {
        let fp: BTreeMap<Var, f64> = point.iter().map(|(v, q)| (v.clone(), q.to_f64().unwrap_or(f64::NAN))).collect();
        return eval_f64(f, &fp, ctx).map(Value::Float);
    }
    let mut acc = Rational::zero();
    for (m, c) in f.terms() {
        let mut t = c.clone();
        for (a, e) in m.factors() {
            let Atom::Var(v) = a else { unreachable!("polynomial class") };
            let x = point.get(v).ok_or_else(|| ExprError::MissingAssignment(var_text(v, ctx)))?;
            t *= num_traits::pow(x.clone(), *e as usize);
        }
        acc += t;
    }
    Ok(Value::Exact(acc))
}

pub fn eval_f64(f: &DiffExpr, point: &BTreeMap<Var, f64>, ctx: &Context) -> Result<f64, ExprError> {
    let mut acc = 0.0;
    for (m, c) in f.terms() {
        let mut t = c.to_f64().unwrap_or(f64::NAN);
        for (a, e) in m.factors() {
            let x = match a {
                Atom::Var(v) => *point.get(v).ok_or_else(|| ExprError::MissingAssignment(var_text(v, ctx)))?,
                Atom::Apply(h, arg) => {
                    let y = eval_f64(arg, point, ctx)?;
                    match h {
                        Head::Sin => y.sin(),
                        Head::Cos => y.cos(),
                        Head::Exp => y.exp(),
                        Head::Ln if y > 0.0 => y.ln(),
                        Head::Ln => return Err(ExprError::Domain(format!("ln of {y}"))),
                        Head::Inv if y != 0.0 => 1.0 / y,
                        Head::Inv => return Err(ExprError::DivisionByZero),
                    }
                }
            };
            t *= x.powi(*e as i32);
        }
        acc += t;
    }
    if acc.is_finite() {
        Ok(acc)
    } else {
        Err(ExprError::Domain("non-finite value".into()))
    }
}

/// Decides `f = g`.
///
/// Exact for the polynomial class. When function atoms survive in `f - g`
/// the canonical test is followed by evaluation at [`EQUALITY_SAMPLES`]
/// random rational points drawn from a generator seeded with the context
/// seed; this is a semi-decision.
pub fn equal(f: &DiffExpr, g: &DiffExpr, ctx: &Context) -> Result<bool, ExprError> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    equal_with_rng(f, g, ctx, &mut rng)
}

pub fn equal_with_rng<R: Rng>(f: &DiffExpr, g: &DiffExpr, ctx: &Context, rng: &mut R) -> Result<bool, ExprError> {
    let diff = f - g;
    if diff.is_zero() {
        return Ok(true);
    }
    if !diff.has_transcendental() {
        return Ok(false);
    }
    let mut vars = f.vars();
    vars.extend(g.vars());
    let mut good = 0;
    let mut attempts = 0;
    while good < EQUALITY_SAMPLES {
        if attempts == EQUALITY_ATTEMPTS {
            return Err(ExprError::Sampling(attempts));
        }
        attempts += 1;
        let point: BTreeMap<Var, f64> = vars
            .iter()
            .map(|v| {
                let num: i64 = rng.gen_range(-30..=30);
                let den: i64 = rng.gen_range(1..=9);
                let q = Rational::new(BigInt::from(num), BigInt::from(den));
                (v.clone(), q.to_f64().unwrap_or(0.0))
            })
            .collect();
        let (a, b) = match (eval_f64(f, &point, ctx), eval_f64(g, &point, ctx)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(ExprError::MissingAssignment(v)), _) | (_, Err(ExprError::MissingAssignment(v))) => {
                return Err(ExprError::MissingAssignment(v))
            }
            _ => continue,
        };
        good += 1;
        let scale = 1f64.max(a.abs()).max(b.abs());
        if (a - b).abs() > EQUALITY_TOLERANCE * scale {
            return Ok(false);
        }
    }
    Ok(true)
}
