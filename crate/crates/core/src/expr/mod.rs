//! Differential functions: exact expressions in the independent variables
//! `x^μ` and finitely many jet variables `u^α_i`.
//!
//! A [`DiffExpr`] is kept in canonical form at all times: a finite sum of
//! monomials with nonzero rational coefficients, each monomial a sorted
//! product of atoms raised to positive powers. In the default class the
//! atoms are variables only, so expressions are polynomials over `Q` and two
//! expressions are equal exactly when their canonical forms coincide. The
//! opt-in transcendental extension adds function atoms (`sin`, `cos`, `exp`,
//! `ln`, `inv`), for which canonical equality is only sufficient; see
//! [`equal`].

mod eval;
mod parse;
mod print;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multiindex::MultiIndex;

pub use eval::{equal, equal_with_rng, eval, eval_f64, Assignment, Value, EQUALITY_ATTEMPTS, EQUALITY_SAMPLES, EQUALITY_TOLERANCE};
pub use parse::parse;
pub use print::{Display, ExprTree};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown dependent variable {0:?}")]
    UnknownDependent(String),
    #[error("multi-index has length {got}, expected {expected}")]
    IndexLength { expected: usize, got: usize },
    #[error("direction {mu} out of range for m = {m}")]
    Direction { mu: usize, m: usize },
    #[error("{0} requires the transcendental extension")]
    Transcendental(String),
    #[error("division by a non-constant expression requires the transcendental extension")]
    NonConstantDivisor,
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent must be an integer constant")]
    NonIntegerExponent,
    #[error("no value assigned to {0}")]
    MissingAssignment(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("randomized equality gave up after {0} singular sample points")]
    Sampling(usize),
    #[error("invalid context: {0}")]
    InvalidContext(String),
}

/// The ambient data shared by all expressions of one problem: the number of
/// independent variables and the ordered dependent-variable names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    m: usize,
    deps: Vec<String>,
    #[serde(default)]
    transcendental: bool,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_true")]
    cross_checks: bool,
}

fn default_true() -> bool {
    true
}

impl Context {
    pub fn new<S: Into<String>>(m: usize, deps: impl IntoIterator<Item = S>) -> Result<Self, ExprError> {
        let deps: Vec<String> = deps.into_iter().map(Into::into).collect();
        let ctx = Context { m, deps, transcendental: false, seed: 0, cross_checks: true };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<(), ExprError> {
        if self.m == 0 {
            return Err(ExprError::InvalidContext("m must be at least 1".into()));
        }
        if self.deps.is_empty() {
            return Err(ExprError::InvalidContext("no dependent variables".into()));
        }
        let unique: BTreeSet<&String> = self.deps.iter().collect();
        if unique.len() != self.deps.len() {
            return Err(ExprError::InvalidContext("duplicate dependent variable".into()));
        }
        for name in &self.deps {
            let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok {
                return Err(ExprError::InvalidContext(format!("bad dependent name {name:?}")));
            }
        }
        Ok(())
    }

    pub fn with_transcendental(mut self, on: bool) -> Self {
        self.transcendental = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Turns off the internal cross-checks. Only honoured in release builds.
    pub fn with_cross_checks(mut self, on: bool) -> Self {
        self.cross_checks = on;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn deps(&self) -> &[String] {
        &self.deps
    }

    pub fn dep_index(&self, name: &str) -> Option<usize> {
        self.deps.iter().position(|d| d == name)
    }

    pub fn dep_name(&self, alpha: usize) -> &str {
        &self.deps[alpha]
    }

    pub fn transcendental(&self) -> bool {
        self.transcendental
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn verify(&self) -> bool {
        self.cross_checks || cfg!(debug_assertions)
    }

    pub fn check_direction(&self, mu: usize) -> Result<(), ExprError> {
        if mu >= self.m {
            return Err(ExprError::Direction { mu, m: self.m });
        }
        Ok(())
    }

    pub fn check_index(&self, i: &MultiIndex) -> Result<(), ExprError> {
        if i.dim() != self.m {
            return Err(ExprError::IndexLength { expected: self.m, got: i.dim() });
        }
        Ok(())
    }

    pub fn zero_index(&self) -> MultiIndex {
        MultiIndex::zero(self.m)
    }
}

/// A coordinate of the jet space: `x^μ` or `u^α_i` (0-based `μ`, `α`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X(usize),
    U(usize, MultiIndex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Sin,
    Cos,
    Exp,
    Ln,
    /// `inv(f) = 1/f`.
    Inv,
}

impl Head {
    pub fn name(self) -> &'static str {
        match self {
            Head::Sin => "sin",
            Head::Cos => "cos",
            Head::Exp => "exp",
            Head::Ln => "ln",
            Head::Inv => "inv",
        }
    }

    pub fn from_name(name: &str) -> Option<Head> {
        Some(match name {
            "sin" => Head::Sin,
            "cos" => Head::Cos,
            "exp" => Head::Exp,
            "ln" => Head::Ln,
            "inv" => Head::Inv,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(Var),
    Apply(Head, Box<DiffExpr>),
}

/// A power product of atoms, sorted by atom with positive exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Monomial(vec![(a, 1)])
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((x, ex)), Some((y, ey))) => match x.cmp(y) {
                    Ordering::Less => {
                        out.push((x.clone(), *ex));
                        a.next();
                    }
                    Ordering::Greater => {
                        out.push((y.clone(), *ey));
                        b.next();
                    }
                    Ordering::Equal => {
                        out.push((x.clone(), ex + ey));
                        a.next();
                        b.next();
                    }
                },
                (Some(p), None) => {
                    out.push((*p).clone());
                    a.next();
                }
                (None, Some(p)) => {
                    out.push((*p).clone());
                    b.next();
                }
                (None, None) => break,
            }
        }
        Monomial(out)
    }

    /// The monomial with factor `n` removed and the rest kept.
    fn without(&self, n: usize) -> Monomial {
        let mut v = self.0.clone();
        if v[n].1 == 1 {
            v.remove(n);
        } else {
            v[n].1 -= 1;
        }
        Monomial(v)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A differential function in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DiffExpr(BTreeMap<Monomial, Rational>);

impl DiffExpr {
    pub fn zero() -> Self {
        DiffExpr(BTreeMap::new())
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut map = BTreeMap::new();
        if !c.is_zero() {
            map.insert(Monomial::one(), c);
        }
        DiffExpr(map)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::constant(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(Monomial::atom(Atom::Var(v)), Rational::one())
    }

    pub fn x(mu: usize) -> Self {
        Self::var(Var::X(mu))
    }

    pub fn u(alpha: usize, i: MultiIndex) -> Self {
        Self::var(Var::U(alpha, i))
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut map = BTreeMap::new();
        if !c.is_zero() {
            map.insert(m, c);
        }
        DiffExpr(map)
    }

    /// `head(arg)`, folding the arguments where the value is rational.
    pub fn apply(head: Head, arg: DiffExpr) -> Result<DiffExpr, ExprError> {
        if let Some(c) = arg.as_constant() {
            let folded = match head {
                Head::Sin if c.is_zero() => Some(Self::zero()),
                Head::Cos | Head::Exp if c.is_zero() => Some(Self::one()),
                Head::Ln if c.is_one() => Some(Self::zero()),
                Head::Inv if c.is_zero() => return Err(ExprError::DivisionByZero),
                Head::Inv => Some(Self::constant(c.recip())),
                _ => None,
            };
            if let Some(f) = folded {
                return Ok(f);
            }
        }
        Ok(Self::var_atom(Atom::Apply(head, Box::new(arg))))
    }

    fn var_atom(a: Atom) -> Self {
        Self::monomial(Monomial::atom(a), Rational::one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.0.keys().all(Monomial::is_one)
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.is_constant() {
            Some(self.constant_term())
        } else {
            None
        }
    }

    /// The coefficient of the empty monomial.
    pub fn constant_term(&self) -> Rational {
        self.0.get(&Monomial::one()).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> DiffExpr {
        if c.is_zero() {
            return Self::zero();
        }
        DiffExpr(self.0.iter().map(|(m, k)| (m.clone(), k * c)).collect())
    }

    pub fn scale_int(&self, c: &BigInt) -> DiffExpr {
        self.scale(&Rational::from_integer(c.clone()))
    }

    pub fn pow(&self, n: u32) -> DiffExpr {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign_ref(&mut self, other: &DiffExpr) {
        for (m, c) in &other.0 {
            self.add_term(m.clone(), c.clone());
        }
    }

    /// Adds `c·other` in place.
    pub fn add_scaled(&mut self, other: &DiffExpr, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (m, k) in &other.0 {
            self.add_term(m.clone(), k * c);
        }
    }

    /// All variables, including those inside function arguments.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for m in self.0.keys() {
            for (a, _) in &m.0 {
                match a {
                    Atom::Var(v) => {
                        out.insert(v.clone());
                    }
                    Atom::Apply(_, arg) => arg.collect_vars(out),
                }
            }
        }
    }

    /// The finite set of jet variables `(α, i)` the expression depends on.
    pub fn jet_support(&self) -> BTreeSet<(usize, MultiIndex)> {
        self.vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::U(a, i) => Some((a, i)),
                Var::X(_) => None,
            })
            .collect()
    }

    pub fn has_transcendental(&self) -> bool {
        self.0.keys().any(|m| m.0.iter().any(|(a, _)| matches!(a, Atom::Apply(..))))
    }

    /// The order of a differential function: the largest `|i|` among the jet
    /// variables it depends on, `None` without jet dependence.
    pub fn order(&self) -> Option<u32> {
        self.jet_support().iter().map(|(_, i)| i.norm()).max()
    }

    /// Total degree in `x` of a polynomial free of jet variables and
    /// function atoms. `Some(0)` for constants, including zero.
    pub fn x_degree(&self) -> Option<u32> {
        let mut deg = 0;
        for m in self.0.keys() {
            for (a, _) in &m.0 {
                if !matches!(a, Atom::Var(Var::X(_))) {
                    return None;
                }
            }
            deg = deg.max(m.degree());
        }
        Some(deg)
    }

    /// Exact partial derivative with respect to a coordinate.
    pub fn partial(&self, v: &Var) -> DiffExpr {
        let mut out = DiffExpr::zero();
        for (m, c) in &self.0 {
            for (n, (a, e)) in m.0.iter().enumerate() {
                let coeff = c * Rational::from_integer(BigInt::from(*e));
                let rest = m.without(n);
                match a {
                    Atom::Var(w) if w == v => out.add_term(rest, coeff),
                    Atom::Var(_) => {}
                    Atom::Apply(head, arg) => {
                        let inner = arg.partial(v);
                        if inner.is_zero() {
                            continue;
                        }
                        let outer = head_derivative(*head, arg);
                        let piece = &(&outer * &inner) * &DiffExpr::monomial(rest, coeff);
                        out.add_assign_ref(&piece);
                    }
                }
            }
        }
        out
    }

    /// `∂f/∂u^α_i`.
    pub fn partial_u(&self, alpha: usize, i: &MultiIndex) -> DiffExpr {
        self.partial(&Var::U(alpha, i.clone()))
    }

    /// `∂f/∂x^μ` with jet variables held fixed.
    pub fn partial_x(&self, mu: usize, ctx: &Context) -> Result<DiffExpr, ExprError> {
        ctx.check_direction(mu)?;
        Ok(self.partial(&Var::X(mu)))
    }

    /// Replaces variables by expressions; unmapped variables stay.
    pub fn substitute(&self, map: &dyn Fn(&Var) -> Option<DiffExpr>) -> Result<DiffExpr, ExprError> {
        let mut out = DiffExpr::zero();
        for (m, c) in &self.0 {
            let mut prod = DiffExpr::constant(c.clone());
            for (a, e) in &m.0 {
                let base = match a {
                    Atom::Var(v) => map(v).unwrap_or_else(|| DiffExpr::var(v.clone())),
                    Atom::Apply(h, arg) => DiffExpr::apply(*h, arg.substitute(map)?)?,
                };
                prod = &prod * &base.pow(*e);
            }
            out.add_assign_ref(&prod);
        }
        Ok(out)
    }

    /// Rewrites every jet variable `u^α_i` as `u^α_{g(i)}`.
    pub fn map_jets(&self, g: &dyn Fn(usize, &MultiIndex) -> MultiIndex) -> DiffExpr {
        self.substitute(&|v| match v {
            Var::U(a, i) => Some(DiffExpr::u(*a, g(*a, i))),
            Var::X(_) => None,
        })
        .expect("index relabelling cannot create a division by zero")
    }
}

fn head_derivative(head: Head, arg: &DiffExpr) -> DiffExpr {
    let build = |h| DiffExpr::apply(h, arg.clone()).expect("argument already accepted");
    match head {
        Head::Sin => build(Head::Cos),
        Head::Cos => -build(Head::Sin),
        Head::Exp => build(Head::Exp),
        Head::Ln => build(Head::Inv),
        Head::Inv => -build(Head::Inv).pow(2),
    }
}

impl<'a> Add<&'a DiffExpr> for &'a DiffExpr {
    type Output = DiffExpr;
    fn add(self, rhs: &DiffExpr) -> DiffExpr {
        let (big, small) = if self.0.len() >= rhs.0.len() { (self, rhs) } else { (rhs, self) };
        let mut out = big.clone();
        out.add_assign_ref(small);
        out
    }
}

impl Add for DiffExpr {
    type Output = DiffExpr;
    fn add(mut self, rhs: DiffExpr) -> DiffExpr {
        for (m, c) in rhs.0 {
            self.add_term(m, c);
        }
        self
    }
}

impl<'a> Sub<&'a DiffExpr> for &'a DiffExpr {
    type Output = DiffExpr;
    fn sub(self, rhs: &DiffExpr) -> DiffExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.0 {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Sub for DiffExpr {
    type Output = DiffExpr;
    fn sub(self, rhs: DiffExpr) -> DiffExpr {
        &self - &rhs
    }
}

impl<'a> Mul<&'a DiffExpr> for &'a DiffExpr {
    type Output = DiffExpr;
    fn mul(self, rhs: &DiffExpr) -> DiffExpr {
        let mut out = DiffExpr::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &rhs.0 {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for DiffExpr {
    type Output = DiffExpr;
    fn mul(self, rhs: DiffExpr) -> DiffExpr {
        &self * &rhs
    }
}

impl Neg for DiffExpr {
    type Output = DiffExpr;
    fn neg(mut self) -> DiffExpr {
        for c in self.0.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Neg for &DiffExpr {
    type Output = DiffExpr;
    fn neg(self) -> DiffExpr {
        -self.clone()
    }
}

impl From<i64> for DiffExpr {
    fn from(n: i64) -> Self {
        DiffExpr::int(n)
    }
}

pub(crate) fn rational_is_integer(c: &Rational) -> Option<i64> {
    if c.is_integer() {
        let n = c.to_integer();
        if n.abs() <= BigInt::from(i64::MAX) {
            return i64::try_from(n).ok();
        }
    }
    None
}
