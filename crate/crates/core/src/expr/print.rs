//! Re-parseable text and JSON trees.

use std::fmt;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::{Atom, Context, DiffExpr, ExprError, Head, Monomial, Rational, Var};
use crate::multiindex::MultiIndex;

/// Borrowing wrapper that prints an expression with the context's names.
pub struct Display<'a> {
    expr: &'a DiffExpr,
    ctx: &'a Context,
}

impl DiffExpr {
    pub fn display<'a>(&'a self, ctx: &'a Context) -> Display<'a> {
        Display { expr: self, ctx }
    }

    pub fn to_text(&self, ctx: &Context) -> String {
        self.display(ctx).to_string()
    }
}

pub(crate) fn var_text(v: &Var, ctx: &Context) -> String {
    match v {
        Var::X(mu) => format!("x{}", mu + 1),
        Var::U(a, i) => format!("u[{};{}]", ctx.dep_name(*a), i),
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, m: &Monomial, ctx: &Context) -> fmt::Result {
    for (n, (a, e)) in m.factors().iter().enumerate() {
        if n > 0 {
            write!(f, "*")?;
        }
        match a {
            Atom::Var(v) => write!(f, "{}", var_text(v, ctx))?,
            Atom::Apply(h, arg) => write!(f, "{}({})", h.name(), arg.display(ctx))?,
        }
        if *e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.is_zero() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.expr.terms().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (n, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.is_one() {
                write!(f, "{mag}")?;
            } else {
                if !mag.is_one() {
                    write!(f, "{mag}*")?;
                }
                write_monomial(f, m, self.ctx)?;
            }
        }
        Ok(())
    }
}

/// Serializable expression tree. Directions `mu` are 1-based, as in the text
/// form `x1, ..., xm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExprTree {
    Const { value: String },
    X { mu: usize },
    U { dep: String, index: MultiIndex },
    Sum { terms: Vec<ExprTree> },
    Prod { factors: Vec<ExprTree> },
    Pow { base: Box<ExprTree>, exp: u32 },
    Func { head: Head, arg: Box<ExprTree> },
}

impl DiffExpr {
    /// The canonical tree: a sum of products `coefficient * atom^e * ...`.
    pub fn to_tree(&self, ctx: &Context) -> ExprTree {
        let terms = self
            .terms()
            .map(|(m, c)| {
                let mut factors = vec![ExprTree::Const { value: c.to_string() }];
                for (a, e) in m.factors() {
                    let base = match a {
                        Atom::Var(Var::X(mu)) => ExprTree::X { mu: mu + 1 },
                        Atom::Var(Var::U(al, i)) => {
                            ExprTree::U { dep: ctx.dep_name(*al).to_string(), index: i.clone() }
                        }
                        Atom::Apply(h, arg) => ExprTree::Func { head: *h, arg: Box::new(arg.to_tree(ctx)) },
                    };
                    factors.push(if *e == 1 { base } else { ExprTree::Pow { base: Box::new(base), exp: *e } });
                }
                ExprTree::Prod { factors }
            })
            .collect();
        ExprTree::Sum { terms }
    }

    pub fn from_tree(tree: &ExprTree, ctx: &Context) -> Result<DiffExpr, ExprError> {
        Ok(match tree {
            ExprTree::Const { value } => {
                DiffExpr::constant(value.trim().parse::<Rational>().map_err(|_| ExprError::Syntax {
                    pos: 0,
                    msg: format!("bad rational {value:?}"),
                })?)
            }
            ExprTree::X { mu } => {
                if *mu == 0 {
                    return Err(ExprError::Direction { mu: 0, m: ctx.m() });
                }
                ctx.check_direction(mu - 1)?;
                DiffExpr::x(mu - 1)
            }
            ExprTree::U { dep, index } => {
                let a = ctx.dep_index(dep).ok_or_else(|| ExprError::UnknownDependent(dep.clone()))?;
                ctx.check_index(index)?;
                DiffExpr::u(a, index.clone())
            }
            ExprTree::Sum { terms } => {
                let mut acc = DiffExpr::zero();
                for t in terms {
                    acc = acc + DiffExpr::from_tree(t, ctx)?;
                }
                acc
            }
            ExprTree::Prod { factors } => {
                let mut acc = DiffExpr::one();
                for t in factors {
                    acc = acc * DiffExpr::from_tree(t, ctx)?;
                }
                acc
            }
            ExprTree::Pow { base, exp } => DiffExpr::from_tree(base, ctx)?.pow(*exp),
            ExprTree::Func { head, arg } => {
                if !ctx.transcendental() {
                    return Err(ExprError::Transcendental(format!("function {}", head.name())));
                }
                DiffExpr::apply(*head, DiffExpr::from_tree(arg, ctx)?)?
            }
        })
    }

    pub fn to_json(&self, ctx: &Context) -> serde_json::Value {
        serde_json::to_value(self.to_tree(ctx)).expect("tree is always serializable")
    }
}
