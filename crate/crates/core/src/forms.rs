//! Bigraded forms on the jet space: coefficients in the differential
//! algebra on wedge words in the contact generators `ρ^α_i` and the
//! horizontal generators `θ^μ = dx^μ`.
//!
//! Words are kept sorted (all `ρ` before all `θ`, each block in increasing
//! order) with the permutation sign absorbed into the coefficient. Every
//! operator is the unique (anti)derivation extending its action on
//! functions and generators:
//!
//! * `d_V f = ∂f/∂u^α_i ρ^α_i`, `d_V ρ = 0`, `d_V θ = 0`;
//! * `d_H f = D_μ f θ^μ`, `d_H ρ^α_i = −ρ^α_{i+(μ)} ∧ θ^μ`, `d_H θ = 0`;
//! * `i_X ρ^α_i = ζ^α_i`, `i_X θ^μ = X^μ` for `X = X^μ D_μ + ζ`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evofield::{FieldError, FieldJson, VerticalField};
use crate::expr::{equal, parse, Context, DiffExpr, ExprError};
use crate::jetalg::total_derivative;
use crate::multiindex::MultiIndex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("degree error: {0}")]
    Degree(String),
    #[error("syntax error in form term {0:?}: {1}")]
    Syntax(String, String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

/// A one-form generator. The derived order puts every `ρ` before every `θ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    Rho(usize, MultiIndex),
    Theta(usize),
}

impl Gen {
    pub fn is_vertical(&self) -> bool {
        matches!(self, Gen::Rho(..))
    }

    pub fn display(&self, ctx: &Context) -> String {
        match self {
            Gen::Rho(a, i) => format!("rho[{};{}]", ctx.dep_name(*a), i),
            Gen::Theta(mu) => format!("dx{}", mu + 1),
        }
    }
}

/// Sorts a word, returning the sign of the permutation, or `None` when a
/// generator repeats.
fn canonical(mut word: Vec<Gen>) -> Option<(Vec<Gen>, bool)> {
    let mut negative = false;
    for k in 1..word.len() {
        let mut j = k;
        while j > 0 && word[j - 1] > word[j] {
            word.swap(j - 1, j);
            negative = !negative;
            j -= 1;
        }
    }
    if word.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((word, negative))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BiForm(BTreeMap<Vec<Gen>, DiffExpr>);

impl BiForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn function(f: DiffExpr) -> Self {
        let mut out = Self::zero();
        out.push(f, Vec::new());
        out
    }

    /// `c · g_1 ∧ … ∧ g_n` for generators in any order.
    pub fn term(c: DiffExpr, word: Vec<Gen>) -> Self {
        let mut out = Self::zero();
        out.push(c, word);
        out
    }

    pub fn rho(alpha: usize, i: MultiIndex) -> Self {
        Self::term(DiffExpr::one(), vec![Gen::Rho(alpha, i)])
    }

    pub fn theta(mu: usize) -> Self {
        Self::term(DiffExpr::one(), vec![Gen::Theta(mu)])
    }

    /// `θ^1 ∧ … ∧ θ^m`.
    pub fn volume(ctx: &Context) -> Self {
        Self::term(DiffExpr::one(), (0..ctx.m()).map(Gen::Theta).collect())
    }

    /// `ν_μ` with `θ^μ ∧ ν_μ = θ^1 ∧ … ∧ θ^m`: the volume word with `θ^μ`
    /// deleted and sign `(−1)^{μ−1}` (directions counted from one).
    pub fn volume_without(mu: usize, ctx: &Context) -> Self {
        let word: Vec<Gen> = (0..ctx.m()).filter(|&n| n != mu).map(Gen::Theta).collect();
        let c = if mu % 2 == 1 { DiffExpr::int(-1) } else { DiffExpr::one() };
        Self::term(c, word)
    }

    fn push(&mut self, c: DiffExpr, word: Vec<Gen>) {
        if c.is_zero() {
            return;
        }
        let Some((word, negative)) = canonical(word) else { return };
        let c = if negative { -c } else { c };
        match self.0.get_mut(&word) {
            Some(e) => {
                e.add_assign_ref(&c);
                if e.is_zero() {
                    self.0.remove(&word);
                }
            }
            None => {
                self.0.insert(word, c);
            }
        }
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Gen>, DiffExpr> {
        &self.0
    }

    pub fn coefficient(&self, word: &[Gen]) -> DiffExpr {
        self.0.get(word).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bidegrees(&self) -> BTreeSet<(usize, usize)> {
        self.0.keys().map(|w| bidegree(w)).collect()
    }

    /// The single bidegree of a nonzero homogeneous form.
    pub fn bidegree(&self) -> Option<(usize, usize)> {
        let b = self.bidegrees();
        if b.len() == 1 {
            b.into_iter().next()
        } else {
            None
        }
    }

    pub fn scale(&self, f: &DiffExpr) -> BiForm {
        let mut out = Self::zero();
        for (w, c) in &self.0 {
            out.push(c * f, w.clone());
        }
        out
    }

    pub fn wedge(&self, other: &BiForm) -> BiForm {
        let mut out = Self::zero();
        for (w1, c1) in &self.0 {
            for (w2, c2) in &other.0 {
                let mut w = w1.clone();
                w.extend(w2.iter().cloned());
                out.push(c1 * c2, w);
            }
        }
        out
    }

    /// Applies a derivation termwise. `on_coeff` gives the form `D(c)`,
    /// `on_gen` the form `D(g)`; odd derivations pick up `(−1)^{k}` when
    /// passing the first `k` generators.
    fn derive(
        &self,
        odd: bool,
        on_coeff: &mut dyn FnMut(&DiffExpr) -> Result<BiForm, FormError>,
        on_gen: &mut dyn FnMut(&Gen) -> Result<BiForm, FormError>,
    ) -> Result<BiForm, FormError> {
        let mut out = Self::zero();
        let mut cache: BTreeMap<Gen, BiForm> = BTreeMap::new();
        for (word, c) in &self.0 {
            for (w, dc) in &on_coeff(c)?.0 {
                let mut full = w.clone();
                full.extend(word.iter().cloned());
                out.push(dc.clone(), full);
            }
            for (k, g) in word.iter().enumerate() {
                if !cache.contains_key(g) {
                    let image = on_gen(g)?;
                    cache.insert(g.clone(), image);
                }
                let negative = odd && k % 2 == 1;
                for (w, e) in &cache[g].0 {
                    let mut full = word[..k].to_vec();
                    full.extend(w.iter().cloned());
                    full.extend(word[k + 1..].iter().cloned());
                    let coeff = c * e;
                    out.push(if negative { -coeff } else { coeff }, full);
                }
            }
        }
        Ok(out)
    }

    pub fn d_v(&self, _ctx: &Context) -> BiForm {
        self.derive(
            true,
            &mut |c| Ok(vertical_differential(c)),
            &mut |_| Ok(BiForm::zero()),
        )
        .expect("vertical differential is total")
    }

    pub fn d_h(&self, ctx: &Context) -> Result<BiForm, FormError> {
        self.derive(
            true,
            &mut |c| horizontal_differential(c, ctx),
            &mut |g| {
                let mut out = BiForm::zero();
                if let Gen::Rho(a, i) = g {
                    for mu in 0..ctx.m() {
                        out.push(DiffExpr::int(-1), vec![Gen::Rho(*a, i.raised(mu)), Gen::Theta(mu)]);
                    }
                }
                Ok(out)
            },
        )
    }

    pub fn d(&self, ctx: &Context) -> Result<BiForm, FormError> {
        Ok(self.d_v(ctx) + self.d_h(ctx)?)
    }

    pub fn interior(&self, x: &MixedField, ctx: &Context) -> Result<BiForm, FormError> {
        self.derive(
            true,
            &mut |_| Ok(BiForm::zero()),
            &mut |g| {
                Ok(BiForm::function(match g {
                    Gen::Rho(a, i) => x.vertical.component(*a, i, ctx)?,
                    Gen::Theta(mu) => x.horizontal_component(*mu),
                }))
            },
        )
    }

    /// `L_X` as the even derivation fixed by its values on functions and
    /// generators.
    pub fn lie_by_generators(&self, x: &MixedField, ctx: &Context) -> Result<BiForm, FormError> {
        self.derive(
            false,
            &mut |c| Ok(BiForm::function(x.apply(c, ctx)?)),
            &mut |g| match g {
                Gen::Rho(a, i) => {
                    let z = x.vertical.component(*a, i, ctx)?;
                    let mut out = vertical_differential(&z);
                    for mu in 0..ctx.m() {
                        let up = i.raised(mu);
                        out.push(x.horizontal_component(mu), vec![Gen::Rho(*a, up.clone())]);
                        let conn = total_derivative(&z, mu, ctx)? - x.vertical.component(*a, &up, ctx)?;
                        out.push(conn, vec![Gen::Theta(mu)]);
                    }
                    Ok(out)
                }
                Gen::Theta(mu) => {
                    let xm = x.horizontal_component(*mu);
                    Ok(vertical_differential(&xm) + horizontal_differential(&xm, ctx)?)
                }
            },
        )
    }

    /// `L_X = d ∘ i_X + i_X ∘ d`.
    pub fn lie_by_magic(&self, x: &MixedField, ctx: &Context) -> Result<BiForm, FormError> {
        Ok(self.interior(x, ctx)?.d(ctx)? + self.d(ctx)?.interior(x, ctx)?)
    }

    /// `L_X ω`, computed on generators and by the magic formula; the two
    /// must agree.
    pub fn lie(&self, x: &MixedField, ctx: &Context) -> Result<BiForm, FormError> {
        let direct = self.lie_by_generators(x, ctx)?;
        let magic = self.lie_by_magic(x, ctx)?;
        if !forms_equal(&direct, &magic, ctx)? {
            return Err(FormError::Invariant("Lie derivative on generators disagrees with the magic formula".into()));
        }
        Ok(direct)
    }

    /// The filtration level: least vertical degree among the terms of a
    /// form of one total degree. `None` for the zero form.
    pub fn cartan_degree(&self) -> Result<Option<usize>, FormError> {
        let totals: BTreeSet<usize> = self.0.keys().map(Vec::len).collect();
        if totals.len() > 1 {
            return Err(FormError::Degree(format!("form mixes total degrees {totals:?}")));
        }
        Ok(self.0.keys().map(|w| bidegree(w).0).min())
    }

    /// Terms of the given bidegree.
    pub fn part(&self, p: usize, q: usize) -> BiForm {
        BiForm(self.0.iter().filter(|(w, _)| bidegree(w) == (p, q)).map(|(w, c)| (w.clone(), c.clone())).collect())
    }

    pub fn display(&self, ctx: &Context) -> String {
        if self.0.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (w, c) in &self.0 {
            let coeff = c.to_text(ctx);
            if w.is_empty() {
                parts.push(format!("({coeff})"));
            } else {
                let gens: Vec<String> = w.iter().map(|g| g.display(ctx)).collect();
                parts.push(format!("({coeff}) {}", gens.join(" ∧ ")));
            }
        }
        parts.join(" + ")
    }
}

fn bidegree(w: &[Gen]) -> (usize, usize) {
    let p = w.iter().filter(|g| g.is_vertical()).count();
    (p, w.len() - p)
}

fn vertical_differential(c: &DiffExpr) -> BiForm {
    let mut out = BiForm::zero();
    for (a, i) in c.jet_support() {
        let d = c.partial_u(a, &i);
        out.push(d, vec![Gen::Rho(a, i)]);
    }
    out
}

fn horizontal_differential(c: &DiffExpr, ctx: &Context) -> Result<BiForm, FormError> {
    let mut out = BiForm::zero();
    for mu in 0..ctx.m() {
        out.push(total_derivative(c, mu, ctx)?, vec![Gen::Theta(mu)]);
    }
    Ok(out)
}

/// Coefficientwise equality.
pub fn forms_equal(a: &BiForm, b: &BiForm, ctx: &Context) -> Result<bool, ExprError> {
    let words: BTreeSet<&Vec<Gen>> = a.0.keys().chain(b.0.keys()).collect();
    for w in words {
        if !equal(&a.coefficient(w), &b.coefficient(w), ctx)? {
            return Ok(false);
        }
    }
    Ok(true)
}

impl std::ops::Add for BiForm {
    type Output = BiForm;
    fn add(mut self, rhs: BiForm) -> BiForm {
        for (w, c) in rhs.0 {
            self.push(c, w);
        }
        self
    }
}

impl std::ops::Neg for BiForm {
    type Output = BiForm;
    fn neg(self) -> BiForm {
        BiForm(self.0.into_iter().map(|(w, c)| (w, -c)).collect())
    }
}

impl std::ops::Sub for BiForm {
    type Output = BiForm;
    fn sub(self, rhs: BiForm) -> BiForm {
        self + (-rhs)
    }
}

/// `X = X^μ D_μ + Σ ζ^α_i ∂_{u^α_i}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MixedField {
    pub vertical: VerticalField,
    pub horizontal: BTreeMap<usize, DiffExpr>,
}

impl MixedField {
    pub fn new(vertical: VerticalField, horizontal: BTreeMap<usize, DiffExpr>) -> Self {
        let horizontal = horizontal.into_iter().filter(|(_, e)| !e.is_zero()).collect();
        MixedField { vertical, horizontal }
    }

    pub fn vertical(v: VerticalField) -> Self {
        Self::new(v, BTreeMap::new())
    }

    pub fn horizontal(h: BTreeMap<usize, DiffExpr>) -> Self {
        Self::new(VerticalField::zero(), h)
    }

    pub fn horizontal_component(&self, mu: usize) -> DiffExpr {
        self.horizontal.get(&mu).cloned().unwrap_or_default()
    }

    /// `X f = X^μ D_μ f + ζ f`.
    pub fn apply(&self, f: &DiffExpr, ctx: &Context) -> Result<DiffExpr, FormError> {
        let mut out = self.vertical.apply(f, ctx)?;
        for (mu, c) in &self.horizontal {
            out = out + c * &total_derivative(f, *mu, ctx)?;
        }
        Ok(out)
    }
}

/// Parses `COEF | rho[v;(1)] dx2` (the generator part may be empty and the
/// `|` omitted for a function). Generators may be separated by blanks,
/// `∧` or `^`.
pub fn parse_term(text: &str, ctx: &Context) -> Result<BiForm, FormError> {
    let (coef, gens) = match text.split_once('|') {
        Some((c, g)) => (c, g),
        None => (text, ""),
    };
    let c = parse(coef, ctx)?;
    let mut word = Vec::new();
    for tok in gens.split(|ch: char| ch.is_whitespace() || ch == '∧' || ch == '^').filter(|t| !t.is_empty()) {
        word.push(parse_gen(tok, ctx).map_err(|e| FormError::Syntax(text.to_string(), e))?);
    }
    Ok(BiForm::term(c, word))
}

fn parse_gen(tok: &str, ctx: &Context) -> Result<Gen, String> {
    if let Some(rest) = tok.strip_prefix("dx") {
        let mu: usize = rest.parse().map_err(|_| format!("bad direction in {tok:?}"))?;
        if mu == 0 || mu > ctx.m() {
            return Err(format!("direction {mu} out of range 1..={}", ctx.m()));
        }
        return Ok(Gen::Theta(mu - 1));
    }
    let inner = tok
        .strip_prefix("rho[")
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| format!("expected rho[name;(i)] or dxN, found {tok:?}"))?;
    let (name, idx) = match inner.split_once(';') {
        Some((n, i)) => (n, Some(i)),
        None => (inner, None),
    };
    let a = ctx.dep_index(name).ok_or_else(|| format!("unknown dependent variable {name:?}"))?;
    let i = match idx {
        Some(i) => i.parse::<MultiIndex>().map_err(|e| e.to_string())?,
        None => ctx.zero_index(),
    };
    ctx.check_index(&i).map_err(|e| e.to_string())?;
    Ok(Gen::Rho(a, i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoJson {
    pub dep: String,
    pub index: MultiIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub vlist: Vec<RhoJson>,
    /// Horizontal directions, counted from one.
    pub hlist: Vec<usize>,
    pub coefficient: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalJson {
    /// Direction, counted from one.
    pub mu: usize,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedFieldJson {
    pub vertical: FieldJson,
    #[serde(default)]
    pub horizontal: Vec<HorizontalJson>,
}

impl BiForm {
    pub fn to_json(&self, ctx: &Context) -> Vec<TermJson> {
        self.0
            .iter()
            .map(|(w, c)| TermJson {
                vlist: w
                    .iter()
                    .filter_map(|g| match g {
                        Gen::Rho(a, i) => Some(RhoJson { dep: ctx.dep_name(*a).to_string(), index: i.clone() }),
                        Gen::Theta(_) => None,
                    })
                    .collect(),
                hlist: w
                    .iter()
                    .filter_map(|g| match g {
                        Gen::Theta(mu) => Some(mu + 1),
                        Gen::Rho(..) => None,
                    })
                    .collect(),
                coefficient: c.to_text(ctx),
            })
            .collect()
    }

    pub fn from_json(terms: &[TermJson], ctx: &Context) -> Result<BiForm, FormError> {
        let mut out = BiForm::zero();
        for t in terms {
            let mut word = Vec::new();
            for r in &t.vlist {
                let a = ctx.dep_index(&r.dep).ok_or_else(|| ExprError::UnknownDependent(r.dep.clone()))?;
                ctx.check_index(&r.index)?;
                word.push(Gen::Rho(a, r.index.clone()));
            }
            for &mu in &t.hlist {
                if mu == 0 {
                    return Err(ExprError::Direction { mu: 0, m: ctx.m() }.into());
                }
                ctx.check_direction(mu - 1)?;
                word.push(Gen::Theta(mu - 1));
            }
            out.push(parse(&t.coefficient, ctx)?, word);
        }
        Ok(out)
    }
}

impl MixedField {
    pub fn to_json(&self, ctx: &Context) -> MixedFieldJson {
        MixedFieldJson {
            vertical: self.vertical.to_json(ctx),
            horizontal: self
                .horizontal
                .iter()
                .map(|(mu, e)| HorizontalJson { mu: mu + 1, expr: e.to_text(ctx) })
                .collect(),
        }
    }

    pub fn from_json(json: &MixedFieldJson, ctx: &Context) -> Result<MixedField, FormError> {
        let vertical = VerticalField::from_json(&json.vertical, ctx)?;
        let mut horizontal = BTreeMap::new();
        for h in &json.horizontal {
            if h.mu == 0 {
                return Err(ExprError::Direction { mu: 0, m: ctx.m() }.into());
            }
            ctx.check_direction(h.mu - 1)?;
            horizontal.insert(h.mu - 1, parse(&h.expr, ctx)?);
        }
        Ok(MixedField::new(vertical, horizontal))
    }
}
