//! Vertical fields `ζ^α_i ∂_{u^α_i}`, the flat connection `∇_μ` and the
//! graded decomposition `ζ = Σ_k ε^k_{φ_k}`.
//!
//! A field is stored either with finite support (every component outside the
//! stored map is zero) or as a *window*: components are known for
//! `|i| ≤ w` only. Windows are how infinite objects such as prolongations
//! are materialised; any operation that would read a component beyond the
//! window fails with [`FieldError::OutsideWindow`] instead of treating it as
//! zero.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{equal, parse, Context, DiffExpr, ExprError};
use crate::jetalg::{total_derivative, DerivativeTable};
use crate::multiindex::{enumerate_exact, enumerate_upto, MultiIndex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("component u[{dep};{index}] lies outside the materialized window |i| <= {window}")]
    OutsideWindow { dep: String, index: MultiIndex, window: u32 },
    #[error("operation needs a window of at least {needed}, field has {window}")]
    WindowTooSmall { needed: u32, window: u32 },
    #[error("invariant violation: {0}")]
    Invariant(String),
}

pub type Key = (usize, MultiIndex);

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerticalField {
    comps: BTreeMap<Key, DiffExpr>,
    window: Option<u32>,
}

impl VerticalField {
    pub fn zero() -> Self {
        Self::default()
    }

    /// A field with finite support.
    pub fn exact(comps: impl IntoIterator<Item = (Key, DiffExpr)>) -> Self {
        VerticalField { comps: comps.into_iter().filter(|(_, e)| !e.is_zero()).collect(), window: None }
    }

    /// A field known on `|i| ≤ window`; entries beyond the window are dropped.
    pub fn windowed(comps: impl IntoIterator<Item = (Key, DiffExpr)>, window: u32) -> Self {
        VerticalField {
            comps: comps
                .into_iter()
                .filter(|((_, i), e)| !e.is_zero() && i.norm() <= window)
                .collect(),
            window: Some(window),
        }
    }

    pub fn window(&self) -> Option<u32> {
        self.window
    }

    pub fn components(&self) -> &BTreeMap<Key, DiffExpr> {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn covers(&self, i: &MultiIndex) -> bool {
        self.window.is_none_or(|w| i.norm() <= w)
    }

    pub fn component(&self, alpha: usize, i: &MultiIndex, ctx: &Context) -> Result<DiffExpr, FieldError> {
        if !self.covers(i) {
            return Err(FieldError::OutsideWindow {
                dep: ctx.dep_name(alpha).to_string(),
                index: i.clone(),
                window: self.window.unwrap_or(0),
            });
        }
        Ok(self.comps.get(&(alpha, i.clone())).cloned().unwrap_or_default())
    }

    /// The same field viewed on the smaller window `|i| ≤ w`.
    pub fn restrict(&self, w: u32) -> Result<VerticalField, FieldError> {
        if let Some(own) = self.window {
            if w > own {
                return Err(FieldError::WindowTooSmall { needed: w, window: own });
            }
        }
        Ok(VerticalField::windowed(self.comps.clone(), w))
    }

    /// `X f = Σ ζ^α_i ∂f/∂u^α_i`.
    pub fn apply(&self, f: &DiffExpr, ctx: &Context) -> Result<DiffExpr, FieldError> {
        let mut out = DiffExpr::zero();
        for (a, i) in f.jet_support() {
            let z = self.component(a, &i, ctx)?;
            if !z.is_zero() {
                out = out + &z * &f.partial_u(a, &i);
            }
        }
        Ok(out)
    }

    fn shrink(&self, by: u32) -> Result<Option<u32>, FieldError> {
        match self.window {
            None => Ok(None),
            Some(w) if w >= by => Ok(Some(w - by)),
            Some(w) => Err(FieldError::WindowTooSmall { needed: by, window: w }),
        }
    }

    fn build(comps: BTreeMap<Key, DiffExpr>, window: Option<u32>) -> VerticalField {
        match window {
            None => VerticalField::exact(comps),
            Some(w) => VerticalField::windowed(comps, w),
        }
    }

    /// `(∇_μ ζ)^α_i = D_μ ζ^α_i − ζ^α_{i+(μ)}`. A window shrinks by one.
    pub fn nabla(&self, mu: usize, ctx: &Context) -> Result<VerticalField, FieldError> {
        ctx.check_direction(mu)?;
        let window = self.shrink(1)?;
        let mut keys: BTreeSet<Key> = BTreeSet::new();
        for (a, i) in self.comps.keys() {
            keys.insert((*a, i.clone()));
            if let Some(lo) = i.lowered(mu) {
                keys.insert((*a, lo));
            }
        }
        let mut out = BTreeMap::new();
        for (a, i) in keys {
            if window.is_some_and(|w| i.norm() > w) {
                continue;
            }
            let here = self.comps.get(&(a, i.clone())).cloned().unwrap_or_default();
            let up = self.component(a, &i.raised(mu), ctx)?;
            out.insert((a, i), total_derivative(&here, mu, ctx)? - up);
        }
        Ok(Self::build(out, window))
    }

    /// `∇_r` by repeated application of the first-order operators.
    pub fn nabla_iterated(&self, r: &MultiIndex, ctx: &Context) -> Result<VerticalField, FieldError> {
        ctx.check_index(r)?;
        let mut out = self.clone();
        for mu in 0..ctx.m() {
            for _ in 0..r.get(mu) {
                out = out.nabla(mu, ctx)?;
            }
        }
        Ok(out)
    }

    /// `(∇_r ζ)^α_i = Σ_{k+j=r} (−1)^{|k|} C(r,k) D_j ζ^α_{i+k}`.
    pub fn nabla_closed(&self, r: &MultiIndex, ctx: &Context) -> Result<VerticalField, FieldError> {
        ctx.check_index(r)?;
        let window = self.shrink(r.norm())?;
        let ks = r.lower_set();
        let mut keys = BTreeSet::new();
        for (a, s) in self.comps.keys() {
            for k in &ks {
                if let Some(i) = s.checked_sub(k) {
                    if window.is_none_or(|w| i.norm() <= w) {
                        keys.insert((*a, i));
                    }
                }
            }
        }
        let mut tables: BTreeMap<Key, DerivativeTable> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for (a, i) in keys {
            let mut acc = DiffExpr::zero();
            for k in &ks {
                let src = i.add(k).expect("same length");
                let Some(z) = self.comps.get(&(a, src.clone())) else { continue };
                let j = r.checked_sub(k).expect("k <= r");
                let table = tables.entry((a, src)).or_insert_with(|| DerivativeTable::new(z.clone(), ctx));
                let mut c = r.binom(k);
                if k.norm() % 2 == 1 {
                    c = -c;
                }
                acc = acc + table.get(&j)?.scale_int(&c);
            }
            out.insert((a, i), acc);
        }
        Ok(Self::build(out, window))
    }

    /// `∇_r ζ` by the closed formula, cross-checked against iteration.
    pub fn nabla_multi(&self, r: &MultiIndex, ctx: &Context) -> Result<VerticalField, FieldError> {
        let closed = self.nabla_closed(r, ctx)?;
        if ctx.verify() {
            let iterated = self.nabla_iterated(r, ctx)?;
            if !fields_equal(&closed, &iterated, ctx)? {
                return Err(FieldError::Invariant(format!("closed form of nabla_{r} disagrees with iteration")));
            }
        }
        Ok(closed)
    }

    /// The bracket of two vertical fields,
    /// `[X,Y]^α_i = X(η^α_i) − Y(ζ^α_i)`.
    ///
    /// For windowed inputs the result window is the largest `w` on which
    /// every needed component is available.
    pub fn commutator(&self, other: &VerticalField, ctx: &Context) -> Result<VerticalField, FieldError> {
        let limit = match (self.window, other.window) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(u32::MAX).min(b.unwrap_or(u32::MAX))),
        };
        let keys: BTreeSet<Key> = self.comps.keys().chain(other.comps.keys()).cloned().collect();
        let mut by_norm: BTreeMap<u32, Vec<Key>> = BTreeMap::new();
        for k in keys {
            if limit.is_none_or(|w| k.1.norm() <= w) {
                by_norm.entry(k.1.norm()).or_default().push(k);
            }
        }
        let mut out = BTreeMap::new();
        let mut window = limit;
        'outer: for (n, group) in by_norm {
            let mut layer = Vec::new();
            for (a, i) in group {
                let eta = other.comps.get(&(a, i.clone())).cloned().unwrap_or_default();
                let zeta = self.comps.get(&(a, i.clone())).cloned().unwrap_or_default();
                match (self.apply(&eta, ctx), other.apply(&zeta, ctx)) {
                    (Ok(x), Ok(y)) => layer.push(((a, i), x - y)),
                    (Err(FieldError::OutsideWindow { .. }), _) | (_, Err(FieldError::OutsideWindow { .. }))
                        if limit.is_some() =>
                    {
                        if n == 0 {
                            return Err(FieldError::WindowTooSmall { needed: 1, window: 0 });
                        }
                        window = Some(n - 1);
                        break 'outer;
                    }
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                }
            }
            out.extend(layer);
        }
        Ok(Self::build(out, window))
    }
}

/// Componentwise equality; windows must agree.
pub fn fields_equal(a: &VerticalField, b: &VerticalField, ctx: &Context) -> Result<bool, FieldError> {
    if a.window != b.window {
        return Ok(false);
    }
    let keys: BTreeSet<&Key> = a.comps.keys().chain(b.comps.keys()).collect();
    for k in keys {
        let x = a.comps.get(k).cloned().unwrap_or_default();
        let y = b.comps.get(k).cloned().unwrap_or_default();
        if !equal(&x, &y, ctx)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A coefficient family `φ = (φ^α)`, one differential function per
/// dependent variable; absent entries are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Family(BTreeMap<usize, DiffExpr>);

impl Family {
    pub fn new(entries: impl IntoIterator<Item = (usize, DiffExpr)>) -> Self {
        Family(entries.into_iter().filter(|(_, e)| !e.is_zero()).collect())
    }

    pub fn single(alpha: usize, e: DiffExpr) -> Self {
        Self::new([(alpha, e)])
    }

    pub fn get(&self, alpha: usize) -> DiffExpr {
        self.0.get(&alpha).cloned().unwrap_or_default()
    }

    pub fn entries(&self) -> &BTreeMap<usize, DiffExpr> {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

/// `ε^{kα}_{φ i} = C(i,k) D_{i−k} φ^α`, zero unless `k ≤ i`.
pub fn epsilon_component(
    k: &MultiIndex,
    phi: &Family,
    alpha: usize,
    i: &MultiIndex,
    ctx: &Context,
) -> Result<DiffExpr, FieldError> {
    ctx.check_index(k)?;
    ctx.check_index(i)?;
    let Some(j) = i.checked_sub(k) else { return Ok(DiffExpr::zero()) };
    let d = crate::jetalg::total_derivative_multi(&phi.get(alpha), &j, ctx)?;
    Ok(d.scale_int(&i.binom(k)))
}

/// `Σ_k ε^k_{φ_k}` with finitely many nonzero generators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradedField(BTreeMap<MultiIndex, Family>);

impl GradedField {
    pub fn new(gens: impl IntoIterator<Item = (MultiIndex, Family)>) -> Self {
        GradedField(gens.into_iter().filter(|(_, f)| !f.is_zero()).collect())
    }

    pub fn generators(&self) -> &BTreeMap<MultiIndex, Family> {
        &self.0
    }

    pub fn get(&self, k: &MultiIndex) -> Family {
        self.0.get(k).cloned().unwrap_or_default()
    }

    /// Top degree `max |k|` over nonzero generators.
    pub fn degree(&self) -> Option<u32> {
        self.0.keys().map(MultiIndex::norm).max()
    }

    /// Components `|i| ≤ window` of `Σ_k ε^k_{φ_k}`.
    pub fn materialize(&self, window: u32, ctx: &Context) -> Result<VerticalField, FieldError> {
        let mut tables: BTreeMap<(MultiIndex, usize), DerivativeTable> = BTreeMap::new();
        let mut comps = BTreeMap::new();
        for i in enumerate_upto(window, ctx.m()) {
            for alpha in 0..ctx.deps().len() {
                let mut acc = DiffExpr::zero();
                for (k, phi) in &self.0 {
                    let Some(j) = i.checked_sub(k) else { continue };
                    let f = phi.get(alpha);
                    if f.is_zero() {
                        continue;
                    }
                    let table = tables.entry((k.clone(), alpha)).or_insert_with(|| DerivativeTable::new(f, ctx));
                    acc = acc + table.get(&j)?.scale_int(&i.binom(k));
                }
                comps.insert((alpha, i.clone()), acc);
            }
        }
        Ok(VerticalField::windowed(comps, window))
    }
}

/// The prolongation `ζ^α_i = D_i φ^α` materialized on `|i| ≤ window`.
pub fn prolong(phi: &Family, window: u32, ctx: &Context) -> Result<VerticalField, FieldError> {
    GradedField::new([(ctx.zero_index(), phi.clone())]).materialize(window, ctx)
}

/// The generators `φ_k`, `|k| ≤ cutoff`, of the unique decomposition
/// `ζ = Σ_k ε^k_{φ_k}`:
/// `φ^α_k = Σ_{i+j=k} (−1)^{|j|} C(k,i) D_j ζ^α_i`.
///
/// Components with `|i| ≤ cutoff` involve only generators with
/// `|k| ≤ cutoff`, so the reconstruction check below is exact.
pub fn decompose(zeta: &VerticalField, cutoff: u32, ctx: &Context) -> Result<GradedField, FieldError> {
    let truncated = zeta.restrict(cutoff)?;
    let mut tables: BTreeMap<Key, DerivativeTable> = BTreeMap::new();
    let mut gens = Vec::new();
    for k in enumerate_upto(cutoff, ctx.m()) {
        let mut family = Vec::new();
        for alpha in 0..ctx.deps().len() {
            let mut acc = DiffExpr::zero();
            for i in k.lower_set() {
                let Some(z) = truncated.comps.get(&(alpha, i.clone())) else { continue };
                let j = k.checked_sub(&i).expect("i <= k");
                let table = tables.entry((alpha, i.clone())).or_insert_with(|| DerivativeTable::new(z.clone(), ctx));
                let mut c: BigInt = k.binom(&i);
                if j.norm() % 2 == 1 {
                    c = -c;
                }
                acc = acc + table.get(&j)?.scale_int(&c);
            }
            family.push((alpha, acc));
        }
        gens.push((k, Family::new(family)));
    }
    let graded = GradedField::new(gens);
    if ctx.verify() {
        let rebuilt = graded.materialize(cutoff, ctx)?;
        if !fields_equal(&rebuilt, &truncated, ctx)? {
            return Err(FieldError::Invariant("decomposition does not reconstruct the field".into()));
        }
    }
    Ok(graded)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LieBacklundDegree {
    Degree(u32),
    Exceeds(u32),
}

/// The level `q` of the field in the filtration `E^(q) = ⊕_{|k|≤q} E^k`.
///
/// `q` is certified when every generator with `q < |k| ≤ cutoff` vanishes,
/// which requires `q < cutoff` unless the field is zero. The answer is
/// cross-checked against the recursive description: `∇_r ζ = 0` for all
/// `|r| = q + 1` on the components determined by the cutoff.
pub fn lie_backlund_degree(zeta: &VerticalField, cutoff: u32, ctx: &Context) -> Result<LieBacklundDegree, FieldError> {
    let graded = decompose(zeta, cutoff, ctx)?;
    let q = match graded.degree() {
        None => 0,
        Some(t) if t < cutoff => t,
        Some(_) => return Ok(LieBacklundDegree::Exceeds(cutoff)),
    };
    if ctx.verify() && q < cutoff {
        let truncated = zeta.restrict(cutoff)?;
        for r in enumerate_exact(q + 1, ctx.m()) {
            if !truncated.nabla_closed(&r, ctx)?.is_zero() {
                return Err(FieldError::Invariant(format!(
                    "graded degree {q} but nabla_{r} does not vanish"
                )));
            }
        }
    }
    Ok(LieBacklundDegree::Degree(q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentJson {
    pub dep: String,
    pub index: MultiIndex,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    #[serde(default)]
    pub window: Option<u32>,
    pub components: Vec<ComponentJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorJson {
    pub k: MultiIndex,
    pub phi: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedJson {
    pub generators: Vec<GeneratorJson>,
}

pub fn family_to_json(phi: &Family, ctx: &Context) -> BTreeMap<String, String> {
    phi.0.iter().map(|(a, e)| (ctx.dep_name(*a).to_string(), e.to_text(ctx))).collect()
}

pub fn family_from_json(map: &BTreeMap<String, String>, ctx: &Context) -> Result<Family, ExprError> {
    let mut out = Vec::new();
    for (name, text) in map {
        let a = ctx.dep_index(name).ok_or_else(|| ExprError::UnknownDependent(name.clone()))?;
        out.push((a, parse(text, ctx)?));
    }
    Ok(Family::new(out))
}

impl VerticalField {
    pub fn to_json(&self, ctx: &Context) -> FieldJson {
        FieldJson {
            window: self.window,
            components: self
                .comps
                .iter()
                .map(|((a, i), e)| ComponentJson {
                    dep: ctx.dep_name(*a).to_string(),
                    index: i.clone(),
                    expr: e.to_text(ctx),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &FieldJson, ctx: &Context) -> Result<VerticalField, ExprError> {
        let mut comps = Vec::new();
        for c in &json.components {
            let a = ctx.dep_index(&c.dep).ok_or_else(|| ExprError::UnknownDependent(c.dep.clone()))?;
            ctx.check_index(&c.index)?;
            comps.push(((a, c.index.clone()), parse(&c.expr, ctx)?));
        }
        Ok(Self::build(comps.into_iter().collect(), json.window))
    }
}

impl GradedField {
    pub fn to_json(&self, ctx: &Context) -> GradedJson {
        GradedJson {
            generators: self
                .0
                .iter()
                .map(|(k, phi)| GeneratorJson { k: k.clone(), phi: family_to_json(phi, ctx) })
                .collect(),
        }
    }

    pub fn from_json(json: &GradedJson, ctx: &Context) -> Result<GradedField, ExprError> {
        let mut gens = Vec::new();
        for g in &json.generators {
            ctx.check_index(&g.k)?;
            gens.push((g.k.clone(), family_from_json(&g.phi, ctx)?));
        }
        Ok(GradedField::new(gens))
    }
}
