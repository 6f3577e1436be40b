//! The variational corner of the bicomplex: integration by parts down to
//! source forms, the Euler operator, total divergences and conservation
//! laws.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::evofield::{prolong, Family, FieldError};
use crate::expr::{equal, Context, DiffExpr, ExprError};
use crate::forms::{forms_equal, BiForm, FormError, Gen};
use crate::jetalg::{total_derivative, total_derivative_multi, DerivativeTable};
use crate::multiindex::MultiIndex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VarError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("expected a form of bidegree (1,{m}): {found}")]
    Bidegree { m: usize, found: String },
    #[error("window {window} too small: the Lagrangian needs at least {needed}")]
    Window { needed: u32, window: u32 },
    #[error("current has {got} components, expected {expected}")]
    CurrentLength { expected: usize, got: usize },
    #[error("computation cancelled")]
    Cancelled,
    #[error("invariant violation: {0}")]
    Invariant(String),
}

/// Cooperative cancellation flag shared between a caller and a long
/// normalization.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

/// `Σ_α E_α ρ^α_0 ∧ θ^1 ∧ … ∧ θ^m`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceForm(BTreeMap<usize, DiffExpr>);

impl SourceForm {
    pub fn new(coeffs: impl IntoIterator<Item = (usize, DiffExpr)>) -> Self {
        SourceForm(coeffs.into_iter().filter(|(_, e)| !e.is_zero()).collect())
    }

    pub fn get(&self, alpha: usize) -> DiffExpr {
        self.0.get(&alpha).cloned().unwrap_or_default()
    }

    pub fn coefficients(&self) -> &BTreeMap<usize, DiffExpr> {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Semantic vanishing; differs from [`Self::is_zero`] only for
    /// transcendental coefficients that are zero but not canonically so.
    pub fn vanishes(&self, ctx: &Context) -> Result<bool, ExprError> {
        for e in self.0.values() {
            if !equal(e, &DiffExpr::zero(), ctx)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_form(&self, ctx: &Context) -> BiForm {
        let vol = BiForm::volume(ctx);
        let mut out = BiForm::zero();
        for (a, e) in &self.0 {
            out = out + BiForm::rho(*a, ctx.zero_index()).wedge(&vol).scale(e);
        }
        out
    }
}

/// A horizontal `(m−1)`-form `Σ_μ J^μ ν_μ`, where `θ^μ ∧ ν_μ` is the volume
/// form.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentJ(Vec<DiffExpr>);

impl CurrentJ {
    pub fn new(components: Vec<DiffExpr>, ctx: &Context) -> Result<Self, VarError> {
        if components.len() != ctx.m() {
            return Err(VarError::CurrentLength { expected: ctx.m(), got: components.len() });
        }
        Ok(CurrentJ(components))
    }

    pub fn components(&self) -> &[DiffExpr] {
        &self.0
    }

    pub fn to_form(&self, ctx: &Context) -> BiForm {
        let mut out = BiForm::zero();
        for (mu, j) in self.0.iter().enumerate() {
            out = out + BiForm::volume_without(mu, ctx).scale(j);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pivot {
    /// Lower the first direction with a positive entry.
    #[default]
    Smallest,
    /// Lower the last direction with a positive entry.
    Largest,
}

/// `ω = σ + d_H η`.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrated {
    pub source: SourceForm,
    pub eta: BiForm,
}

pub fn integrate_by_parts(omega: &BiForm, ctx: &Context) -> Result<Integrated, VarError> {
    integrate_by_parts_with(omega, Pivot::Smallest, None, ctx)
}

/// Rewrites `c ρ^α_i ∧ vol`, `i ≠ 0`, as `−(D_μ c) ρ^α_{i−(μ)} ∧ vol` plus
/// `d_H(−c ρ^α_{i−(μ)} ∧ ν_μ)` until only `i = 0` remains. Each step lowers
/// `|i|`, and the identity `ω = σ + d_H η` is checked before returning.
pub fn integrate_by_parts_with(
    omega: &BiForm,
    pivot: Pivot,
    cancel: Option<&CancelToken>,
    ctx: &Context,
) -> Result<Integrated, VarError> {
    let m = ctx.m();
    // Keyed by (|i|, α, i) so the highest order is always processed first
    // and lower-order contributions merge before their turn.
    let mut pending: BTreeMap<(u32, usize, MultiIndex), DiffExpr> = BTreeMap::new();
    for (word, c) in omega.terms() {
        let (Some(Gen::Rho(a, i)), true) = (word.first(), word.len() == m + 1 && !word[1..].iter().any(Gen::is_vertical))
        else {
            return Err(VarError::Bidegree { m, found: omega.display(ctx) });
        };
        pending.insert((i.norm(), *a, i.clone()), c.clone());
    }
    let mut eta = BiForm::zero();
    let mut source = BTreeMap::new();
    while let Some(((n, a, i), c)) = pending.pop_last() {
        if cancel.is_some_and(CancelToken::is_cancelled) {
            return Err(VarError::Cancelled);
        }
        if c.is_zero() {
            continue;
        }
        if n == 0 {
            source.insert(a, c);
            continue;
        }
        let positive = (0..m).filter(|&mu| i.get(mu) > 0);
        let mu = match pivot {
            Pivot::Smallest => positive.min(),
            Pivot::Largest => positive.max(),
        }
        .expect("nonzero index");
        let lower = i.lowered(mu).expect("positive entry");
        let dc = total_derivative(&c, mu, ctx)?;
        pending.entry((n - 1, a, lower.clone())).or_default().add_assign_ref(&-dc);
        eta = eta + BiForm::rho(a, lower).wedge(&BiForm::volume_without(mu, ctx)).scale(&-c);
    }
    let source = SourceForm::new(source);
    let rebuilt = source.to_form(ctx) + eta.d_h(ctx)?;
    if !forms_equal(&rebuilt, omega, ctx)? {
        return Err(VarError::Invariant("integration by parts certificate does not verify".into()));
    }
    Ok(Integrated { source, eta })
}

/// `E_α = Σ_i (−1)^{|i|} D_i ∂L/∂u^α_i`.
pub fn euler_closed_form(lagrangian: &DiffExpr, ctx: &Context) -> Result<SourceForm, VarError> {
    let mut out: BTreeMap<usize, DiffExpr> = BTreeMap::new();
    for (a, i) in lagrangian.jet_support() {
        let mut term = total_derivative_multi(&lagrangian.partial_u(a, &i), &i, ctx)?;
        if i.norm() % 2 == 1 {
            term = -term;
        }
        out.entry(a).or_default().add_assign_ref(&term);
    }
    Ok(SourceForm::new(out))
}

/// The Euler operator: the source form of `d_V(L θ^1 ∧ … ∧ θ^m)`,
/// cross-checked against [`euler_closed_form`].
pub fn euler(lagrangian: &DiffExpr, ctx: &Context) -> Result<SourceForm, VarError> {
    let omega = BiForm::function(lagrangian.clone()).wedge(&BiForm::volume(ctx)).d_v(ctx);
    let source = integrate_by_parts(&omega, ctx)?.source;
    let closed = euler_closed_form(lagrangian, ctx)?;
    for a in 0..ctx.deps().len() {
        if !equal(&source.get(a), &closed.get(a), ctx)? {
            return Err(VarError::Invariant(format!(
                "Euler operator for {} disagrees with the closed form",
                ctx.dep_name(a)
            )));
        }
    }
    Ok(source)
}

/// Whether `f θ^1 ∧ … ∧ θ^m` is `d_H`-exact, i.e. `f = Σ D_μ J^μ`. By
/// exactness of the rows this is the kernel of the Euler operator.
pub fn is_total_divergence(f: &DiffExpr, ctx: &Context) -> Result<bool, VarError> {
    Ok(euler(f, ctx)?.vanishes(ctx)?)
}

/// `Div J = Σ_μ D_μ J^μ`, checked against `d_H` of the current's form.
pub fn divergence(j: &CurrentJ, ctx: &Context) -> Result<DiffExpr, VarError> {
    let mut out = DiffExpr::zero();
    for (mu, c) in j.0.iter().enumerate() {
        out = out + total_derivative(c, mu, ctx)?;
    }
    let vol: Vec<Gen> = (0..ctx.m()).map(Gen::Theta).collect();
    let via_forms = j.to_form(ctx).d_h(ctx)?;
    if !equal(&via_forms.coefficient(&vol), &out, ctx)? {
        return Err(VarError::Invariant("divergence disagrees with d_H of the current".into()));
    }
    Ok(out)
}

/// Cofactors `Q^{σ i}` for `Div J = Σ Q^{σ i} D_i F^σ`.
pub type Cofactors = BTreeMap<(usize, MultiIndex), DiffExpr>;

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationCheck {
    pub holds: bool,
    pub divergence: DiffExpr,
    /// `Div J − Σ Q^{σ i} D_i F^σ`; zero exactly when the law holds.
    pub residual: DiffExpr,
}

pub fn check_conservation_law(
    j: &CurrentJ,
    system: &[DiffExpr],
    cofactors: &Cofactors,
    cancel: Option<&CancelToken>,
    ctx: &Context,
) -> Result<ConservationCheck, VarError> {
    let div = divergence(j, ctx)?;
    let mut residual = div.clone();
    let mut tables: BTreeMap<usize, DerivativeTable> = BTreeMap::new();
    for ((s, i), q) in cofactors {
        if cancel.is_some_and(CancelToken::is_cancelled) {
            return Err(VarError::Cancelled);
        }
        let f = system
            .get(*s)
            .ok_or_else(|| VarError::Invariant(format!("cofactor refers to equation {} of {}", s + 1, system.len())))?;
        let table = tables.entry(*s).or_insert_with(|| DerivativeTable::new(f.clone(), ctx));
        residual = residual - q * &table.get(i)?;
    }
    let holds = equal(&residual, &DiffExpr::zero(), ctx)?;
    Ok(ConservationCheck { holds, divergence: div, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoetherCheck {
    pub holds: bool,
    /// `pr X (L)`.
    pub variation: DiffExpr,
    /// Euler operator of the variation; zero exactly when it is a divergence.
    pub euler: SourceForm,
}

/// Whether the evolutionary field with characteristic `φ` changes `L` by a
/// total divergence.
pub fn noether_symmetry_check(phi: &Family, lagrangian: &DiffExpr, window: u32, ctx: &Context) -> Result<NoetherCheck, VarError> {
    let needed = lagrangian.order().map_or(0, |o| o + 1);
    if window < needed {
        return Err(VarError::Window { needed, window });
    }
    let x = prolong(phi, window, ctx)?;
    let variation = x.apply(lagrangian, ctx)?;
    let e = euler(&variation, ctx)?;
    Ok(NoetherCheck { holds: e.vanishes(ctx)?, variation, euler: e })
}

#[cfg(test)]
mod tests;
