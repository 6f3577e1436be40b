//! Total derivatives `D_μ = ∂_{x^μ} + u^α_{i+(μ)} ∂_{u^α_i}` and the
//! structure they induce on the algebra of differential functions.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{equal, Context, DiffExpr, ExprError, Var};
use crate::multiindex::{enumerate_exact, MultiIndex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("section has no component for dependent variable {0:?}")]
    MissingSection(String),
    #[error("section component for {0:?} depends on jet variables")]
    NotASection(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

/// `D_μ f`. The sum runs over the finite jet support of `f`.
pub fn total_derivative(f: &DiffExpr, mu: usize, ctx: &Context) -> Result<DiffExpr, ExprError> {
    ctx.check_direction(mu)?;
    let mut out = f.partial(&Var::X(mu));
    for (a, i) in f.jet_support() {
        let d = f.partial_u(a, &i);
        out = out + &DiffExpr::u(a, i.raised(mu)) * &d;
    }
    Ok(out)
}

/// `D_j f = D_1^{j^1} ... D_m^{j^m} f`.
pub fn total_derivative_multi(f: &DiffExpr, j: &MultiIndex, ctx: &Context) -> Result<DiffExpr, ExprError> {
    ctx.check_index(j)?;
    let mut out = f.clone();
    for mu in 0..ctx.m() {
        for _ in 0..j.get(mu) {
            if out.is_zero() {
                return Ok(out);
            }
            out = total_derivative(&out, mu, ctx)?;
        }
    }
    Ok(out)
}

/// Memo of `D_j f` for a fixed `f`, filled on demand by shifting from a
/// lower index.
#[derive(Debug, Clone)]
pub struct DerivativeTable<'c> {
    ctx: &'c Context,
    table: BTreeMap<MultiIndex, DiffExpr>,
}

impl<'c> DerivativeTable<'c> {
    pub fn new(f: DiffExpr, ctx: &'c Context) -> Self {
        let mut table = BTreeMap::new();
        table.insert(ctx.zero_index(), f);
        DerivativeTable { ctx, table }
    }

    pub fn get(&mut self, j: &MultiIndex) -> Result<DiffExpr, ExprError> {
        if let Some(e) = self.table.get(j) {
            return Ok(e.clone());
        }
        self.ctx.check_index(j)?;
        let mu = (0..self.ctx.m()).find(|&mu| j.get(mu) > 0).expect("nonzero index");
        let lower = self.get(&j.lowered(mu).expect("positive entry"))?;
        let d = total_derivative(&lower, mu, self.ctx)?;
        self.table.insert(j.clone(), d.clone());
        Ok(d)
    }
}

/// A local section `x ↦ φ(x)`: one polynomial in `x` per dependent variable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Section(BTreeMap<usize, DiffExpr>);

impl Section {
    pub fn new(components: BTreeMap<usize, DiffExpr>, ctx: &Context) -> Result<Self, JetError> {
        for (a, e) in &components {
            if *a >= ctx.deps().len() {
                return Err(ExprError::UnknownDependent(format!("#{a}")).into());
            }
            if !e.jet_support().is_empty() {
                return Err(JetError::NotASection(ctx.dep_name(*a).to_string()));
            }
        }
        Ok(Section(components))
    }

    pub fn component(&self, alpha: usize) -> Option<&DiffExpr> {
        self.0.get(&alpha)
    }

    /// `∂_{x^i} φ^α`.
    pub fn jet(&self, alpha: usize, i: &MultiIndex, ctx: &Context) -> Result<DiffExpr, JetError> {
        let mut e = self
            .0
            .get(&alpha)
            .cloned()
            .ok_or_else(|| JetError::MissingSection(ctx.dep_name(alpha).to_string()))?;
        for mu in 0..ctx.m() {
            for _ in 0..i.get(mu) {
                e = e.partial(&Var::X(mu));
            }
        }
        Ok(e)
    }

    /// `f ∘ j^∞φ`: every `u^α_i` replaced by `∂_{x^i} φ^α`.
    pub fn pull_back(&self, f: &DiffExpr, ctx: &Context) -> Result<DiffExpr, JetError> {
        let mut jets = BTreeMap::new();
        for (a, i) in f.jet_support() {
            jets.insert(Var::U(a, i.clone()), self.jet(a, &i, ctx)?);
        }
        Ok(f.substitute(&|v| jets.get(v).cloned())?)
    }
}

/// Checks `∂_{x^μ}(f ∘ j^∞φ) = (D_μ f) ∘ j^∞φ`.
pub fn chain_rule_check(f: &DiffExpr, phi: &Section, mu: usize, ctx: &Context) -> Result<bool, JetError> {
    let lhs = phi.pull_back(f, ctx)?.partial_x(mu, ctx)?;
    let rhs = phi.pull_back(&total_derivative(f, mu, ctx)?, ctx)?;
    Ok(equal(&lhs, &rhs, ctx)?)
}

/// Whether `D_μ f = 0` for every `μ`.
///
/// The only `D`-constants of the algebra are the constants, so the answer is
/// computed both ways and a disagreement is reported as an invariant
/// violation.
pub fn is_d_constant(f: &DiffExpr, ctx: &Context) -> Result<bool, JetError> {
    let mut killed = true;
    for mu in 0..ctx.m() {
        if !equal(&total_derivative(f, mu, ctx)?, &DiffExpr::zero(), ctx)? {
            killed = false;
            break;
        }
    }
    let constant = f.is_constant() || {
        let mut all = true;
        for v in f.vars() {
            if !equal(&f.partial(&v), &DiffExpr::zero(), ctx)? {
                all = false;
                break;
            }
        }
        all
    };
    if killed != constant {
        return Err(JetError::Invariant(format!(
            "D-constancy ({killed}) disagrees with constancy ({constant}) for {}",
            f.to_text(ctx)
        )));
    }
    Ok(killed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizontalDegree {
    /// Least `q` with all `(q+1)`-fold total derivatives zero.
    Degree(u32),
    /// No such `q` up to the bound.
    Exceeds(u32),
}

/// Filtration level of `f` in `A^(q)_H`, searched up to `q_max`.
///
/// Members of the filtration are exactly the polynomials in `x` of total
/// degree `q`; that characterisation is cross-checked on the polynomial class.
pub fn horizontal_degree(f: &DiffExpr, q_max: u32, ctx: &Context) -> Result<HorizontalDegree, JetError> {
    let mut table = DerivativeTable::new(f.clone(), ctx);
    let mut found = HorizontalDegree::Exceeds(q_max);
    for q in 0..=q_max {
        let mut all_zero = true;
        for j in enumerate_exact(q + 1, ctx.m()) {
            if !equal(&table.get(&j)?, &DiffExpr::zero(), ctx)? {
                all_zero = false;
                break;
            }
        }
        if all_zero {
            found = HorizontalDegree::Degree(q);
            break;
        }
    }
    if ctx.verify() && !f.has_transcendental() {
        let expected = match f.x_degree() {
            Some(d) if d <= q_max => HorizontalDegree::Degree(d),
            _ => HorizontalDegree::Exceeds(q_max),
        };
        if expected != found {
            return Err(JetError::Invariant(format!(
                "horizontal degree {found:?} disagrees with polynomial degree {expected:?} for {}",
                f.to_text(ctx)
            )));
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str, ctx: &Context) -> DiffExpr {
        parse(s, ctx).unwrap()
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn section(ctx: &Context, comps: &[(usize, &str)]) -> Section {
        Section::new(comps.iter().map(|(a, s)| (*a, p(s, ctx))).collect(), ctx).unwrap()
    }

    #[test]
    fn total_derivative_examples() {
        let c1 = Context::new(1, ["v"]).unwrap();
        assert_eq!(total_derivative(&p("x1", &c1), 0, &c1).unwrap(), DiffExpr::one());
        let d = total_derivative(&p("u[v]^2", &c1), 0, &c1).unwrap();
        assert_eq!(d, p("2*u[v]*u[v;(1)]", &c1));
        assert!(chain_rule_check(&p("u[v]^2", &c1), &section(&c1, &[(0, "x1^3")]), 0, &c1).unwrap());
        let c2 = Context::new(2, ["v"]).unwrap();
        assert_eq!(total_derivative(&p("u[v;(1,0)]", &c2), 1, &c2).unwrap(), p("u[v;(1,1)]", &c2));
        assert!(total_derivative(&p("x1", &c2), 2, &c2).is_err());
    }

    #[test]
    fn multi_examples() {
        let c1 = Context::new(1, ["v"]).unwrap();
        let f = p("u[v;(1)]^2*x1", &c1);
        assert_eq!(total_derivative_multi(&f, &mi(&[0]), &c1).unwrap(), f);
        assert_eq!(total_derivative_multi(&p("u[v]", &c1), &mi(&[2]), &c1).unwrap(), p("u[v;(2)]", &c1));
        let c2 = Context::new(2, ["v"]).unwrap();
        let g = p("x1*x2", &c2);
        assert_eq!(total_derivative_multi(&g, &mi(&[1, 1]), &c2).unwrap(), DiffExpr::one());
        let other_order = total_derivative(&total_derivative(&g, 0, &c2).unwrap(), 1, &c2).unwrap();
        assert_eq!(other_order, DiffExpr::one());
        let mut table = DerivativeTable::new(p("u[v]*x2", &c2), &c2);
        assert_eq!(table.get(&mi(&[1, 1])).unwrap(), total_derivative_multi(&p("u[v]*x2", &c2), &mi(&[1, 1]), &c2).unwrap());
    }

    #[test]
    fn chain_rule_examples() {
        let c1 = Context::new(1, ["v"]).unwrap();
        assert!(chain_rule_check(&p("u[v;(1)]^2", &c1), &section(&c1, &[(0, "x1^3")]), 0, &c1).unwrap());
        assert!(chain_rule_check(&p("x1", &c1), &section(&c1, &[]), 0, &c1).unwrap());
        let c2 = Context::new(2, ["v"]).unwrap();
        let f = p("u[v]*u[v;(0,1)]", &c2);
        assert!(chain_rule_check(&f, &section(&c2, &[(0, "x1 + x2^2")]), 1, &c2).unwrap());
        assert!(matches!(
            chain_rule_check(&f, &section(&c2, &[]), 0, &c2),
            Err(JetError::MissingSection(_))
        ));
        assert!(matches!(
            Section::new([(0, p("u[v]", &c2))].into_iter().collect(), &c2),
            Err(JetError::NotASection(_))
        ));
    }

    #[test]
    fn commutativity_and_leibniz_on_random_corpus() {
        let c = Context::new(2, ["v", "w"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let f = random::polynomial(&c, &mut rng, 3, 2, 4);
            let g = random::polynomial(&c, &mut rng, 3, 2, 4);
            let d12 = total_derivative(&total_derivative(&f, 1, &c).unwrap(), 0, &c).unwrap();
            let d21 = total_derivative(&total_derivative(&f, 0, &c).unwrap(), 1, &c).unwrap();
            assert_eq!(d12, d21);
            for mu in 0..2 {
                let lhs = total_derivative(&(&f * &g), mu, &c).unwrap();
                let rhs = &total_derivative(&f, mu, &c).unwrap() * &g + &f * &total_derivative(&g, mu, &c).unwrap();
                assert_eq!(lhs, rhs);
                let order = f.order().map_or(0, |o| o + 1);
                assert!(total_derivative(&f, mu, &c).unwrap().order().unwrap_or(0) <= order);
            }
        }
    }

    #[test]
    fn chain_rule_on_random_corpus() {
        let c = Context::new(2, ["v", "w"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 0..50 {
            let f = random::polynomial(&c, &mut rng, 3, 2, 3);
            let phi = Section::new(
                [(0, random::x_polynomial(&c, &mut rng, 4, 3)), (1, random::x_polynomial(&c, &mut rng, 3, 3))]
                    .into_iter()
                    .collect(),
                &c,
            )
            .unwrap();
            assert!(chain_rule_check(&f, &phi, n % 2, &c).unwrap());
        }
    }

    #[test]
    fn d_constant_examples() {
        let c = Context::new(1, ["v"]).unwrap();
        assert!(is_d_constant(&p("7/3", &c), &c).unwrap());
        assert!(!is_d_constant(&p("u[v]", &c), &c).unwrap());
        assert!(!is_d_constant(&p("x1", &c), &c).unwrap());
        assert!(is_d_constant(&DiffExpr::zero(), &c).unwrap());
        let t = c.with_transcendental(true);
        assert!(is_d_constant(&p("sin(u[v])^2 + cos(u[v])^2", &t), &t).unwrap());
    }

    #[test]
    fn horizontal_degree_examples() {
        let c = Context::new(2, ["v"]).unwrap();
        assert_eq!(horizontal_degree(&p("x1*x2", &c), 5, &c).unwrap(), HorizontalDegree::Degree(2));
        assert_eq!(horizontal_degree(&DiffExpr::one(), 5, &c).unwrap(), HorizontalDegree::Degree(0));
        assert_eq!(horizontal_degree(&p("u[v]", &c), 4, &c).unwrap(), HorizontalDegree::Exceeds(4));
        assert_eq!(horizontal_degree(&p("x1^3", &c), 2, &c).unwrap(), HorizontalDegree::Exceeds(2));
    }
}
