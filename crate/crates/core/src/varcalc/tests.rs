use super::*;
use crate::expr::parse;
use crate::forms::parse_term;
use crate::random;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(s: &str, ctx: &Context) -> DiffExpr {
    parse(s, ctx).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

fn c1() -> Context {
    Context::new(1, ["v"]).unwrap()
}

#[test]
fn integrate_by_parts_examples() {
    let c = c1();
    let omega = parse_term("1 | rho[v] dx1", &c).unwrap();
    let r = integrate_by_parts(&omega, &c).unwrap();
    assert_eq!(r.source.to_form(&c), omega);
    assert!(r.eta.is_zero());

    let omega = parse_term("u[v;(1)] | rho[v;(1)] dx1", &c).unwrap();
    let r = integrate_by_parts(&omega, &c).unwrap();
    assert_eq!(r.source.get(0), p("-u[v;(2)]", &c));
    // The primitive carries a minus sign: d_H(−u_1 ρ_0) = u_2 ρ_0∧θ + u_1 ρ_1∧θ.
    assert_eq!(r.eta, parse_term("-u[v;(1)] | rho[v]", &c).unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let c2 = Context::new(2, ["v", "w"]).unwrap();
    for _ in 0..10 {
        let eta = random::form(&c2, &mut rng, 1, 1, 3, 2, 2);
        let r = integrate_by_parts(&eta.d_h(&c2).unwrap(), &c2).unwrap();
        assert!(r.source.is_zero());
    }
    assert!(matches!(
        integrate_by_parts(&parse_term("1 | rho[v]", &c).unwrap(), &c),
        Err(VarError::Bidegree { .. })
    ));
}

#[test]
fn pivots_agree() {
    let c = Context::new(2, ["v", "w"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        let omega = random::form(&c, &mut rng, 1, 2, 3, 2, 3);
        let a = integrate_by_parts_with(&omega, Pivot::Smallest, None, &c).unwrap();
        let b = integrate_by_parts_with(&omega, Pivot::Largest, None, &c).unwrap();
        assert_eq!(a.source, b.source);
    }
}

#[test]
fn cancellation_is_honoured() {
    let c = c1();
    let token = CancelToken::new();
    token.cancel();
    let omega = parse_term("u[v] | rho[v;(3)] dx1", &c).unwrap();
    assert_eq!(integrate_by_parts_with(&omega, Pivot::Smallest, Some(&token), &c), Err(VarError::Cancelled));
}

#[test]
fn euler_examples() {
    let c = c1();
    assert_eq!(euler(&p("1/2*u[v;(1)]^2", &c), &c).unwrap().get(0), p("-u[v;(2)]", &c));
    assert_eq!(euler(&p("u[v]", &c), &c).unwrap().get(0), DiffExpr::one());
    let dl = total_derivative(&p("u[v]^2", &c), 0, &c).unwrap();
    assert!(euler(&dl, &c).unwrap().is_zero());
}

#[test]
fn euler_kills_divergences_and_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for n in 0..40 {
        let c = Context::new(1 + n % 2, ["v", "w"]).unwrap();
        let g = random::polynomial(&c, &mut rng, 3, 2, 3);
        let mu = rng.gen_range(0..c.m());
        let dg = total_derivative(&g, mu, &c).unwrap();
        assert!(euler(&dg, &c).unwrap().is_zero());
        assert!(is_total_divergence(&dg, &c).unwrap());
        let l = random::polynomial(&c, &mut rng, 3, 3, 3);
        let via_forms = integrate_by_parts(&BiForm::function(l.clone()).wedge(&BiForm::volume(&c)).d_v(&c), &c).unwrap();
        assert_eq!(via_forms.source, euler_closed_form(&l, &c).unwrap());
    }
}

#[test]
fn total_divergence_examples() {
    let c = c1();
    let f = total_derivative(&p("u[v]*u[v;(1)]", &c), 0, &c).unwrap();
    assert!(is_total_divergence(&f, &c).unwrap());
    assert!(!is_total_divergence(&p("u[v;(1)]^2", &c), &c).unwrap());
    assert!(is_total_divergence(&DiffExpr::zero(), &c).unwrap());
    // 1 = D_1 x1.
    assert!(is_total_divergence(&DiffExpr::one(), &c).unwrap());
}

#[test]
fn divergence_examples() {
    let c2 = Context::new(2, ["v"]).unwrap();
    let j = CurrentJ::new(vec![p("x2", &c2), p("-x1", &c2)], &c2).unwrap();
    assert!(divergence(&j, &c2).unwrap().is_zero());
    let c = c1();
    let j = CurrentJ::new(vec![p("u[v]", &c)], &c).unwrap();
    assert_eq!(divergence(&j, &c).unwrap(), p("u[v;(1)]", &c));
    let j = CurrentJ::new(vec![p("u[v]", &c2), p("u[v;(1,0)]", &c2)], &c2).unwrap();
    assert_eq!(divergence(&j, &c2).unwrap(), p("u[v;(1,0)] + u[v;(1,1)]", &c2));
    assert!(CurrentJ::new(vec![], &c2).is_err());
}

fn kdv() -> (Context, CurrentJ, Vec<DiffExpr>, Cofactors) {
    let c = Context::new(2, ["u"]).unwrap();
    let f = p("u[u;(0,1)] - 6*u[u]*u[u;(1,0)] - u[u;(3,0)]", &c);
    let j = CurrentJ::new(vec![p("-3*u[u]^2 - u[u;(2,0)]", &c), p("u[u]", &c)], &c).unwrap();
    let q: Cofactors = [((0, mi(&[0, 0])), DiffExpr::one())].into_iter().collect();
    (c, j, vec![f], q)
}

#[test]
fn conservation_law_examples() {
    let (c, j, f, q) = kdv();
    let r = check_conservation_law(&j, &f, &q, None, &c).unwrap();
    assert!(r.holds);
    assert!(r.residual.is_zero());

    let zero = CurrentJ::new(vec![DiffExpr::zero(), DiffExpr::zero()], &c).unwrap();
    assert!(check_conservation_law(&zero, &f, &Cofactors::new(), None, &c).unwrap().holds);

    let c1 = c1();
    let j = CurrentJ::new(vec![p("x1", &c1)], &c1).unwrap();
    let sys = vec![p("u[v;(1)]", &c1)];
    let q: Cofactors = [((0, mi(&[0])), p("u[v]^2", &c1)), ((0, mi(&[2])), p("x1", &c1))].into_iter().collect();
    let r = check_conservation_law(&j, &sys, &q, None, &c1).unwrap();
    assert!(!r.holds);
    assert_eq!(r.residual, p("1 - u[v]^2*u[v;(1)] - x1*u[v;(3)]", &c1));
}

#[test]
fn trivial_currents_do_not_change_the_verdict() {
    let (c, j, f, q) = kdv();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..10 {
        let k = random::polynomial(&c, &mut rng, 2, 2, 3);
        let extra = [total_derivative(&k, 1, &c).unwrap(), -total_derivative(&k, 0, &c).unwrap()];
        let shifted = CurrentJ::new(
            j.components().iter().zip(extra).map(|(a, b)| a + &b).collect(),
            &c,
        )
        .unwrap();
        assert!(check_conservation_law(&shifted, &f, &q, None, &c).unwrap().holds);
    }
}

#[test]
fn noether_examples() {
    let c = c1();
    let l = p("1/2*u[v;(1)]^2", &c);
    let r = noether_symmetry_check(&Family::single(0, p("u[v;(1)]", &c)), &l, 2, &c).unwrap();
    assert!(r.holds);
    assert_eq!(r.variation, p("u[v;(1)]*u[v;(2)]", &c));
    assert!(noether_symmetry_check(&Family::single(0, DiffExpr::one()), &l, 2, &c).unwrap().holds);
    let r = noether_symmetry_check(&Family::single(0, DiffExpr::one()), &p("u[v]^3", &c), 1, &c).unwrap();
    assert!(!r.holds);
    assert_eq!(r.euler.get(0), p("6*u[v]", &c));
    assert_eq!(
        noether_symmetry_check(&Family::single(0, DiffExpr::one()), &l, 1, &c),
        Err(VarError::Window { needed: 2, window: 1 })
    );
}
