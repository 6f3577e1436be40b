//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jetcalc::evofield::{decompose, Family, GradedField, VerticalField};
use jetcalc::expr::parse;
use jetcalc::forms::{forms_equal, BiForm, MixedField};
use jetcalc::jetalg::{horizontal_degree, is_d_constant, total_derivative, HorizontalDegree};
use jetcalc::linalg::Matrix;
use jetcalc::multiindex::enumerate_upto;
use jetcalc::random;
use jetcalc::specseq::{FilteredComplex, PageTable};
use jetcalc::varcalc::{
    check_conservation_law, euler, euler_closed_form, integrate_by_parts, noether_symmetry_check, Cofactors, CurrentJ,
};
use jetcalc::{Context, DiffExpr, MultiIndex, Rational};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn p(s: &str, ctx: &Context) -> DiffExpr {
    parse(s, ctx).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

fn nabla_closed_form() -> Outcome {
    let c = Context::new(2, ["v", "w"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let rs = enumerate_upto(3, 2);
    for n in 0..50 {
        let z = random::vertical_field(&c, &mut rng, 2, 4, 2);
        for r in &rs {
            let closed = z.nabla_closed(r, &c).map_err(|e| e.to_string())?;
            let iterated = z.nabla_iterated(r, &c).map_err(|e| e.to_string())?;
            ensure(closed == iterated, || format!("field {n}, r = {r}: closed form differs from iteration"))?;
        }
    }
    Ok(format!("50 fields x {} multi-indices", rs.len()))
}

fn decomposition_round_trip() -> Outcome {
    let mut count = 0;
    for m in [1, 2] {
        let c = Context::new(m, ["v", "w"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(200 + m as u64);
        for n in 0..100 {
            let z = random::vertical_field(&c, &mut rng, 3, 4, 2);
            let g = decompose(&z, 3, &c).map_err(|e| e.to_string())?;
            let rebuilt = g.materialize(3, &c).map_err(|e| e.to_string())?;
            let truncated = z.restrict(3).map_err(|e| e.to_string())?;
            ensure(rebuilt == truncated, || format!("m = {m}, field {n}: reconstruction differs"))?;
            let again = decompose(&rebuilt, 3, &c).map_err(|e| e.to_string())?;
            ensure(again == g, || format!("m = {m}, field {n}: re-decomposition differs"))?;
            count += 1;
        }
    }
    Ok(format!("{count} fields, K = 3"))
}

fn epsilon_lowering() -> Outcome {
    let window = 4;
    let mut checks = 0;
    for m in [1, 2] {
        let c = Context::new(m, ["v"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(300 + m as u64);
        let ks = enumerate_upto(3, m);
        for n in 0..20 {
            let phi = random::family(&c, &mut rng, 2, 1);
            for k in &ks {
                let eps = GradedField::new([(k.clone(), phi.clone())]).materialize(window, &c).unwrap();
                for mu in 0..m {
                    let lhs = eps.nabla(mu, &c).unwrap();
                    let rhs = match k.lowered(mu) {
                        Some(lo) => GradedField::new([(lo, phi.clone())]).materialize(window - 1, &c).unwrap(),
                        None => VerticalField::windowed([], window - 1),
                    };
                    let neg = VerticalField::windowed(rhs.components().iter().map(|(key, e)| (key.clone(), -e.clone())), window - 1);
                    ensure(lhs == neg, || format!("m = {m}, phi {n}, k = {k}, mu = {}: nabla eps^k != -eps^(k-mu)", mu + 1))?;
                    checks += 1;
                }
                for r in enumerate_upto(3, m) {
                    if r.le(k) {
                        continue;
                    }
                    let out = eps.nabla_iterated(&r, &c).unwrap();
                    ensure(out.is_zero(), || format!("m = {m}, phi {n}: nabla_{r} eps^{k} is not zero"))?;
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("{checks} identities on window {window}"))
}

fn random_mixed(c: &Context, rng: &mut ChaCha8Rng) -> MixedField {
    let mut h = std::collections::BTreeMap::new();
    for mu in 0..c.m() {
        if rng.gen_bool(0.6) {
            h.insert(mu, random::polynomial(c, rng, 2, 1, 2));
        }
    }
    MixedField::new(random::vertical_field(c, rng, 2, 3, 2), h)
}

fn bicomplex_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    for n in 0..100 {
        let m = 1 + n % 2;
        let c = Context::new(m, ["v", "w"]).unwrap();
        let pd = rng.gen_range(0..=3usize);
        let qd = rng.gen_range(0..=m.min(3 - pd));
        let w = random::form(&c, &mut rng, pd, qd, 3, 2, 2);
        let dv = w.d_v(&c);
        let dh = w.d_h(&c).unwrap();
        ensure(dv.d_v(&c).is_zero(), || format!("form {n}: d_V^2 != 0"))?;
        ensure(dh.d_h(&c).unwrap().is_zero(), || format!("form {n}: d_H^2 != 0"))?;
        ensure((dv.d_h(&c).unwrap() + dh.d_v(&c)).is_zero(), || format!("form {n}: d_V d_H + d_H d_V != 0"))?;
        let x = random_mixed(&c, &mut rng);
        let direct = w.lie_by_generators(&x, &c).unwrap();
        let magic = w.lie_by_magic(&x, &c).unwrap();
        ensure(direct == magic && forms_equal(&direct, &magic, &c).unwrap(), || format!("form {n}: L_X two ways differ"))?;
    }
    Ok("100 forms, p+q <= 3, m in {1,2}".into())
}

fn variational_corner() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for n in 0..100 {
        let c = Context::new(1 + n % 2, ["v", "w"]).unwrap();
        let g = random::polynomial(&c, &mut rng, 3, 3, 3);
        let mu = rng.gen_range(0..c.m());
        let e = euler(&total_derivative(&g, mu, &c).unwrap(), &c).map_err(|e| e.to_string())?;
        ensure(e.is_zero(), || format!("g {n}: Euler of a total derivative is not zero"))?;
    }
    for n in 0..100 {
        let c = Context::new(1 + n % 2, ["v", "w"]).unwrap();
        let l = random::polynomial(&c, &mut rng, 3, 3, 3);
        let omega = BiForm::function(l.clone()).wedge(&BiForm::volume(&c)).d_v(&c);
        let ibp = integrate_by_parts(&omega, &c).map_err(|e| e.to_string())?;
        let rebuilt = ibp.source.to_form(&c) + ibp.eta.d_h(&c).unwrap();
        ensure(rebuilt == omega, || format!("L {n}: certificate omega = sigma + d_H eta fails"))?;
        ensure(ibp.source == euler_closed_form(&l, &c).unwrap(), || format!("L {n}: Euler differs from the closed form"))?;
    }
    Ok("100 divergences, 100 Lagrangians".into())
}

fn classical_set() -> Outcome {
    let c1 = Context::new(1, ["v"]).unwrap();
    let l = p("1/2*u[v;(1)]^2", &c1);
    let e = euler(&l, &c1).unwrap();
    ensure(e.get(0) == p("-u[v;(2)]", &c1), || "E(u_x^2/2) != -u_xx".into())?;

    let c2 = Context::new(2, ["u"]).unwrap();
    let f = p("u[u;(0,1)] - 6*u[u]*u[u;(1,0)] - u[u;(3,0)]", &c2);
    let j = CurrentJ::new(vec![p("-3*u[u]^2 - u[u;(2,0)]", &c2), p("u[u]", &c2)], &c2).unwrap();
    let q: Cofactors = [((0, mi(&[0, 0])), DiffExpr::one())].into_iter().collect();
    let r = check_conservation_law(&j, &[f], &q, None, &c2).unwrap();
    ensure(r.holds && r.residual.is_zero(), || "KdV mass current does not verify".into())?;

    let n = noether_symmetry_check(&Family::single(0, p("u[v;(1)]", &c1)), &l, 2, &c1).unwrap();
    ensure(n.holds, || "x-translation is not a Noether symmetry of u_x^2/2".into())?;
    Ok("Euler, KdV mass, translation symmetry".into())
}

fn constants_and_filtration() -> Outcome {
    let c = Context::new(2, ["v"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let mut corpus: Vec<(DiffExpr, bool)> = Vec::new();
    for _ in 0..50 {
        let r = Rational::new(rng.gen_range(-50..=50).into(), rng.gen_range(1..=9).into());
        corpus.push((DiffExpr::constant(r), true));
    }
    for _ in 0..50 {
        // (g+1)(g−1) − g² + k is the constant k − 1 after expansion.
        let g = random::polynomial(&c, &mut rng, 2, 2, 3);
        let k = DiffExpr::int(rng.gen_range(-5..=5));
        let f = &(&(&g + &DiffExpr::one()) * &(&g - &DiffExpr::one())) - &(&g * &g) + k;
        corpus.push((f, true));
    }
    for n in 0..100 {
        // The added top-order term cannot cancel against g.
        let g = random::polynomial(&c, &mut rng, 2, 2, 3);
        let extra = if n % 2 == 0 { p("u[v;(3,0)]^3", &c) } else { p("x1^3*x2", &c) };
        corpus.push((g + extra, false));
    }
    for (n, (f, constant)) in corpus.iter().enumerate() {
        let got = is_d_constant(f, &c).map_err(|e| e.to_string())?;
        ensure(got == *constant, || format!("expression {n} ({}): D-constant = {got}", f.to_text(&c)))?;
    }
    for n in 0..50 {
        // A unique top monomial of degree d over lower-degree noise.
        let d: u32 = rng.gen_range(0..=4);
        let a = rng.gen_range(0..=d);
        let top = DiffExpr::int(rng.gen_range(1..=5)) * DiffExpr::x(0).pow(a) * DiffExpr::x(1).pow(d - a);
        let noise = if d == 0 { DiffExpr::zero() } else { random::x_polynomial(&c, &mut rng, d - 1, 3) };
        let f = top + noise;
        let got = horizontal_degree(&f, 6, &c).map_err(|e| e.to_string())?;
        ensure(got == HorizontalDegree::Degree(d), || format!("polynomial {n}: degree {got:?}, expected {d}"))?;
    }
    for n in 0..20 {
        let f = random::polynomial(&c, &mut rng, 2, 2, 3) + p("u[v;(0,3)]*x1", &c);
        let got = horizontal_degree(&f, 5, &c).map_err(|e| e.to_string())?;
        ensure(got == HorizontalDegree::Exceeds(5), || format!("jet expression {n}: {got:?}"))?;
    }
    Ok("200 corpus expressions, 50 polynomials, 20 jet expressions".into())
}

// Fraction-free elimination over the integers; independent of the rational
// row reduction used by the engine.
fn bareiss_rank(m: &Matrix) -> usize {
    let mut a: Vec<Vec<BigInt>> = m
        .data()
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::from(1), |acc, x| acc * x.denom());
            row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
        })
        .collect();
    let (rows, cols) = (m.rows(), m.cols());
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, piv);
        for r in rank + 1..rows {
            for k in c + 1..cols {
                let t = &a[rank][c] * &a[r][k] - &a[r][c] * &a[rank][k];
                a[r][k] = t / &prev;
            }
            a[r][c] = BigInt::zero();
        }
        prev = a[rank][c].abs();
        rank += 1;
    }
    rank
}

fn spectral_engine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut pages = 0;
    for n in 0..20 {
        let rows = rng.gen_range(2..=4);
        let cols = rng.gen_range(2..=4);
        let k: FilteredComplex = random::bicomplex(&mut rng, rows, cols, 3, true).total();
        let t = PageTable::compute(&k, 1).map_err(|e| e.to_string())?;
        let top = k.stable_from();
        for deg in k.degrees() {
            for pp in k.p_range() {
                let q = deg - pp;
                for r in 0..top {
                    let out = k.d_r_map(pp, q, r).map_err(|e| e.to_string())?.rank();
                    let inc = k.d_r_map(pp - r, q + r - 1, r).map_err(|e| e.to_string())?.rank();
                    let next = t.dim(pp, q, Some(r + 1));
                    ensure(next + out + inc == t.dim(pp, q, Some(r)), || {
                        format!("complex {n}: E^{{{pp},{q}}}_{} != ker d_{r} / im d_{r}", r + 1)
                    })?;
                    pages += 1;
                }
                for r in 2..=top {
                    ensure(t.dim(pp, q, Some(r)) == t.dim(pp, q, None), || {
                        format!("complex {n}: E^{{{pp},{q}}}_{r} differs from E_inf")
                    })?;
                }
            }
            let graded: usize = k.p_range().map(|pp| t.dim(pp, deg - pp, None)).sum();
            let h = k.dim(deg) - bareiss_rank(&k.diff(deg)) - bareiss_rank(&k.diff(deg - 1));
            ensure(graded == h, || format!("complex {n}: sum of E_inf in degree {deg} is {graded}, H = {h}"))?;
        }
    }
    Ok(format!("20 bicomplexes, {pages} page identities"))
}

fn cli_suite(bin: &str, examples: &Path) -> Vec<(Option<i32>, Vec<u8>)> {
    let inline: Vec<Vec<&str>> = vec![
        vec!["total-derivative", "--m", "2", "--deps", "v", "--expr", "x1*u[v;(0,1)]^2", "--index", "(1,1)"],
        vec!["nabla", "--m", "2", "--deps", "v", "--comp", "v;(1,0)=u[v]*x2", "--comp", "v;(0,0)=u[v;(0,1)]", "--index", "(1,1)"],
        vec!["decompose", "--m", "1", "--deps", "v", "--comp", "v;(0)=u[v;(1)]", "--cutoff", "2"],
        vec!["prolong", "--m", "1", "--deps", "v", "--phi", "v=u[v]*u[v;(1)]", "--window", "2"],
        vec!["dv", "--m", "1", "--deps", "v", "--term", "u[v;(1)]^2 | dx1"],
        vec!["dh", "--m", "2", "--deps", "v", "--term", "u[v] | rho[v;(1,0)] dx1"],
        vec!["interior", "--m", "1", "--deps", "v", "--comp", "v;(0)=1", "--term", "1 | rho[v] dx1"],
        vec!["euler", "--m", "1", "--deps", "v", "--expr", "1/2*u[v;(1)]^2"],
        vec!["divergence-test", "--m", "1", "--deps", "v", "--expr", "u[v;(1)]^2"],
        vec!["noether", "--m", "1", "--deps", "v", "--expr", "u[v]^3", "--phi", "v=1"],
    ];
    let files = [
        ("decompose", "field.json"),
        ("conservation-law", "kdv.json"),
        ("lie", "lie.json"),
        ("noether", "noether.json"),
        ("divergence-test", "trig.json"),
        ("specseq", "complex.json"),
        ("bicomplex", "staircase.json"),
    ];
    let mut out = Vec::new();
    let mut run = |args: Vec<String>| {
        let o = Command::new(bin).args(&args).output().expect("binary runs");
        let mut bytes = o.stdout;
        bytes.extend(o.stderr);
        out.push((o.status.code(), bytes));
    };
    for a in inline {
        let mut args: Vec<String> = a.into_iter().map(String::from).collect();
        args.extend(["--seed", "11", "--format", "json"].map(String::from));
        run(args);
    }
    for (task, f) in files {
        let path = examples.join(f);
        run(vec![task.into(), "--file".into(), path.display().to_string(), "--format".into(), "json".into(), "--seed".into(), "11".into()]);
    }
    out
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_jetcalc");
    let examples = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples");
    let first = cli_suite(bin, &examples);
    let second = cli_suite(bin, &examples);
    for (n, (a, b)) in first.iter().zip(&second).enumerate() {
        ensure(a == b, || format!("report {n} differs between runs"))?;
        ensure(matches!(a.0, Some(0) | Some(1)), || {
            format!("report {n} failed: {}", String::from_utf8_lossy(&a.1))
        })?;
    }
    Ok(format!("{} reports byte-identical across two runs", first.len()))
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: Vec<Criterion> = vec![
        ("nabla closed form equals iteration", Duration::from_secs(10), nabla_closed_form),
        ("decomposition round trip and uniqueness", Duration::from_secs(30), decomposition_round_trip),
        ("nabla lowers eps^k and kills it past k", Duration::from_secs(10), epsilon_lowering),
        ("bicomplex identities and magic formula", Duration::from_secs(60), bicomplex_identities),
        ("Euler operator, divergences, certificates", Duration::from_secs(60), variational_corner),
        ("classical sanity set", Duration::from_secs(60), classical_set),
        ("D-constants and polynomial filtration", Duration::from_secs(60), constants_and_filtration),
        ("spectral engine on random bicomplexes", Duration::from_secs(60), spectral_engine),
        ("deterministic CLI reports", Duration::from_secs(120), determinism),
    ];
    let mut failed = 0;
    for (n, (name, budget, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name} ({detail}) [{elapsed:.2?}]", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why} [{elapsed:.2?}]", n + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
