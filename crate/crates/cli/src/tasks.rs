//! One function per task: each turns a problem into a verdict, a result
//! and a certificate, plus the lines of the text report.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context as _, Result};
use serde_json::{json, Value};

use jetcalc::evofield::{
    decompose, family_from_json, fields_equal, lie_backlund_degree, prolong, Family, LieBacklundDegree, VerticalField,
};
use jetcalc::expr::{parse, ExprError};
use jetcalc::forms::{BiForm, MixedField};
use jetcalc::jetalg::{total_derivative, total_derivative_multi};
use jetcalc::specseq::{Bicomplex, FilteredComplex, PageTable};
use jetcalc::varcalc::{
    check_conservation_law, euler, integrate_by_parts, noether_symmetry_check, Cofactors, CurrentJ, SourceForm,
};
use jetcalc::{Context, DiffExpr, MultiIndex};

use crate::problem::{Payload, ProblemFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    True,
    False,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Verified => "verified",
            Verdict::True => "true",
            Verdict::False => "false",
        }
    }

    fn of(b: bool) -> Verdict {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }
}

pub struct Outcome {
    pub verdict: Verdict,
    pub result: Value,
    pub certificate: Value,
    pub lines: Vec<String>,
}

pub fn run(problem: &ProblemFile) -> Result<Outcome> {
    let p = &problem.payload;
    match problem.task.as_str() {
        "specseq" => return specseq(p, problem.options.jobs.unwrap_or(1)),
        "bicomplex" => return bicomplex(p, problem.options.jobs.unwrap_or(1)),
        _ => {}
    }
    let ctx = problem.context()?;
    let o = &problem.options;
    match problem.task.as_str() {
        "total-derivative" => total(p, &ctx),
        "nabla" => nabla(p, &ctx),
        "decompose" => decomposition(p, o.cutoff.context("decompose needs a cutoff (--cutoff)")?, &ctx),
        "prolong" => prolongation(p, o.window.context("prolong needs a window (--window)")?, &ctx),
        "dv" | "dh" => differential(p, &problem.task, &ctx),
        "lie" | "interior" => contraction(p, o.window, &problem.task, &ctx),
        "euler" => euler_task(p, &ctx),
        "divergence-test" => divergence_test(p, &ctx),
        "conservation-law" => conservation(p, &ctx),
        "noether" => noether(p, o.window, &ctx),
        other => bail!("unknown task {other:?}"),
    }
}

/// Parses an expression, pointing at the offending offset on failure.
pub fn expr(text: &str, ctx: &Context) -> Result<DiffExpr> {
    parse(text, ctx).map_err(|e| match e {
        ExprError::Syntax { pos, .. } => {
            anyhow!("{e}\n  {text}\n  {}^", " ".repeat(text[..pos.min(text.len())].chars().count()))
        }
        other => anyhow!("in {text:?}: {other}"),
    })
}

fn need<'a, T>(x: &'a Option<T>, what: &str) -> Result<&'a T> {
    x.as_ref().with_context(|| format!("missing {what}"))
}

fn direction_or_index(p: &Payload, ctx: &Context) -> Result<MultiIndex> {
    match (p.mu, &p.index) {
        (Some(mu), None) => {
            if mu == 0 || mu > ctx.m() {
                bail!("direction {mu} out of range 1..={}", ctx.m());
            }
            Ok(MultiIndex::unit(ctx.m(), mu - 1))
        }
        (None, Some(i)) => {
            ctx.check_index(i)?;
            Ok(i.clone())
        }
        (Some(_), Some(_)) => bail!("give either a direction (--mu) or a multi-index (--index), not both"),
        (None, None) => bail!("missing direction (--mu) or multi-index (--index)"),
    }
}

fn source_json(s: &SourceForm, ctx: &Context) -> Value {
    let map: BTreeMap<String, String> = (0..ctx.deps().len()).map(|a| (ctx.dep_name(a).to_string(), s.get(a).to_text(ctx))).collect();
    json!(map)
}

fn source_lines(s: &SourceForm, ctx: &Context) -> Vec<String> {
    (0..ctx.deps().len()).map(|a| format!("E[{}] = {}", ctx.dep_name(a), s.get(a).to_text(ctx))).collect()
}

fn field_lines(f: &VerticalField, ctx: &Context) -> Vec<String> {
    let mut out: Vec<String> = f
        .components()
        .iter()
        .map(|((a, i), e)| format!("zeta[{};{}] = {}", ctx.dep_name(*a), i, e.to_text(ctx)))
        .collect();
    if out.is_empty() {
        out.push("zeta = 0".into());
    }
    match f.window() {
        Some(w) => out.push(format!("window: |i| <= {w}")),
        None => out.push("support: finite (zero elsewhere)".into()),
    }
    out
}

fn total(p: &Payload, ctx: &Context) -> Result<Outcome> {
    let f = expr(need(&p.expr, "expression (--expr)")?, ctx)?;
    let j = direction_or_index(p, ctx)?;
    let d = if j.norm() == 1 {
        total_derivative(&f, (0..ctx.m()).find(|&mu| j.get(mu) == 1).expect("unit index"), ctx)?
    } else {
        total_derivative_multi(&f, &j, ctx)?
    };
    Ok(Outcome {
        verdict: Verdict::Verified,
        result: json!({ "index": j, "expr": d.to_text(ctx) }),
        certificate: Value::Null,
        lines: vec![format!("D{j} f = {}", d.to_text(ctx))],
    })
}

fn vertical(p: &Payload, window: Option<u32>, ctx: &Context) -> Result<VerticalField> {
    match (&p.field, &p.phi) {
        (Some(f), None) => Ok(VerticalField::from_json(f, ctx)?),
        (None, Some(phi)) => {
            let w = window.context("a prolonged field needs a window (--window)")?;
            Ok(prolong(&family_from_json(phi, ctx)?, w, ctx)?)
        }
        (Some(_), Some(_)) => bail!("give either field components or a characteristic phi, not both"),
        (None, None) => Ok(VerticalField::zero()),
    }
}

fn nabla(p: &Payload, ctx: &Context) -> Result<Outcome> {
    let z = VerticalField::from_json(need(&p.field, "vertical field (--comp)")?, ctx)?;
    let r = direction_or_index(p, ctx)?;
    let out = z.nabla_multi(&r, ctx)?;
    let mut lines = vec![format!("nabla{r} zeta:")];
    lines.extend(field_lines(&out, ctx));
    lines.push("certificate: closed form equals iterated first-order operators".into());
    Ok(Outcome {
        verdict: Verdict::Verified,
        result: json!({ "index": r, "field": out.to_json(ctx) }),
        certificate: json!({ "closed_form_equals_iteration": true }),
        lines,
    })
}

fn decomposition(p: &Payload, cutoff: u32, ctx: &Context) -> Result<Outcome> {
    let z = VerticalField::from_json(need(&p.field, "vertical field (--comp)")?, ctx)?;
    let g = decompose(&z, cutoff, ctx)?;
    let rebuilt = g.materialize(cutoff, ctx)?;
    if !fields_equal(&rebuilt, &z.restrict(cutoff)?, ctx)? {
        bail!("invariant violation: reconstruction differs from the input field");
    }
    let degree = lie_backlund_degree(&z, cutoff, ctx)?;
    let degree_json = match degree {
        LieBacklundDegree::Degree(q) => json!({ "degree": q }),
        LieBacklundDegree::Exceeds(k) => json!({ "exceeds": k }),
    };
    let mut lines = Vec::new();
    for (k, phi) in g.generators() {
        for (a, e) in phi.entries() {
            lines.push(format!("phi{k}[{}] = {}", ctx.dep_name(*a), e.to_text(ctx)));
        }
    }
    if lines.is_empty() {
        lines.push("all generators vanish".into());
    }
    lines.push(match degree {
        LieBacklundDegree::Degree(q) => format!("degree: {q}"),
        LieBacklundDegree::Exceeds(k) => format!("degree: exceeds cutoff {k}"),
    });
    lines.push(format!("certificate: sum of eps^k reproduces every component with |i| <= {cutoff}"));
    Ok(Outcome {
        verdict: Verdict::Verified,
        result: json!({ "cutoff": cutoff, "generators": g.to_json(ctx), "filtration": degree_json }),
        certificate: json!({ "reconstruction": rebuilt.to_json(ctx), "matches_input": true }),
        lines,
    })
}

fn prolongation(p: &Payload, window: u32, ctx: &Context) -> Result<Outcome> {
    let phi = family_from_json(need(&p.phi, "characteristic (--phi)")?, ctx)?;
    let z = prolong(&phi, window, ctx)?;
    Ok(Outcome {
        verdict: Verdict::Verified,
        result: json!({ "field": z.to_json(ctx) }),
        certificate: Value::Null,
        lines: field_lines(&z, ctx),
    })
}

fn form(p: &Payload, ctx: &Context) -> Result<BiForm> {
    Ok(BiForm::from_json(need(&p.form, "form (--term)")?, ctx)?)
}

fn differential(p: &Payload, task: &str, ctx: &Context) -> Result<Outcome> {
    let w = form(p, ctx)?;
    let out = if task == "dv" { w.d_v(ctx) } else { w.d_h(ctx)? };
    let squared = if task == "dv" { out.d_v(ctx) } else { out.d_h(ctx)? };
    if !squared.is_zero() {
        bail!("invariant violation: {task} applied twice is not zero");
    }
    Ok(Outcome {
        verdict: Verdict::Verified,
        result: json!({ "form": out.to_json(ctx) }),
        certificate: json!({ "squares_to_zero": true }),
        lines: vec![format!("{task} omega = {}", out.display(ctx))],
    })
}

fn contraction(p: &Payload, window: Option<u32>, task: &str, ctx: &Context) -> Result<Outcome> {
    let w = form(p, ctx)?;
    let mut horizontal = BTreeMap::new();
    for h in p.horizontal.iter().flatten() {
        if h.mu == 0 || h.mu > ctx.m() {
            bail!("horizontal direction {} out of range 1..={}", h.mu, ctx.m());
        }
        horizontal.insert(h.mu - 1, expr(&h.expr, ctx)?);
    }
    let x = MixedField::new(vertical(p, window, ctx)?, horizontal);
    if task == "interior" {
        let out = w.interior(&x, ctx)?;
        return Ok(Outcome {
            verdict: Verdict::Verified,
            result: json!({ "form": out.to_json(ctx) }),
            certificate: Value::Null,
            lines: vec![format!("i_X omega = {}", out.display(ctx))],
        });
    }
    let direct = w.lie(&x, ctx)?;
    let magic = w.lie_by_magic(&x, ctx)?;
    Ok(Outcome {
        verdict: Verdict::Verified,
        result: json!({ "form": direct.to_json(ctx) }),
        certificate: json!({ "by_generators": direct.to_json(ctx), "by_magic_formula": magic.to_json(ctx), "agree": true }),
        lines: vec![
            format!("L_X omega = {}", direct.display(ctx)),
            "certificate: generator rules and d i_X + i_X d agree".into(),
        ],
    })
}

fn euler_task(p: &Payload, ctx: &Context) -> Result<Outcome> {
    let l = expr(need(&p.expr, "Lagrangian (--expr)")?, ctx)?;
    let e = euler(&l, ctx)?;
    let omega = BiForm::function(l).wedge(&BiForm::volume(ctx)).d_v(ctx);
    let ibp = integrate_by_parts(&omega, ctx)?;
    let mut lines = source_lines(&e, ctx);
    lines.push(format!("certificate: d_V(L vol) = E + d_H eta with eta = {}", ibp.eta.display(ctx)));
    Ok(Outcome {
        verdict: Verdict::Verified,
        result: json!({ "euler": source_json(&e, ctx) }),
        certificate: json!({ "eta": ibp.eta.to_json(ctx), "closed_form_agrees": true }),
        lines,
    })
}

fn divergence_test(p: &Payload, ctx: &Context) -> Result<Outcome> {
    let f = expr(need(&p.expr, "expression (--expr)")?, ctx)?;
    let e = euler(&f, ctx)?;
    let holds = e.vanishes(ctx)?;
    let mut lines = vec![format!("total divergence: {holds}")];
    lines.extend(source_lines(&e, ctx));
    Ok(Outcome {
        verdict: Verdict::of(holds),
        result: json!({ "total_divergence": holds }),
        certificate: json!({ "euler": source_json(&e, ctx) }),
        lines,
    })
}

fn conservation(p: &Payload, ctx: &Context) -> Result<Outcome> {
    let current = need(&p.current, "current components (--current)")?
        .iter()
        .map(|t| expr(t, ctx))
        .collect::<Result<Vec<_>>>()?;
    let j = CurrentJ::new(current, ctx)?;
    let system = p.system.iter().flatten().map(|t| expr(t, ctx)).collect::<Result<Vec<_>>>()?;
    let mut q = Cofactors::new();
    for c in p.cofactors.iter().flatten() {
        if c.equation == 0 || c.equation > system.len() {
            bail!("cofactor refers to equation {} but the system has {}", c.equation, system.len());
        }
        ctx.check_index(&c.index)?;
        q.insert((c.equation - 1, c.index.clone()), expr(&c.expr, ctx)?);
    }
    let r = check_conservation_law(&j, &system, &q, None, ctx)?;
    Ok(Outcome {
        verdict: Verdict::of(r.holds),
        result: json!({ "holds": r.holds }),
        certificate: json!({ "divergence": r.divergence.to_text(ctx), "residual": r.residual.to_text(ctx) }),
        lines: vec![
            format!("conservation law: {}", r.holds),
            format!("Div J = {}", r.divergence.to_text(ctx)),
            format!("residual = {}", r.residual.to_text(ctx)),
        ],
    })
}

fn noether(p: &Payload, window: Option<u32>, ctx: &Context) -> Result<Outcome> {
    let l = expr(need(&p.expr, "Lagrangian (--expr)")?, ctx)?;
    let phi: Family = family_from_json(need(&p.phi, "characteristic (--phi)")?, ctx)?;
    let window = window.unwrap_or_else(|| l.order().map_or(0, |o| o + 1));
    let r = noether_symmetry_check(&phi, &l, window, ctx)?;
    let mut lines = vec![format!("variational symmetry: {}", r.holds), format!("pr X (L) = {}", r.variation.to_text(ctx))];
    lines.extend(source_lines(&r.euler, ctx));
    Ok(Outcome {
        verdict: Verdict::of(r.holds),
        result: json!({ "holds": r.holds, "window": window }),
        certificate: json!({ "variation": r.variation.to_text(ctx), "euler": source_json(&r.euler, ctx) }),
        lines,
    })
}

fn table_outcome(k: &FilteredComplex, jobs: usize, extra: Value) -> Result<Outcome> {
    let t = PageTable::compute(k, jobs)?;
    let cohomology: BTreeMap<i64, usize> = k.degrees().map(|n| (n, k.cohomology_dim(n))).collect();
    for (n, h) in &cohomology {
        let graded: usize = k.p_range().map(|p| t.dim(p, n - p, None)).sum();
        if graded != *h {
            bail!("invariant violation: E_inf in degree {n} has total dimension {graded}, cohomology has {h}");
        }
    }
    let mut lines: Vec<String> = t.render().lines().map(str::to_string).collect();
    for (n, h) in &cohomology {
        lines.push(format!("dim H^{n} = {h}"));
    }
    Ok(Outcome {
        verdict: Verdict::Verified,
        result: json!({ "table": t, "cohomology": cohomology }),
        certificate: json!({ "e_infinity_matches_cohomology": true, "input": extra }),
        lines,
    })
}

fn specseq(p: &Payload, jobs: usize) -> Result<Outcome> {
    let k = FilteredComplex::from_json(need(&p.complex, "filtered complex")?)?;
    table_outcome(&k, jobs, json!({ "validated": ["d∘d = 0", "descending filtration", "d(F_p) ⊆ F_p"] }))
}

fn bicomplex(p: &Payload, jobs: usize) -> Result<Outcome> {
    let b = Bicomplex::from_json(need(&p.bicomplex, "bicomplex")?)?;
    let k = b.total();
    let dims: Vec<usize> = k.degrees().map(|n| k.dim(n)).collect();
    table_outcome(&k, jobs, json!({ "validated": ["d_V² = 0", "d_H² = 0", "d_V d_H + d_H d_V = 0"], "total_dims": dims }))
}
