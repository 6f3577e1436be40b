//! Problem files, their inline-flag equivalent, and the report envelope.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use serde::{Deserialize, Serialize};

use jetcalc::evofield::FieldJson;
use jetcalc::forms::{HorizontalJson, TermJson};
use jetcalc::specseq::{BicomplexJson, ComplexJson};
use jetcalc::{Context, MultiIndex};

pub const SCHEMA: &str = "jetcalc-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextJson {
    pub m: usize,
    pub deps: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub transcendental: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CofactorJson {
    /// Equation number, counted from one.
    pub equation: usize,
    pub index: MultiIndex,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Payload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    /// Direction, counted from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<MultiIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizontal: Option<Vec<HorizontalJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<Vec<TermJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cofactors: Option<Vec<CofactorJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex: Option<ComplexJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bicomplex: Option<BicomplexJson>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<ContextJson>,
    pub task: String,
    #[serde(default)]
    pub payload: Payload,
    #[serde(default)]
    pub options: Options,
}

impl ProblemFile {
    pub fn context(&self) -> Result<Context> {
        let c = self.context.as_ref().context("problem has no context (m and dependent variables)")?;
        let seed = self.options.seed.unwrap_or(0);
        Ok(Context::new(c.m, c.deps.clone())?
            .with_transcendental(c.transcendental)
            .with_seed(seed)
            .with_cross_checks(true))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub task: String,
    pub problem: ProblemFile,
    pub seed: u64,
    pub verdict: String,
    pub result: serde_json::Value,
    pub certificate: serde_json::Value,
}

/// Reads `--file`: a report (its `problem` is reused), a problem file, or
/// a bare payload object for the given task (field, form, complex or
/// bicomplex), in that order.
pub fn load(path: &Path, task: &str, context: Option<ContextJson>) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    if let Some(problem) = value.get("problem") {
        let p: ProblemFile = serde_json::from_value(problem.clone()).context("report carries a malformed problem")?;
        return check_task(p, task);
    }
    if value.get("task").is_some() {
        let p: ProblemFile = serde_json::from_value(value).with_context(|| format!("malformed problem file {}", path.display()))?;
        return check_task(p, task);
    }
    let mut payload = Payload::default();
    let bare = |what: &str| format!("{} is not a {what}", path.display());
    match task {
        "specseq" => payload.complex = Some(serde_json::from_value(value).with_context(|| bare("filtered complex"))?),
        "bicomplex" => payload.bicomplex = Some(serde_json::from_value(value).with_context(|| bare("bicomplex"))?),
        "nabla" | "decompose" => payload.field = Some(serde_json::from_value(value).with_context(|| bare("vertical field"))?),
        "dv" | "dh" => payload.form = Some(serde_json::from_value(value).with_context(|| bare("form"))?),
        _ => bail!("{} is neither a report nor a problem file", path.display()),
    }
    Ok(ProblemFile { context, task: task.to_string(), payload, options: Options::default() })
}

fn check_task(p: ProblemFile, task: &str) -> Result<ProblemFile> {
    if p.task != task {
        bail!("file describes task {:?} but the subcommand is {task:?}", p.task);
    }
    Ok(p)
}
