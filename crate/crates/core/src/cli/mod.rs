//! Verification suites and machine-readable reports behind the command-line front end.

mod checks;

use std::time::Instant;

use serde::Serialize;

use crate::heisenberg::{Signature, Weight};
use crate::invariant_ops::{
    build_invariant_operator, folland_stein_factorize, operator_matrix, resonant_order, special_l, DiffOp, DiffOpRecord, IndexPattern,
    InvariantError, OperatorMatrix,
};
use crate::scalars::{fmt_rational, parse_poly, Poly, VarSet};
use crate::structures::PhStructure;
use crate::tractor::Tractor;

pub use checks::*;

/// Seed used when none is given on the command line.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UsageError {
    #[error("signature {0:?} does not match n = {1}")]
    SignatureMismatch(String, usize),
    #[error("invalid weights: {0}")]
    Weight(String),
    #[error("upsilon must be real: {0} differs from its conjugate")]
    NonRealUpsilon(String),
    #[error("cannot parse {0:?}: {1}")]
    Parse(String, String),
    #[error("pattern {0:?} must consist of 'u' (unbarred) and 'b' (barred)")]
    Pattern(String),
    #[error("--w and --wp must be given together")]
    HalfWeight,
    #[error("--w and --wp are required")]
    MissingWeight,
    #[error("k = {0} does not match n + w + w' + 1 = {1}")]
    OrderMismatch(u32, u32),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Usage(#[from] UsageError),
    #[error("weight {0} violates the hypothesis (w,w') not in N0 x N0 for this pattern: factor {1} vanishes")]
    Forbidden(String, String),
    #[error(transparent)]
    Operator(#[from] InvariantError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One verified identity.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub anchor: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, anchor: &'static str, ok: bool) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self { name: name.into(), anchor, status, witness: None }
    }

    /// Passes iff `residual` is zero; a failing residual is kept as the witness.
    pub fn zero<T: std::fmt::Debug>(name: impl Into<String>, anchor: &'static str, residual: &T, is_zero: bool) -> Self {
        let mut c = Self::new(name, anchor, is_zero);
        if !is_zero {
            let mut s = format!("{residual:?}");
            if s.len() > 400 {
                s.truncate(400);
                s.push_str("...");
            }
            c.witness = Some(s);
        }
        c
    }

    pub fn with_witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Dencomm,
    TransformLaws,
    TractorFlat,
    TractorInvariance,
    CurvatureVanishing,
    Flatgoody,
    OperatorInvariance,
    Adjoint,
    Q3d,
    Ambient,
    Obstruction,
    All,
}

impl Suite {
    pub const EACH: [Suite; 11] = [
        Suite::Dencomm,
        Suite::TransformLaws,
        Suite::TractorFlat,
        Suite::TractorInvariance,
        Suite::CurvatureVanishing,
        Suite::Flatgoody,
        Suite::OperatorInvariance,
        Suite::Adjoint,
        Suite::Q3d,
        Suite::Ambient,
        Suite::Obstruction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Dencomm => "dencomm",
            Suite::TransformLaws => "transform-laws",
            Suite::TractorFlat => "tractor-flat",
            Suite::TractorInvariance => "tractor-invariance",
            Suite::CurvatureVanishing => "curvature-vanishing",
            Suite::Flatgoody => "flatgoody",
            Suite::OperatorInvariance => "operator-invariance",
            Suite::Adjoint => "adjoint",
            Suite::Q3d => "q3d",
            Suite::Ambient => "ambient",
            Suite::Obstruction => "obstruction",
            Suite::All => "all",
        }
    }
}

/// Raw command-line parameters, echoed in every report.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Params {
    pub n: usize,
    pub signature: Option<String>,
    pub w: Option<String>,
    pub wp: Option<String>,
    pub k: Option<u32>,
    pub kmax: Option<u32>,
    pub pattern: Option<String>,
    pub upsilon: Option<String>,
    pub seed: u64,
    pub degree: u32,
}

impl Params {
    pub fn new(n: usize) -> Self {
        Self { n, seed: DEFAULT_SEED, degree: 3, ..Default::default() }
    }
}

/// Validated parameters.
#[derive(Clone, Debug)]
pub struct Context {
    pub sig: Signature,
    pub seed: u64,
    pub degree: u32,
    pub upsilons: Vec<Poly>,
    pub weight: Option<Weight>,
    pub k: Option<u32>,
    pub kmax: u32,
    pub pattern: Option<IndexPattern>,
}

pub fn parse_weight(w: &str, wp: &str) -> Result<Weight, UsageError> {
    let p = |s: &str| crate::scalars::parse_rational(s).map_err(|e| UsageError::Parse(s.to_string(), e.to_string()));
    Weight::new(p(w)?, p(wp)?).map_err(|e| UsageError::Weight(e.to_string()))
}

pub fn parse_pattern(s: &str) -> Result<IndexPattern, UsageError> {
    let bars = s
        .chars()
        .map(|c| match c {
            'u' => Ok(false),
            'b' => Ok(true),
            _ => Err(UsageError::Pattern(s.to_string())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IndexPattern::consistent(bars))
}

pub fn parse_upsilon(s: &str, n: usize) -> Result<Poly, UsageError> {
    let p = parse_poly(s, &VarSet::heisenberg(n)).map_err(|e| UsageError::Parse(s.to_string(), e.to_string()))?;
    if !p.is_real() {
        return Err(UsageError::NonRealUpsilon(s.to_string()));
    }
    Ok(p)
}

/// Rescaling functions of degree at most two used when none is supplied.
pub fn default_upsilons(n: usize) -> Vec<Poly> {
    let last = format!("z{n}*zb{n}");
    let specs = ["z1*zb1 + t".to_string(), "t^2 + z1^2 + zb1^2".to_string(), format!("{last} + t^2 + z1 + zb1")];
    specs.iter().map(|s| parse_upsilon(s, n).expect("valid default")).collect()
}

impl Context {
    pub fn new(p: &Params) -> Result<Self, UsageError> {
        let sig = match &p.signature {
            Some(s) => {
                let sig = Signature::parse(s).map_err(|e| UsageError::Parse(s.clone(), e.to_string()))?;
                if sig.n() != p.n {
                    return Err(UsageError::SignatureMismatch(s.clone(), p.n));
                }
                sig
            }
            None => Signature::definite(p.n),
        };
        let weight = match (&p.w, &p.wp) {
            (Some(w), Some(wp)) => Some(parse_weight(w, wp)?),
            (None, None) => None,
            _ => return Err(UsageError::HalfWeight),
        };
        let upsilons = match &p.upsilon {
            Some(u) => vec![parse_upsilon(u, p.n)?],
            None => default_upsilons(p.n),
        };
        let pattern = p.pattern.as_deref().map(parse_pattern).transpose()?;
        Ok(Self { sig, seed: p.seed, degree: p.degree, upsilons, weight, k: p.k, kmax: p.kmax.unwrap_or(3), pattern })
    }

    pub fn n(&self) -> usize {
        self.sig.n()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: &'static str,
    pub params: Params,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub elapsed_ms: u128,
}

impl Report {
    pub fn render_text(&self) -> String {
        let mut out = format!("suite {} (n = {}, seed = {})\n", self.suite, self.params.n, self.params.seed);
        for c in &self.checks {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag}  {}  [{}]", c.name, c.anchor));
            if let Some(w) = &c.witness {
                out.push_str(&format!("  {w}"));
            }
            out.push('\n');
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        out.push_str(&format!("{} checks, {} failed, {} ms\n", self.checks.len(), failed, self.elapsed_ms));
        out
    }
}

pub fn suite_checks(suite: Suite, ctx: &Context) -> Vec<Check> {
    match suite {
        Suite::Dencomm => dencomm(ctx),
        Suite::TransformLaws => transform_laws(ctx),
        Suite::TractorFlat => tractor_algebra(ctx),
        Suite::TractorInvariance => tractor_invariance(ctx),
        Suite::CurvatureVanishing => curvature_vanishing(ctx),
        Suite::Flatgoody => [flat_identities(ctx), normalization(ctx)].concat(),
        Suite::OperatorInvariance => [operator_invariance(ctx), special_case(ctx)].concat(),
        Suite::Adjoint => self_adjointness(ctx),
        Suite::Q3d => q_curvature(ctx),
        Suite::Ambient => ambient(ctx),
        Suite::Obstruction => obstruction(ctx),
        Suite::All => Suite::EACH.iter().flat_map(|&s| suite_checks(s, ctx)).collect(),
    }
}

pub fn cmd_verify(suite: Suite, params: &Params) -> Result<Report, UsageError> {
    let ctx = Context::new(params)?;
    let start = Instant::now();
    let checks = suite_checks(suite, &ctx);
    let passed = checks.iter().all(Check::passed);
    let mut params = params.clone();
    params.signature = Some(ctx.sig.to_string());
    Ok(Report { suite: suite.name(), params, checks, passed, elapsed_ms: start.elapsed().as_millis() })
}

/// The invariant operator for the given weights, over the flat structure or the one
/// rescaled by `--upsilon`. At order two a vanishing normalization falls back to `L`.
pub fn cmd_op_print(params: &Params) -> Result<DiffOp, CommandError> {
    let ctx = Context::new(params)?;
    let w = ctx.weight.clone().ok_or(UsageError::MissingWeight)?;
    let k = resonant_order(ctx.n(), &w)?;
    if let Some(kk) = ctx.k.filter(|&kk| kk != k) {
        return Err(UsageError::OrderMismatch(kk, k).into());
    }
    let st = match &params.upsilon {
        Some(_) => PhStructure::rescaled(&ctx.sig, &ctx.upsilons[0])
            .map_err(|e| UsageError::Parse(params.upsilon.clone().unwrap_or_default(), e.to_string()))?,
        None => PhStructure::flat(&ctx.sig),
    };
    let tr = Tractor::new(&st);
    let pattern = ctx.pattern.clone().unwrap_or_else(|| IndexPattern::default_for(&w, k));
    match build_invariant_operator(&tr, &w, &pattern) {
        Err(InvariantError::ForbiddenWeight(_)) if k == 2 => Ok(special_l(&tr, &w)?),
        Err(InvariantError::ForbiddenWeight(f)) => Err(CommandError::Forbidden(w.to_string(), f)),
        r => Ok(r?),
    }
}

pub fn render_op(op: &DiffOp, json: bool) -> String {
    if json {
        serde_json::to_string_pretty(&op.to_record()).expect("serializable")
    } else {
        format!("{op}")
    }
}

pub fn parse_op(json: &str, n: usize) -> Result<DiffOp, InvariantError> {
    let rec: DiffOpRecord = serde_json::from_str(json).map_err(|e| InvariantError::Format(e.to_string()))?;
    DiffOp::from_record(&VarSet::heisenberg(n), &rec)
}

/// Matrix of the flat operator on the graded monomial basis, with its Folland-Stein parameters.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixDump {
    pub domain: Weight,
    pub codomain: Weight,
    pub bound: u32,
    #[serde(flatten)]
    pub matrix: OperatorMatrix,
    pub folland_stein: Option<Vec<String>>,
}

impl MatrixDump {
    pub fn render_csv(&self) -> String {
        let mut out = format!("row,{}\n", self.matrix.basis.join(","));
        for (b, row) in self.matrix.basis.iter().zip(&self.matrix.entries) {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            out.push_str(&format!("{b},{}\n", cells.join(",")));
        }
        out
    }
}

pub fn cmd_matrix(params: &Params) -> Result<MatrixDump, CommandError> {
    let mut flat = params.clone();
    flat.upsilon = None;
    let op = cmd_op_print(&flat)?;
    let sig = Context::new(params)?.sig;
    let tr = Tractor::new(&PhStructure::flat(&sig));
    let fr = tr.structure().frame();
    let k = resonant_order(sig.n(), &op.domain)?;
    let alpha = folland_stein_factorize(&op.op, fr, k).map(|a| a.iter().map(fmt_rational).collect());
    Ok(MatrixDump {
        domain: op.domain.clone(),
        codomain: op.codomain.clone(),
        bound: params.degree,
        matrix: operator_matrix(&op.op, fr, params.degree),
        folland_stein: alpha,
    })
}
