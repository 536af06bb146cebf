//! Job configuration and orchestration shared by the command-line tool and
//! the Python bindings.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::complex::{d_squared_check, homology, Caps, ComplexData, HomologyResult, WeightIndex};
use crate::contragredient::{check_fhl, duality_sides, DualModule};
use crate::error::{Error, Result};
use crate::ext::{pairing_matrix, solve_ext1, Ext1Result, ExtContext, ExtOptions, Pairing};
use crate::laurent::RationalSection;
use crate::linalg::SparseVec;
use crate::scalar::Scalar;
use crate::vertex::axioms::{axiom_check_algebra, axiom_check_module, AxiomKind, AxiomReport};
use crate::vertex::cache::TableCache;
use crate::vertex::{fock_module, heisenberg_va, trivial_va, ModuleData, VertexAlgebraData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraKind {
    Trivial,
    Heisenberg,
}

impl FromStr for AlgebraKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trivial" => Ok(AlgebraKind::Trivial),
            "heisenberg" => Ok(AlgebraKind::Heisenberg),
            _ => Err(Error::Config(format!("unknown algebra {s:?} (expected trivial or heisenberg)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Axioms,
    Homology,
    Ext,
    Pairing,
    Stabilize,
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axioms" => Ok(Command::Axioms),
            "homology" => Ok(Command::Homology),
            "ext" => Ok(Command::Ext),
            "pairing" => Ok(Command::Pairing),
            "stabilize" => Ok(Command::Stabilize),
            _ => Err(Error::Config(format!("unknown command {s:?}"))),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Axioms => "axioms",
            Command::Homology => "homology",
            Command::Ext => "ext",
            Command::Pairing => "pairing",
            Command::Stabilize => "stabilize",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsConfig {
    #[serde(rename = "D")]
    pub d: i64,
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "windowLo")]
    pub window_lo: i64,
    #[serde(rename = "windowHi")]
    pub window_hi: i64,
    #[serde(rename = "Q")]
    pub q: u32,
}

impl Default for CapsConfig {
    fn default() -> Self {
        CapsConfig { d: 2, n: 3, window_lo: -5, window_hi: 5, q: 2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundConfig {
    pub bound: i64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig { bound: 3 }
    }
}

/// Everything a job needs. Deserializes from the config file layout:
///
/// ```toml
/// algebra = "heisenberg"
/// lambdaA = "0"
/// lambdaC = "1/2"
/// weight = 0
/// [caps]
/// D = 2
/// N = 3
/// windowLo = -5
/// windowHi = 5
/// Q = 2
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub algebra: AlgebraKind,
    #[serde(rename = "lambdaA", default = "Scalar::zero")]
    pub lambda_a: Scalar,
    #[serde(rename = "lambdaC", default = "Scalar::zero")]
    pub lambda_c: Scalar,
    #[serde(default)]
    pub caps: CapsConfig,
    #[serde(default)]
    pub weight: i64,
    #[serde(default)]
    pub axioms: BoundConfig,
    #[serde(default)]
    pub ext: BoundConfig,
    #[serde(default, skip_serializing)]
    pub cache_dir: Option<PathBuf>,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            algebra: AlgebraKind::Heisenberg,
            lambda_a: Scalar::zero(),
            lambda_c: Scalar::zero(),
            caps: CapsConfig::default(),
            weight: 0,
            axioms: BoundConfig::default(),
            ext: BoundConfig::default(),
            cache_dir: None,
        }
    }
}

impl JobConfig {
    /// Checks the caps; returns warnings for acceptable but suspicious
    /// settings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let c = &self.caps;
        if c.d < 1 || c.n < 1 || c.q < 1 {
            return Err(Error::Config(format!("caps must be positive (D={}, N={}, Q={})", c.d, c.n, c.q)));
        }
        if self.algebra == AlgebraKind::Heisenberg && c.d < 2 {
            return Err(Error::Config("the Heisenberg algebra needs D >= 2".into()));
        }
        if c.window_lo > c.window_hi {
            return Err(Error::Config(format!("empty window [{}, {}]", c.window_lo, c.window_hi)));
        }
        let r = c.n + c.d + 1;
        let mut warnings = Vec::new();
        if c.window_lo > -r || c.window_hi < r {
            warnings.push(format!(
                "window [{}, {}] does not contain [-{r}, {r}]; slices may be cut off",
                c.window_lo, c.window_hi
            ));
        }
        Ok(warnings)
    }

    fn bumped(&self) -> JobConfig {
        let c = self.caps;
        JobConfig {
            caps: CapsConfig { d: c.d, n: c.n + 1, window_lo: c.window_lo - 1, window_hi: c.window_hi + 1, q: c.q + 1 },
            ..self.clone()
        }
    }
}

/// Result of a job. `results` holds the JSON payloads of the modules that
/// ran; the report is deterministic for a given config.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub config: JobConfig,
    pub results: BTreeMap<String, Value>,
    pub leakage: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
    pub certificate: bool,
    #[serde(skip)]
    pub outcome: Outcome,
}

/// How a job ended, mapped to the process exit status.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Outcome {
    #[default]
    Pass,
    CertificateFailure,
    InvariantFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::CertificateFailure => 1,
            Outcome::InvariantFailure => 2,
        }
    }
}

/// Exit status for an error that aborted a job.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse(_) => 3,
        _ => 2,
    }
}

/// Algebra and modules of a configuration, built or loaded from the cache.
pub struct Inputs {
    pub alg: Arc<VertexAlgebraData>,
    pub a: ModuleData,
    pub c: ModuleData,
}

pub fn build_inputs(cfg: &JobConfig) -> Result<Inputs> {
    match cfg.algebra {
        AlgebraKind::Trivial => {
            let (alg, m) = trivial_va();
            Ok(Inputs { alg, a: m.clone(), c: m })
        }
        AlgebraKind::Heisenberg => {
            let cache = cfg.cache_dir.as_ref().map(TableCache::new);
            let alg = match &cache {
                Some(c) => c.algebra("heisenberg", &BTreeMap::new(), cfg.caps.d, || heisenberg_va(cfg.caps.d))?,
                None => heisenberg_va(cfg.caps.d)?,
            };
            let module = |lambda: &Scalar| -> Result<ModuleData> {
                let params = BTreeMap::from([("lambda".to_string(), lambda.to_string())]);
                match &cache {
                    Some(c) => c.module(&alg, "fock", &params, cfg.caps.n, || fock_module(&alg, lambda, cfg.caps.n)),
                    None => fock_module(&alg, lambda, cfg.caps.n),
                }
            };
            let a = module(&cfg.lambda_a)?;
            let c = module(&cfg.lambda_c)?;
            Ok(Inputs { alg, a, c })
        }
    }
}

fn progress(what: &str, t0: Instant) {
    log::info!("{what} done in {:.2?}", t0.elapsed());
}

fn axiom_reports(cfg: &JobConfig, inputs: &Inputs) -> Result<(Value, bool)> {
    let b = cfg.axioms.bound;
    let mut ok = true;
    let mut per = |reports: Vec<AxiomReport>| {
        ok &= reports.iter().all(AxiomReport::passed);
        serde_json::to_value(reports)
    };
    let t0 = Instant::now();
    let alg = AxiomKind::ALL.iter().map(|k| axiom_check_algebra(&inputs.alg, *k, b)).collect::<Result<Vec<_>>>()?;
    let a = AxiomKind::ALL.iter().map(|k| axiom_check_module(&inputs.a, *k, b)).collect::<Result<Vec<_>>>()?;
    let c = AxiomKind::ALL.iter().map(|k| axiom_check_module(&inputs.c, *k, b)).collect::<Result<Vec<_>>>()?;
    let alg = per(alg)?;
    let a = per(a)?;
    let c = per(c)?;
    progress("axiom checks", t0);

    let t0 = Instant::now();
    let fhl_failures: Vec<String> = (0..inputs.alg.dim())
        .filter(|i| !check_fhl(&inputs.alg, &SparseVec::unit(*i)))
        .map(|i| inputs.alg.space.label(i).to_string())
        .collect();
    let dual = DualModule::new(inputs.a.clone());
    let mut checked = 0usize;
    let mut duality_failures = Vec::new();
    for n in -5..=5 {
        let f = RationalSection::var_power(1, 0, n);
        for x in 0..inputs.alg.dim() {
            for phi in 0..inputs.a.dim() {
                for m in 0..inputs.a.dim() {
                    let (l, r) = duality_sides(&dual, &f, x, phi, m)?;
                    checked += 1;
                    if l != r {
                        duality_failures.push(format!(
                            "z^{n} a={} phi={}* m={}",
                            inputs.alg.space.label(x),
                            inputs.a.space.label(phi),
                            inputs.a.space.label(m)
                        ));
                    }
                }
            }
        }
    }
    ok &= fhl_failures.is_empty() && duality_failures.is_empty();
    progress("contragredient checks", t0);
    let contra = json!({
        "fhl": {"checked": inputs.alg.dim(), "failures": fhl_failures},
        "duality": {"checked": checked, "failures": duality_failures},
    });
    Ok((json!({"algebra": alg, "A": a, "C": c, "contragredient": contra}), ok))
}

struct Sides {
    hom: HomologyResult,
    ext: Option<(Ext1Result, Arc<ExtContext>)>,
}

fn complex_of(cfg: &JobConfig) -> Result<(ComplexData, Caps)> {
    let inputs = build_inputs(cfg)?;
    let cx = ComplexData::new(inputs.a, inputs.c)?;
    let caps = cx.caps((cfg.caps.window_lo, cfg.caps.window_hi), cfg.caps.q);
    Ok((cx, caps))
}

fn run_sides(cfg: &JobConfig, with_ext: bool) -> Result<Sides> {
    let (cx, caps) = complex_of(cfg)?;
    let t0 = Instant::now();
    let hom = homology(&cx, &WeightIndex { weight: cfg.weight, caps })?;
    progress(&format!("homology at {caps}"), t0);
    let ext = if with_ext {
        if cfg.weight != 0 {
            return Err(Error::Config(format!("Ext pairs with weight 0, but weight = {}", cfg.weight)));
        }
        let t0 = Instant::now();
        let ctx = ExtContext::from_complex(&cx)?;
        let opts = ExtOptions { bound: cfg.ext.bound, certify_bound: cfg.ext.bound, max_constraints: None };
        let e = solve_ext1(&ctx, &caps, &opts)?;
        progress(&format!("Ext at {caps}"), t0);
        Some((e, ctx))
    } else {
        None
    };
    Ok(Sides { hom, ext })
}

fn ext_json(e: &Ext1Result, ctx: &ExtContext, pairing: Option<&Pairing>) -> Result<Value> {
    let classes: Vec<Value> = e
        .classes
        .iter()
        .map(|c| serde_json::to_value(c.representative.entries(ctx)))
        .collect::<std::result::Result<_, _>>()?;
    let mut v = json!({
        "caps": e.caps,
        "dimExt1": e.dim,
        "classes": classes,
        "unknowns": e.unknowns.len(),
        "constraints": e.constraints,
        "dimCocycles": e.dim_cocycles,
        "rankCoboundaries": e.rank_coboundaries,
        "tentative": e.tentative,
    });
    if let Some(p) = pairing {
        v["pairing"] = serde_json::to_value(p)?;
    }
    Ok(v)
}

/// Runs one command.
pub fn run(command: Command, cfg: &JobConfig) -> Result<RunReport> {
    let mut report = RunReport {
        command,
        config: cfg.clone(),
        results: BTreeMap::new(),
        leakage: BTreeMap::new(),
        warnings: cfg.validate()?,
        certificate: true,
        outcome: Outcome::Pass,
    };
    let mut outcome = Outcome::Pass;
    match command {
        Command::Axioms => {
            let inputs = build_inputs(cfg)?;
            let (v, ok) = axiom_reports(cfg, &inputs)?;
            report.results.insert("axioms".into(), v);
            report.certificate = ok;
            if !ok {
                outcome = Outcome::InvariantFailure;
            }
        }
        Command::Homology => {
            let (cx, caps) = complex_of(cfg)?;
            let idx = WeightIndex { weight: cfg.weight, caps };
            let t0 = Instant::now();
            let hom = homology(&cx, &idx)?;
            progress(&format!("homology at {caps}"), t0);
            let t0 = Instant::now();
            let d2 = d_squared_check(&cx, 2, &idx, None)?;
            progress("d1∘d2 check", t0);
            if !d2.passed() {
                outcome = Outcome::InvariantFailure;
                report.certificate = false;
            }
            report.leakage.insert("homology".into(), hom.leakage);
            report.leakage.insert("zone".into(), hom.zone_leakage);
            report.results.insert("homology".into(), serde_json::to_value(&hom)?);
            report.results.insert("d1d2".into(), serde_json::to_value(&d2)?);
        }
        Command::Ext => {
            let sides = run_sides(cfg, true)?;
            let (e, ctx) = sides.ext.as_ref().expect("ext side");
            if e.tentative {
                report.warnings.push("constraint count was capped; Ext result is tentative".into());
            }
            report.results.insert("ext".into(), ext_json(e, ctx, None)?);
        }
        Command::Pairing => {
            let sides = run_sides(cfg, true)?;
            let (e, ctx) = sides.ext.as_ref().expect("ext side");
            let t0 = Instant::now();
            let p = pairing_matrix(ctx, e, &sides.hom)?;
            progress("pairing matrix", t0);
            report.certificate = p.certificate;
            if !p.certificate {
                outcome = Outcome::CertificateFailure;
            }
            report.leakage.insert("homology".into(), sides.hom.leakage);
            report.leakage.insert("zone".into(), sides.hom.zone_leakage);
            report.results.insert("homology".into(), serde_json::to_value(&sides.hom)?);
            report.results.insert("ext".into(), ext_json(e, ctx, Some(&p))?);
        }
        Command::Stabilize => {
            let mut rows = Vec::new();
            for (name, c) in [("base", cfg.clone()), ("bumped", cfg.bumped())] {
                let s = run_sides(&c, cfg.weight == 0)?;
                report.leakage.insert(format!("{name}.zone"), s.hom.zone_leakage);
                report.leakage.insert(format!("{name}.homology"), s.hom.leakage);
                rows.push(json!({
                    "caps": s.hom.caps,
                    "dimH0": s.hom.dim_h0,
                    "dimH1": s.hom.dim_h1,
                    "dimExt1": s.ext.as_ref().map(|(e, _)| e.dim),
                    "zoneLeakage": s.hom.zone_leakage,
                }));
            }
            let keys = ["dimH0", "dimH1", "dimExt1"];
            let stable = keys.iter().all(|k| rows[0][k] == rows[1][k]);
            let zone_clean = rows.iter().all(|r| r["zoneLeakage"] == 0);
            report.certificate = stable && zone_clean;
            if !report.certificate {
                outcome = Outcome::CertificateFailure;
            }
            report.results.insert("stabilize".into(), json!({"runs": rows, "stable": stable, "zoneClean": zone_clean}));
        }
    }
    if report.leakage.iter().any(|(k, v)| k.ends_with("zone") && *v > 0) {
        report.warnings.push("leakage inside the leakage-free zone".into());
    }
    report.outcome = outcome;
    Ok(report)
}
