//! Run configuration, verification pipelines and structured reports.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::affine::{check_affine_relations, graded_character, hermiticity_residual, ModuleOptions, TruncatedModule};
use crate::cache::{module_with_cache, ModuleCache};
use crate::error::{Error, Result};
use crate::fermion::check_car;
use crate::index::{fredholm_index, hat_representation, jlo_pairing, JloConfig};
use crate::kk::{k_pairing_matrix, verify_pairing2_with, IntMatrix};
use crate::lie::{classical_weyl_order, root_system, CartanType, Series};
use crate::sparse::Csc;
use crate::sugawara::{
    adjoint_residuals, check_super_virasoro, dirac_with, hat_space_from_modules, l0_consistency, q_f64,
    sugawara_modes, DiracReport, HatOptions, HatSpace, DEFAULT_DENSE_LIMIT,
};
use crate::verlinde::{fusion_ring, verify_ring_axioms, FusionRing, Precision, SMatrix};

/// Version of the report layout.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Md,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "md" | "markdown" => Ok(OutputFormat::Md),
            other => Err(Error::Config(format!("unknown output format {other:?}"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Md => "md",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algebra: CartanType,
    pub level: u32,
    /// Highest weight `mu` of the sector under study (`i` in index computations).
    pub highest_weight: u32,
    /// Second sector `j` for `index`/`jlo`; all sectors when unset.
    pub sector_j: Option<u32>,
    pub cutoff: u32,
    pub mode_range: u32,
    pub jlo_order: u32,
    pub jlo_scale: f64,
    pub tol_relation: f64,
    pub tol_car: f64,
    pub tol_unitarity: f64,
    pub tol_jlo: f64,
    pub format: OutputFormat,
    pub cache_dir: Option<PathBuf>,
    pub precision: Precision,
    pub threads: Option<usize>,
    pub vacuum_choice: usize,
    pub headroom: u32,
    pub dense_limit: usize,
    pub kk_samples: usize,
    pub kk_seed: u64,
    pub emit_s: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algebra: CartanType { series: Series::A, rank: 1 },
            level: 1,
            highest_weight: 0,
            sector_j: None,
            cutoff: 4,
            mode_range: 2,
            jlo_order: 8,
            jlo_scale: 1.0,
            tol_relation: 1e-9,
            tol_car: 1e-12,
            tol_unitarity: 1e-10,
            tol_jlo: 1e-3,
            format: OutputFormat::Json,
            cache_dir: None,
            precision: Precision::Double,
            threads: None,
            vacuum_choice: 0,
            headroom: 2,
            dense_limit: DEFAULT_DENSE_LIMIT,
            kk_samples: crate::kk::DEFAULT_KK_SAMPLES,
            kk_seed: crate::kk::DEFAULT_KK_SEED,
            emit_s: false,
        }
    }
}

/// Keys accepted in configuration files, in canonical order.
pub const CONFIG_KEYS: &[&str] = &[
    "algebra",
    "level",
    "hw",
    "j",
    "cutoff",
    "mode_range",
    "jlo_order",
    "jlo_scale",
    "tol_relation",
    "tol_car",
    "tol_unitarity",
    "tol_jlo",
    "format",
    "cache_dir",
    "precision",
    "threads",
    "vacuum_choice",
    "headroom",
    "dense_limit",
    "kk_samples",
    "kk_seed",
    "emit_s",
];

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("invalid value {v:?} for {key}")))
}

fn optional(v: &str) -> Option<&str> {
    let v = v.trim();
    (!v.is_empty() && v != "none").then_some(v)
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "algebra" => self.algebra = value.parse()?,
            "level" => self.level = parse(key, value)?,
            "hw" | "i" | "highest_weight" => self.highest_weight = parse(key, value)?,
            "j" => self.sector_j = optional(value).map(|v| parse(key, v)).transpose()?,
            "cutoff" => self.cutoff = parse(key, value)?,
            "mode_range" => self.mode_range = parse(key, value)?,
            "jlo_order" | "order" => self.jlo_order = parse(key, value)?,
            "jlo_scale" | "scale" => self.jlo_scale = parse(key, value)?,
            "tol_relation" => self.tol_relation = parse(key, value)?,
            "tol_car" => self.tol_car = parse(key, value)?,
            "tol_unitarity" => self.tol_unitarity = parse(key, value)?,
            "tol_jlo" => self.tol_jlo = parse(key, value)?,
            "format" => self.format = value.parse()?,
            "cache_dir" => self.cache_dir = optional(value).map(PathBuf::from),
            "precision" => self.precision = value.parse()?,
            "threads" => self.threads = optional(value).map(|v| parse(key, v)).transpose()?,
            "vacuum_choice" => self.vacuum_choice = parse(key, value)?,
            "headroom" => self.headroom = parse(key, value)?,
            "dense_limit" => self.dense_limit = parse(key, value)?,
            "kk_samples" => self.kk_samples = parse(key, value)?,
            "kk_seed" => self.kk_seed = parse(key, value)?,
            "emit_s" => self.emit_s = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let opt = |o: Option<String>| o.unwrap_or_else(|| "none".into());
        match key {
            "algebra" => self.algebra.to_string(),
            "level" => self.level.to_string(),
            "hw" => self.highest_weight.to_string(),
            "j" => opt(self.sector_j.map(|j| j.to_string())),
            "cutoff" => self.cutoff.to_string(),
            "mode_range" => self.mode_range.to_string(),
            "jlo_order" => self.jlo_order.to_string(),
            "jlo_scale" => format!("{:?}", self.jlo_scale),
            "tol_relation" => format!("{:?}", self.tol_relation),
            "tol_car" => format!("{:?}", self.tol_car),
            "tol_unitarity" => format!("{:?}", self.tol_unitarity),
            "tol_jlo" => format!("{:?}", self.tol_jlo),
            "format" => self.format.to_string(),
            "cache_dir" => opt(self.cache_dir.as_ref().map(|p| p.display().to_string())),
            "precision" => self.precision.to_string(),
            "threads" => opt(self.threads.map(|t| t.to_string())),
            "vacuum_choice" => self.vacuum_choice.to_string(),
            "headroom" => self.headroom.to_string(),
            "dense_limit" => self.dense_limit.to_string(),
            "kk_samples" => self.kk_samples.to_string(),
            "kk_seed" => self.kk_seed.to_string(),
            "emit_s" => self.emit_s.to_string(),
            _ => String::new(),
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_config_str(text)?;
        Ok(cfg)
    }

    pub fn apply_config_str(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(k, v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", no + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn to_config_string(&self) -> String {
        CONFIG_KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.level == 0 {
            return bad("level must be ≥ 1".into());
        }
        if self.level > 64 {
            return bad(format!("level {} exceeds the supported maximum 64", self.level));
        }
        if self.highest_weight > self.level {
            return bad(format!("highest weight {} exceeds level {}", self.highest_weight, self.level));
        }
        if let Some(j) = self.sector_j {
            if j > self.level {
                return bad(format!("sector {j} exceeds level {}", self.level));
            }
        }
        if self.cutoff > 12 {
            return bad(format!("cutoff {} exceeds the supported maximum 12", self.cutoff));
        }
        if self.mode_range > self.cutoff {
            return bad(format!("mode range {} exceeds the cutoff {}", self.mode_range, self.cutoff));
        }
        if !self.jlo_order.is_multiple_of(2) || self.jlo_order > 64 {
            return bad(format!("JLO order must be even and at most 64, got {}", self.jlo_order));
        }
        if !(self.jlo_scale > 0.0 && self.jlo_scale <= 100.0) {
            return bad(format!("JLO scale must lie in (0, 100], got {}", self.jlo_scale));
        }
        for (name, t) in [
            ("tol_relation", self.tol_relation),
            ("tol_car", self.tol_car),
            ("tol_unitarity", self.tol_unitarity),
            ("tol_jlo", self.tol_jlo),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.headroom > 8 {
            return bad(format!("headroom {} exceeds 8", self.headroom));
        }
        if self.threads == Some(0) {
            return bad("threads must be ≥ 1".into());
        }
        if self.kk_samples > 10_000 {
            return bad("kk_samples must be at most 10000".into());
        }
        Ok(())
    }

    fn config_json(&self) -> Value {
        let mut m = Map::new();
        for k in CONFIG_KEYS {
            // Output-only settings do not affect the results.
            if matches!(*k, "format" | "cache_dir" | "threads") {
                continue;
            }
            m.insert((*k).into(), Value::String(self.get(k)));
        }
        Value::Object(m)
    }

    fn cache(&self) -> Option<ModuleCache> {
        self.cache_dir.as_ref().map(ModuleCache::new)
    }

    fn is_a1(&self) -> bool {
        self.algebra == CartanType { series: Series::A, rank: 1 }
    }
}

/// One pass/fail line of a report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub requirement: String,
    pub passed: bool,
}

fn below(name: impl Into<String>, value: f64, tol: f64) -> Check {
    Check { name: name.into(), value: json!(value), requirement: format!("< {tol:e}"), passed: value < tol }
}

fn exact<T: Serialize + PartialEq>(name: impl Into<String>, value: T, want: T) -> Check {
    let passed = value == want;
    Check {
        name: name.into(),
        value: serde_json::to_value(&value).unwrap_or(Value::Null),
        requirement: format!("= {}", serde_json::to_string(&want).unwrap_or_default()),
        passed,
    }
}

/// Flat table for CSV output.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub document: Value,
    pub checks: Vec<Check>,
    pub table: Option<Table>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.document).expect("report serializes");
                s.push('\n');
                s
            }
            OutputFormat::Csv => {
                let table = self.table.clone().unwrap_or_else(|| self.checks_table());
                let mut out = csv_line(&table.header);
                for r in &table.rows {
                    out.push_str(&csv_line(r));
                }
                out
            }
            OutputFormat::Md => {
                let mut out = format!("# loop-index {}\n\n", self.command);
                out.push_str(&format!("Result: **{}**\n\n", if self.passed() { "pass" } else { "FAIL" }));
                if !self.checks.is_empty() {
                    out.push_str("| check | value | requirement | result |\n|---|---|---|---|\n");
                    for c in &self.checks {
                        out.push_str(&format!(
                            "| {} | {} | {} | {} |\n",
                            c.name,
                            c.value,
                            c.requirement,
                            if c.passed { "pass" } else { "FAIL" }
                        ));
                    }
                    out.push('\n');
                }
                out.push_str("```json\n");
                out.push_str(&serde_json::to_string_pretty(&self.document).expect("report serializes"));
                out.push_str("\n```\n");
                out
            }
        }
    }

    fn checks_table(&self) -> Table {
        Table {
            header: vec!["check".into(), "value".into(), "requirement".into(), "passed".into()],
            rows: self
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), c.value.to_string(), c.requirement.clone(), c.passed.to_string()])
                .collect(),
        }
    }
}

fn csv_line(fields: &[String]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    format!("{}\n", quoted.join(","))
}

/// Process exit code for an error: 2 for configuration problems, 3 for resource guards,
/// 1 otherwise.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidAlgebra { .. } | Error::UnsupportedAlgebra(_) => 2,
        Error::DimensionGuard { .. } | Error::WeylBoundExceeded { .. } | Error::InsufficientHeadroom { .. } => 3,
        _ => 1,
    }
}

fn document(command: &str, cfg: &RunConfig, body: Map<String, Value>, checks: &[Check]) -> Value {
    let mut doc = Map::new();
    doc.insert("format_version".into(), json!(FORMAT_VERSION));
    doc.insert(
        "metadata".into(),
        json!({"tool": "loop-index", "version": env!("CARGO_PKG_VERSION"), "command": command}),
    );
    doc.insert("config".into(), cfg.config_json());
    for (k, v) in body {
        doc.insert(k, v);
    }
    doc.insert("checks".into(), serde_json::to_value(checks).expect("checks serialize"));
    doc.insert("passed".into(), json!(checks.iter().all(|c| c.passed)));
    Value::Object(doc)
}

fn finish(command: &str, cfg: &RunConfig, body: Map<String, Value>, checks: Vec<Check>, table: Option<Table>) -> Report {
    Report { command: command.into(), document: document(command, cfg, body, &checks), checks, table }
}

fn q_str(q: crate::lie::Q) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

// ---------------------------------------------------------------- stages

pub fn roots_stage(algebra: CartanType) -> Result<Value> {
    let rs = root_system(algebra)?;
    Ok(json!({
        "algebra": algebra.to_string(),
        "series": format!("{:?}", algebra.series),
        "rank": rs.rank(),
        "dim": rs.dim(),
        "h_dual": rs.dual_coxeter,
        "cartan_matrix": rs.cartan_matrix,
        "positive_roots": rs.positive_root_coords,
        "marks": rs.marks,
        "comarks": rs.comarks,
        "weyl_order": classical_weyl_order(algebra).to_string(),
    }))
}

pub struct FusionStage {
    pub s: SMatrix,
    pub ring: FusionRing,
    pub value: Value,
    pub checks: Vec<Check>,
}

pub fn fusion_stage(cfg: &RunConfig) -> Result<FusionStage> {
    let rs = root_system(cfg.algebra)?;
    let (s, ring) = fusion_ring(&rs, cfg.level, cfg.precision)?;
    let axioms = verify_ring_axioms(&ring);
    let unitarity = s.unitarity_residual();
    let mut v = json!({
        "sectors": ring.n,
        "weights": ring.weights.iter().map(|w| w.dynkin_labels.clone()).collect::<Vec<_>>(),
        "conjugation": ring.conjugation,
        "tensor": ring.triples(),
        "axioms": axioms.checks.iter().map(|c| (c.name.clone(), json!(c.max_violation))).collect::<Map<_, _>>(),
        "s_unitarity_residual": unitarity,
        "s_symmetry_residual": s.symmetry_residual(),
        "charge_conjugation_residual": s.charge_conjugation_residual(&ring.conjugation),
        "max_rounding_residual": ring.max_rounding_residual,
    });
    if cfg.emit_s {
        let n = s.n;
        v["S"] = json!((0..n)
            .map(|i| (0..n).map(|j| [s.get(i, j).re, s.get(i, j).im]).collect::<Vec<_>>())
            .collect::<Vec<_>>());
    }
    let mut checks = vec![below("fusion: S unitarity residual", unitarity, cfg.tol_unitarity)];
    for c in &axioms.checks {
        checks.push(exact(format!("fusion: {}", c.name), c.max_violation, 0));
    }
    Ok(FusionStage { s, ring, value: v, checks })
}

fn module_summary(m: &TruncatedModule, cfg: &RunConfig) -> (Value, Vec<Check>) {
    let affine = check_affine_relations(m);
    let herm = hermiticity_residual(m);
    let positive = m.blocks.iter().all(|b| b.pivot_values.iter().all(|d| d > &num_traits::Zero::zero()));
    let v = json!({
        "highest_weight": m.highest_weight,
        "conformal_weight": q_str(m.conformal_weight),
        "dim": m.dim(),
        "graded_dims": graded_character(m),
        "blocks": m.blocks.iter().map(|b| json!([b.energy, b.sl2_weight, b.dim(), b.verma_dim])).collect::<Vec<_>>(),
        "relation_residual": affine,
        "hermiticity_residual": herm,
        "gram_positive": positive,
    });
    let mu = m.highest_weight;
    let checks = vec![
        below(format!("module mu={mu}: affine relations"), affine, cfg.tol_relation),
        below(format!("module mu={mu}: current adjoints"), herm, cfg.tol_relation),
        exact(format!("module mu={mu}: Gram quotient positive definite"), positive, true),
    ];
    (v, checks)
}

fn build_module(cfg: &RunConfig, mu: u32) -> Result<TruncatedModule> {
    module_with_cache(cfg.cache().as_ref(), cfg.algebra, mu, cfg.level, cfg.cutoff, ModuleOptions::default())
}

/// Hat space, modes and Dirac report for one sector.
pub struct SectorStage {
    pub hs: HatSpace,
    pub dirac: Csc,
    pub dirac_report: DiracReport,
    pub value: Value,
    pub checks: Vec<Check>,
}

pub fn sector_stage(cfg: &RunConfig, mu: u32) -> Result<SectorStage> {
    let mi = build_module(cfg, mu)?;
    let m0 = if mu == 0 { mi.clone() } else { build_module(cfg, 0)? };
    let affine = check_affine_relations(&mi).max(check_affine_relations(&m0));
    let opts = HatOptions { headroom: cfg.headroom, ..HatOptions::default() };
    let hs = hat_space_from_modules(mi, m0, opts)?;
    let max_mode = (2 * cfg.mode_range).min(cfg.cutoff);
    let modes = sugawara_modes(&hs, max_mode)?;
    let sv = check_super_virasoro(&hs, &modes, cfg.mode_range);
    let car = check_car(&hs.fermions);
    let l0 = l0_consistency(&hs, &modes);
    let (gadj, ladj) = adjoint_residuals(&modes);
    let rep = dirac_with(&hs, &modes, cfg.dense_limit);
    let c = hs.central_charge();
    let gap = hs.gap_bound();
    let value = json!({
        "highest_weight": mu,
        "dim": hs.dim(),
        "fermion_cutoff": hs.fermions.cutoff,
        "c": q_str(c),
        "gap_bound": q_str(gap),
        "lowest_l0": q_str(hs.lowest_l0()),
        "min_D2": rep.min_d2,
        "residuals": {
            "affine": affine,
            "car": car,
            "supervir": sv.max_residual(),
            "supervir_ll": sv.max_ll,
            "supervir_lg": sv.max_lg,
            "supervir_gg": sv.max_gg,
            "d_squared": rep.max_d2_residual,
            "l0": l0,
            "g_adjoint": gadj,
            "l_adjoint": ladj,
            "spectral_symmetry": rep.max_symmetry_residual,
            "oddness": rep.oddness,
        },
        "central_fits": sv.central_fits,
        "blocks": rep.blocks.iter().map(|b| json!({
            "energy": b.energy, "dim": b.dim, "even": b.even_dim, "odd": b.odd_dim,
            "expected_d2": b.expected_d2, "d2_residual": b.d2_residual, "method": b.method,
            "min_d2": b.min_d2, "symmetry_residual": b.symmetry_residual,
        })).collect::<Vec<_>>(),
    });
    let tol = cfg.tol_relation;
    let tag = format!("sector mu={mu}");
    let checks = vec![
        below(format!("{tag}: CAR relations"), car, cfg.tol_car),
        below(format!("{tag}: super-Virasoro relations"), sv.max_residual(), tol),
        below(format!("{tag}: central charge fit"), sv.central_fit_error, tol),
        below(format!("{tag}: Sugawara L0 equals total Hamiltonian"), l0, tol),
        below(format!("{tag}: G_n, L_n adjoints"), gadj.max(ladj), tol),
        below(format!("{tag}: D^2 - (L0 - c/24)"), rep.max_d2_residual, tol),
        Check {
            name: format!("{tag}: D^2 above the gap bound"),
            value: json!(rep.min_d2),
            requirement: format!("≥ {} - {tol:e}", q_str(gap)),
            passed: rep.min_d2 >= q_f64(gap) - tol,
        },
        below(format!("{tag}: spectral symmetry of D"), rep.max_symmetry_residual, tol),
        exact(format!("{tag}: D odd"), rep.oddness, 0.0),
    ];
    let dirac = modes.dirac().clone();
    Ok(SectorStage { hs, dirac, dirac_report: rep, value, checks })
}

fn sectors_j(cfg: &RunConfig) -> Vec<u32> {
    match cfg.sector_j {
        Some(j) => vec![j],
        None => (0..=cfg.level).collect(),
    }
}

fn index_row(stage: &SectorStage, js: &[u32], choice: usize) -> Result<Vec<i64>> {
    js.iter()
        .map(|&j| hat_representation(&stage.hs, j, choice).map(|p| fredholm_index(&stage.hs, &stage.dirac, &p)))
        .collect()
}

fn alternative_choice(cfg: &RunConfig) -> usize {
    if cfg.vacuum_choice == 0 {
        1
    } else {
        0
    }
}

fn jlo_rows(stage: &SectorStage, js: &[u32], cfg: &RunConfig) -> Result<Vec<(u32, crate::index::JloResult)>> {
    let jcfg = JloConfig { order: cfg.jlo_order, scale: cfg.jlo_scale };
    js.iter()
        .map(|&j| {
            let p = hat_representation(&stage.hs, j, cfg.vacuum_choice)?;
            Ok((j, jlo_pairing(&stage.hs, &stage.dirac, &p, jcfg)?))
        })
        .collect()
}

fn jlo_checks(i: u32, rows: &[(u32, crate::index::JloResult)], tol: f64) -> Vec<Check> {
    rows.iter()
        .map(|(j, r)| {
            let want = if i == *j { 1.0 } else { 0.0 };
            let dev = ((r.value_re - want).powi(2) + r.value_im.powi(2)).sqrt();
            below(format!("JLO pairing ({i},{j}) near delta"), dev, tol)
        })
        .collect()
}

fn jlo_json(i: u32, rows: &[(u32, crate::index::JloResult)]) -> Vec<Value> {
    rows.iter()
        .map(|(j, r)| {
            json!({"i": i, "j": j, "value_re": r.value_re, "value_im": r.value_im,
                   "last_term": r.last_term, "converged": r.converged, "terms": r.terms})
        })
        .collect()
}

// ---------------------------------------------------------------- commands

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Roots,
    Fusion,
    SMatrix,
    Module,
    SugawaraVerify,
    Dirac,
    Index,
    Jlo,
    KkVerify,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Roots => "roots",
            Command::Fusion => "fusion",
            Command::SMatrix => "smatrix",
            Command::Module => "module",
            Command::SugawaraVerify => "sugawara-verify",
            Command::Dirac => "dirac",
            Command::Index => "index",
            Command::Jlo => "jlo",
            Command::KkVerify => "kk-verify",
            Command::Report => "report",
        }
    }
}

fn require_a1(cfg: &RunConfig) -> Result<()> {
    if cfg.is_a1() {
        Ok(())
    } else {
        Err(Error::UnsupportedAlgebra(cfg.algebra.to_string()))
    }
}

pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let name = cmd.name();
    let mut body = Map::new();
    match cmd {
        Command::Roots => {
            body.insert("roots".into(), roots_stage(cfg.algebra)?);
            Ok(finish(name, cfg, body, Vec::new(), None))
        }
        Command::Fusion | Command::SMatrix => {
            let mut c = cfg.clone();
            c.emit_s |= cmd == Command::SMatrix;
            let st = fusion_stage(&c)?;
            body.insert("fusion".into(), st.value);
            let table = Table {
                header: vec!["i".into(), "j".into(), "k".into(), "N".into()],
                rows: st.ring.triples().iter().map(|t| vec![t.0.to_string(), t.1.to_string(), t.2.to_string(), t.3.to_string()]).collect(),
            };
            Ok(finish(name, &c, body, st.checks, Some(table)))
        }
        Command::Module => {
            require_a1(cfg)?;
            let m = build_module(cfg, cfg.highest_weight)?;
            let (v, checks) = module_summary(&m, cfg);
            let table = Table {
                header: vec!["energy".into(), "dim".into()],
                rows: graded_character(&m).iter().enumerate().map(|(e, d)| vec![e.to_string(), d.to_string()]).collect(),
            };
            body.insert("module".into(), v);
            Ok(finish(name, cfg, body, checks, Some(table)))
        }
        Command::SugawaraVerify | Command::Dirac => {
            require_a1(cfg)?;
            let st = sector_stage(cfg, cfg.highest_weight)?;
            let table = if cmd == Command::Dirac { Some(spectrum_table(&st.dirac_report)) } else { None };
            if cmd == Command::SugawaraVerify {
                for key in ["c", "gap_bound", "min_D2", "residuals"] {
                    body.insert(key.into(), st.value[key].clone());
                }
                body.insert("sector".into(), st.value);
            } else {
                body.insert("dirac".into(), serde_json::to_value(&st.dirac_report)?);
            }
            Ok(finish(name, cfg, body, st.checks, table))
        }
        Command::Index => {
            require_a1(cfg)?;
            let st = sector_stage(cfg, cfg.highest_weight)?;
            let js = sectors_j(cfg);
            let i = cfg.highest_weight;
            let row = index_row(&st, &js, cfg.vacuum_choice)?;
            let alt = index_row(&st, &js, alternative_choice(cfg))?;
            let want: Vec<i64> = js.iter().map(|&j| (i == j) as i64).collect();
            if let [single] = row.as_slice() {
                body.insert("index".into(), json!(single));
            }
            body.insert("i".into(), json!(i));
            body.insert("j".into(), json!(js));
            body.insert("indices".into(), json!(row));
            body.insert("indices_alternative_vacuum".into(), json!(alt));
            let checks = vec![
                exact(format!("index ({i}, {js:?}) = delta"), row, want.clone()),
                exact(format!("index ({i}, {js:?}) = delta, alternative Ramond vacuum"), alt, want),
            ];
            Ok(finish(name, cfg, body, checks, None))
        }
        Command::Jlo => {
            require_a1(cfg)?;
            let st = sector_stage(cfg, cfg.highest_weight)?;
            let js = sectors_j(cfg);
            let rows = jlo_rows(&st, &js, cfg)?;
            let i = cfg.highest_weight;
            if let [(_, r)] = rows.as_slice() {
                body.insert("value_re".into(), json!(r.value_re));
                body.insert("value_im".into(), json!(r.value_im));
                body.insert("last_term".into(), json!(r.last_term));
                body.insert("converged".into(), json!(r.converged));
            }
            body.insert("pairings".into(), json!(jlo_json(i, &rows)));
            let checks = jlo_checks(i, &rows, cfg.tol_jlo);
            Ok(finish(name, cfg, body, checks, None))
        }
        Command::KkVerify => {
            let st = fusion_stage(cfg)?;
            let rep = verify_pairing2_with(&st.ring, cfg.kk_samples, cfg.kk_seed);
            let checks = rep.checks.iter().map(|c| exact(format!("kk: {}", c.name), c.failures, 0)).collect();
            body.insert("kk".into(), serde_json::to_value(&rep)?);
            Ok(finish(name, cfg, body, checks, None))
        }
        Command::Report => run_report(cfg),
    }
}

fn spectrum_table(rep: &DiracReport) -> Table {
    let mut rows = Vec::new();
    for b in &rep.blocks {
        let mut push = |ev: f64, mult: usize| {
            rows.push(vec![
                b.energy.to_string(),
                b.dim.to_string(),
                b.even_dim.to_string(),
                b.method.to_string(),
                format!("{ev:?}"),
                mult.to_string(),
            ])
        };
        match &b.eigenvalues {
            Some(ev) => {
                let mut k = 0;
                while k < ev.len() {
                    let mut m = 1;
                    while k + m < ev.len() && (ev[k + m] - ev[k]).abs() < 1e-9 {
                        m += 1;
                    }
                    push(ev[k], m);
                    k += m;
                }
            }
            None => {
                let expected = crate::exact::q_from_string(&b.expected_d2).map(|q| crate::exact::q_to_f64(&q)).unwrap_or(f64::NAN);
                push(-expected.sqrt(), b.odd_dim);
                push(expected.sqrt(), b.even_dim);
            }
        }
    }
    Table {
        header: ["energy", "block_dim", "even_dim", "method", "eigenvalue", "multiplicity"].iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

/// Full pipeline: fusion ring, modules, super-Sugawara checks, Dirac spectra, index matrix,
/// JLO pairings and KK identities.
pub fn run_report(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let mut stages = Map::new();
    stages.insert("roots".into(), roots_stage(cfg.algebra)?);
    let fusion = fusion_stage(cfg)?;
    stages.insert("fusion".into(), fusion.value.clone());
    checks.extend(fusion.checks.iter().cloned());
    let mut summary = Map::new();
    let mut index_matrix: Option<IntMatrix> = None;

    if cfg.is_a1() {
        let sectors: Vec<u32> = (0..=cfg.level).collect();
        let mut modules = Vec::new();
        for &mu in &sectors {
            let m = build_module(cfg, mu)?;
            let (v, c) = module_summary(&m, cfg);
            modules.push(v);
            checks.extend(c);
        }
        stages.insert("modules".into(), json!(modules));

        let mut sector_values = Vec::new();
        let mut idx = Vec::new();
        let mut idx_alt = Vec::new();
        let mut jlo = Vec::new();
        for &i in &sectors {
            let st = sector_stage(cfg, i)?;
            checks.extend(st.checks.iter().cloned());
            sector_values.push(st.value.clone());
            idx.push(index_row(&st, &sectors, cfg.vacuum_choice)?);
            idx_alt.push(index_row(&st, &sectors, alternative_choice(cfg))?);
            let rows = jlo_rows(&st, &sectors, cfg)?;
            checks.extend(jlo_checks(i, &rows, cfg.tol_jlo));
            jlo.extend(jlo_json(i, &rows));
            if i == 0 {
                summary.insert("c".into(), st.value["c"].clone());
                summary.insert("gap_bound".into(), st.value["gap_bound"].clone());
            }
        }
        let n = sectors.len();
        let id = crate::kk::identity(n);
        checks.push(exact("index matrix = identity", idx.clone(), id.clone()));
        checks.push(exact("index matrix = identity, alternative Ramond vacuum", idx_alt.clone(), id));
        summary.insert("index_matrix".into(), json!(idx));
        stages.insert("sectors".into(), json!(sector_values));
        stages.insert("index".into(), json!({"matrix": idx, "alternative_vacuum": idx_alt}));
        stages.insert("jlo".into(), json!({"order": cfg.jlo_order, "scale": cfg.jlo_scale, "pairings": jlo}));
        index_matrix = Some(idx);
    } else {
        stages.insert(
            "modules".into(),
            json!({"skipped": format!("affine modules are implemented for A1 only, not {}", cfg.algebra)}),
        );
    }

    let kk = verify_pairing2_with(&fusion.ring, cfg.kk_samples, cfg.kk_seed);
    for c in &kk.checks {
        checks.push(exact(format!("kk: {}", c.name), c.failures, 0));
    }
    let mut kk_value = serde_json::to_value(&kk)?;
    if let Some(idx) = &index_matrix {
        // index matrix is [i][j]; the K-pairing matrix is [p_j] x eps_i indexed [i][j].
        let pairing = k_pairing_matrix(fusion.ring.n);
        kk_value["k_pairing_matrix"] = json!(pairing);
        checks.push(exact("index matrix = K-theory pairing", idx.clone(), pairing));
    }
    stages.insert("kk".into(), kk_value);

    let mut body = Map::new();
    body.insert("summary".into(), Value::Object(summary));
    body.insert("stages".into(), Value::Object(stages));
    Ok(finish("report", cfg, body, checks, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("algebra", "A2").unwrap();
        cfg.set("level", "3").unwrap();
        cfg.set("jlo_scale", "1.5").unwrap();
        cfg.set("tol_relation", "2.5e-10").unwrap();
        cfg.set("cache_dir", "/tmp/x y").unwrap();
        cfg.set("threads", "3").unwrap();
        cfg.set("j", "1").unwrap();
        cfg.set("format", "md").unwrap();
        cfg.set("precision", "high").unwrap();
        let text = cfg.to_config_string();
        assert_eq!(RunConfig::from_config_str(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_config_str(&RunConfig::default().to_config_string()).unwrap(), RunConfig::default());
    }

    #[test]
    fn config_errors() {
        assert!(RunConfig::from_config_str("level 3").is_err());
        assert!(RunConfig::from_config_str("colour = red").is_err());
        let e = RunConfig::from_config_str("# comment\nlevel = 0 # trailing\n").unwrap().validate().unwrap_err();
        assert!(e.to_string().contains("level must be ≥ 1"));
        assert_eq!(exit_code_for(&e), 2);
        let cfg = RunConfig { jlo_order: 3, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { mode_range: 5, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(&Error::WeylBoundExceeded { bound: 1 }), 3);
        assert_eq!(exit_code_for(&Error::DimensionGuard { what: "x".into(), needed: 2, limit: 1 }), 3);
        assert_eq!(exit_code_for(&Error::Verification("x".into())), 1);
        assert_eq!(exit_code_for(&Error::UnsupportedAlgebra("B2".into())), 2);
    }

    #[test]
    fn small_commands() {
        let cfg = RunConfig { level: 2, cutoff: 2, mode_range: 1, ..RunConfig::default() };
        let r = run_command(Command::Fusion, &cfg).unwrap();
        assert!(r.passed());
        assert_eq!(r.document["format_version"], json!(FORMAT_VERSION));
        assert!(r.render(OutputFormat::Csv).starts_with("i,j,k,N\n"));
        let m = run_command(Command::Module, &cfg).unwrap();
        assert!(m.passed());
        assert_eq!(m.document["module"]["graded_dims"], json!([1, 3, 9]));
        let roots = run_command(Command::Roots, &RunConfig { algebra: "G2".parse().unwrap(), ..cfg.clone() }).unwrap();
        assert_eq!(roots.document["roots"]["h_dual"], json!(4));
        let b2 = RunConfig { algebra: "B2".parse().unwrap(), ..cfg.clone() };
        assert_eq!(exit_code_for(&run_command(Command::Module, &b2).unwrap_err()), 2);
        let md = r.render(OutputFormat::Md);
        assert!(md.contains("| check |"));
    }

    #[test]
    fn small_index_and_report() {
        let cfg = RunConfig { level: 1, cutoff: 1, mode_range: 0, ..RunConfig::default() };
        let idx = run_command(Command::Index, &RunConfig { sector_j: Some(0), ..cfg.clone() }).unwrap();
        assert_eq!(idx.document["index"], json!(1));
        let rep = run_report(&cfg).unwrap();
        assert!(rep.passed(), "{:?}", rep.failed_checks());
        assert_eq!(rep.document["summary"]["c"], json!("5"));
        assert_eq!(rep.document["summary"]["gap_bound"], json!("1/6"));
        assert_eq!(rep.document["summary"]["index_matrix"], json!([[1, 0], [0, 1]]));
        let again = run_report(&cfg).unwrap();
        assert_eq!(rep.render(OutputFormat::Json), again.render(OutputFormat::Json));
    }
}
