//! Configuration-driven sweeps: one filter run per (N, initial state, order),
//! tab-separated result tables, power-law fits and truncation profiles.
//!
//! A run directory holds one table per run, optional exact and thermal
//! reference tables, stored recurrence vectors, `runs.tsv` with the status of
//! every run, `stored.tsv` indexing the stored vectors, and `manifest.txt`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{log_schedule, sigma_for_order, FilterConfig, FilterRun, JacksonForm, Probes};
use crate::error::{Error, Result};
use crate::io::{load_mps, save_mps};
use crate::model::{
    product_state, scaled_commutator_mpo, vectorized_density, InitialState, SpinChainModel, DEFAULT_G, DEFAULT_H,
    DEFAULT_J,
};
use crate::mps::{compress, inner, MpsVector};
use crate::observables::ObservableSpec;
use crate::oracle::{
    chebyshev_kernel, diagonalize, osee_exact, product_vector, thermal_reference_from, EigenbasisState, DENSE_LIMIT,
};

/// Environment variable consulted for the worker count when no flag is given.
pub const WORKERS_ENV: &str = "DIAGENS_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub j: f64,
    pub g: f64,
    pub h: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            j: DEFAULT_J,
            g: DEFAULT_G,
            h: DEFAULT_H,
        }
    }
}

/// Series order as a function of the chain length, rounded up to even.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderRule {
    #[serde(rename = "5sqrt-n")]
    FiveSqrtN,
    #[serde(rename = "n")]
    Linear,
    #[serde(rename = "n-log-n")]
    NLogN,
    #[serde(rename = "n2")]
    Quadratic,
}

impl OrderRule {
    pub const ALL: [OrderRule; 4] = [Self::FiveSqrtN, Self::Linear, Self::NLogN, Self::Quadratic];

    pub fn label(self) -> &'static str {
        match self {
            Self::FiveSqrtN => "5sqrt-n",
            Self::Linear => "n",
            Self::NLogN => "n-log-n",
            Self::Quadratic => "n2",
        }
    }

    /// `ceil(5 sqrt N)`, `N`, `ceil(N log2 N)` or `N^2`, then the next even number.
    pub fn order(self, n: usize) -> usize {
        let x = n as f64;
        let raw = match self {
            Self::FiveSqrtN => (5.0 * x.sqrt()).ceil() as usize,
            Self::Linear => n,
            Self::NLogN => (x * x.log2()).ceil() as usize,
            Self::Quadratic => n * n,
        };
        raw + raw % 2
    }
}

/// Which orders of a run are measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Checkpoints {
    /// `"log"` (16, 24, 32, 48, ... and the final order) or `"final"`.
    Schedule(String),
    Orders(Vec<usize>),
}

impl Checkpoints {
    pub fn resolve(&self, order: usize) -> Result<Vec<usize>> {
        match self {
            Self::Schedule(s) if s == "log" => Ok(log_schedule(order)),
            Self::Schedule(s) if s == "final" => Ok(vec![order]),
            Self::Schedule(s) => Err(Error::Config(format!("unknown checkpoint schedule {s:?}"))),
            Self::Orders(v) => Ok(v.iter().copied().filter(|&m| m <= order).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub order: usize,
    /// When non-empty, one run per rule replaces the fixed `order`.
    pub order_rules: Vec<OrderRule>,
    pub max_bond: usize,
    pub rel_tol: f64,
    pub checkpoints: Checkpoints,
    pub abort_threshold: f64,
    /// `"standard"` or `"printed"`.
    pub jackson: String,
    pub store_degrees: Vec<usize>,
    pub exact_bond_limit: usize,
    pub max_half_sweeps: usize,
    pub delta: bool,
    pub osee: bool,
}

impl Default for FilterSection {
    fn default() -> Self {
        let base = FilterConfig::new(64, 128);
        Self {
            order: base.order,
            order_rules: Vec::new(),
            max_bond: base.max_bond,
            rel_tol: base.rel_tol,
            checkpoints: Checkpoints::Schedule("log".into()),
            abort_threshold: base.abort_threshold,
            jackson: "standard".into(),
            store_degrees: Vec::new(),
            exact_bond_limit: base.exact_bond_limit,
            max_half_sweeps: base.max_half_sweeps,
            delta: true,
            osee: true,
        }
    }
}

impl FilterSection {
    pub fn jackson_form(&self) -> Result<JacksonForm> {
        match self.jackson.as_str() {
            "standard" => Ok(JacksonForm::Standard),
            "printed" => Ok(JacksonForm::Printed),
            other => Err(Error::Config(format!("unknown Jackson form {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    /// Matrix-product-state filter runs.
    #[default]
    Filter,
    /// Dense filtering in the energy eigenbasis (`N <= 14`).
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: RunKind,
    pub model: ModelSection,
    pub sizes: Vec<usize>,
    pub initial_states: Vec<String>,
    pub filter: FilterSection,
    pub observables: Vec<String>,
    /// Dense reference tables next to filter runs with `N <= 14`.
    pub oracle: bool,
    /// Thermal reference at the initial state's energy (`N <= 14`).
    pub thermal: bool,
    pub output_dir: PathBuf,
    /// Recorded for provenance; every run is deterministic.
    pub seed: u64,
    /// Free text copied into the manifest.
    pub note: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            kind: RunKind::Filter,
            model: ModelSection::default(),
            sizes: vec![8],
            initial_states: vec!["X+".into()],
            filter: FilterSection::default(),
            observables: vec!["sx".into(), "sz".into()],
            oracle: false,
            thermal: false,
            output_dir: PathBuf::from("runs/experiment"),
            seed: 0,
            note: String::new(),
        }
    }
}

/// One unit of work: a chain length, an initial state and a series order.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub n: usize,
    pub state: InitialState,
    pub order: usize,
    pub rule: Option<OrderRule>,
}

impl RunSpec {
    /// File stem such as `N12_Xp_M64`.
    pub fn stem(&self) -> String {
        let slug = self.state.label().replace('+', "p").replace('-', "m");
        format!("N{}_{}_M{}", self.n, slug, self.order)
    }
}

impl ExperimentConfig {
    pub fn states(&self) -> Result<Vec<InitialState>> {
        self.initial_states.iter().map(|s| s.parse()).collect()
    }

    pub fn model_for(&self, n: usize) -> Result<SpinChainModel> {
        SpinChainModel::new(self.model.j, self.model.g, self.model.h, n)
    }

    pub fn observables_for(&self, n: usize) -> Result<Vec<ObservableSpec>> {
        self.observables.iter().map(|l| ObservableSpec::parse(l, n)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.sizes.is_empty() {
            return bad("at least one size is required");
        }
        if self.initial_states.is_empty() {
            return bad("at least one initial state is required");
        }
        if self.observables.is_empty() {
            return bad("at least one observable is required");
        }
        self.states()?;
        self.filter.jackson_form()?;
        let dense_needed = self.kind == RunKind::Exact || self.thermal;
        for &n in &self.sizes {
            self.model_for(n)?;
            self.observables_for(n)?;
            if dense_needed && n > DENSE_LIMIT {
                return Err(Error::SizeLimit { n, limit: DENSE_LIMIT });
            }
        }
        for spec in self.runs()? {
            self.filter_config(&spec)?.validate()?;
        }
        Ok(())
    }

    /// Every run in a fixed order: sizes, then states, then order rules.
    pub fn runs(&self) -> Result<Vec<RunSpec>> {
        let mut out = Vec::new();
        for &n in &self.sizes {
            for state in self.states()? {
                if self.filter.order_rules.is_empty() {
                    out.push(RunSpec {
                        n,
                        state,
                        order: self.filter.order,
                        rule: None,
                    });
                }
                for &rule in &self.filter.order_rules {
                    out.push(RunSpec {
                        n,
                        state,
                        order: rule.order(n),
                        rule: Some(rule),
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn filter_config(&self, spec: &RunSpec) -> Result<FilterConfig> {
        let f = &self.filter;
        let mut cfg = FilterConfig::new(spec.order, f.max_bond);
        cfg.rel_tol = f.rel_tol;
        cfg.checkpoint_orders = f.checkpoints.resolve(spec.order)?;
        cfg.abort_threshold = f.abort_threshold;
        cfg.jackson = f.jackson_form()?;
        cfg.store_degrees = f.store_degrees.iter().copied().filter(|&m| m <= spec.order).collect();
        cfg.exact_bond_limit = f.exact_bond_limit;
        cfg.max_half_sweeps = f.max_half_sweeps;
        cfg.probes = Probes {
            observables: self.observables_for(spec.n)?,
            delta: f.delta,
            osee: f.osee,
        };
        Ok(cfg)
    }
}

/// Parses a TOML config file, or `recipe:NAME`, then applies dotted
/// `key=value` overrides (values are TOML literals, bare words are strings).
pub fn load_config(source: &str, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = match source.strip_prefix("recipe:") {
        Some(name) => {
            let r = recipe(name)?;
            toml::Table::try_from(&r.config).map_err(|e| Error::Config(e.to_string()))?
        }
        None => fs::read_to_string(source)?
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("{source}: {e}")))?,
    };
    for (key, value) in overrides {
        apply_override(&mut table, key, value)?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Splits `--key=value` arguments.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    args.iter()
        .map(|a| {
            a.strip_prefix("--")
                .and_then(|kv| kv.split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Config(format!("expected --key=value, got {a:?}")))
        })
        .collect()
}

fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Config("empty key".into()))?;
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key}: {p} is not a section")))?;
    }
    cur.insert(last.to_string(), parsed);
    Ok(())
}

/// Worker count: the flag, else the environment, else available cores.
pub fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        return if w == 0 { Err(Error::Config("workers must be positive".into())) } else { Ok(w) };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(Error::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub spec: RunSpec,
    /// `None` on success, else the diagnostic.
    pub failure: Option<String>,
    pub files: Vec<String>,
    /// `(degree, file)` for stored recurrence vectors.
    pub stored: Vec<(usize, String)>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub outcomes: Vec<RunOutcome>,
}

impl RunSummary {
    pub fn failed(&self) -> impl Iterator<Item = &RunOutcome> {
        self.outcomes.iter().filter(|o| o.failure.is_some())
    }
}

/// Executes every run of `config` on a pool of `workers` threads and writes
/// the run directory. A run that fails is recorded, not propagated.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<RunSummary> {
    config.validate()?;
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let specs = config.runs()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let mut out = RunOutcome {
                    spec: spec.clone(),
                    failure: None,
                    files: Vec::new(),
                    stored: Vec::new(),
                };
                let res = match config.kind {
                    RunKind::Filter => filter_job(config, spec, &dir, &mut out),
                    RunKind::Exact => exact_job(config, spec, &dir, &mut out),
                };
                if let Err(e) = res {
                    out.failure = Some(e.to_string());
                }
                out
            })
            .collect()
    });
    let summary = RunSummary { dir, outcomes };
    write_status(config, &summary)?;
    write_manifest(config, &summary)?;
    Ok(summary)
}

/// Columns shared by every table row.
const KEY_COLUMNS: [&str; 6] = ["N", "state", "M", "max_bond", "rel_tol", "alpha"];

fn key_fields(spec: &RunSpec, max_bond: usize, rel_tol: f64, alpha: f64) -> Vec<String> {
    vec![
        spec.n.to_string(),
        spec.state.label().to_string(),
        spec.order.to_string(),
        max_bond.to_string(),
        num(rel_tol),
        num(alpha),
    ]
}

/// Fixed-precision formatting keeps reruns byte-identical.
fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.12e}")
    }
}

fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(|e| Error::Format(e.to_string()))?;
    w.write_record(header).map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn measurement_header(labels: &[String], reference: bool) -> Vec<String> {
    let mut h: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.extend(
        [
            "order",
            "sigma",
            "sigma_phys",
            "delta_sq",
            "delta_sq_phys",
            "inv_delta",
            "frobenius_sq",
            "trace_re",
            "trace_im",
            "osee",
            "max_bond_used",
            "discarded",
        ]
        .map(String::from),
    );
    for l in labels {
        h.push(l.clone());
        if reference {
            h.push(format!("{l}_diag"));
            h.push(format!("{l}_err"));
        }
    }
    if reference {
        h.push("osee_diag".into());
    }
    h
}

fn filter_job(config: &ExperimentConfig, spec: &RunSpec, dir: &Path, out: &mut RunOutcome) -> Result<()> {
    let model = config.model_for(spec.n)?;
    let cfg = config.filter_config(spec)?;
    let alpha = model.alpha();
    let h_c = scaled_commutator_mpo(&model);
    let rho0 = vectorized_density(&product_state(spec.state, spec.n)?)?;
    let labels = config.observables.clone();
    let stem = spec.stem();

    if config.oracle && spec.n <= DENSE_LIMIT {
        let file = format!("{stem}_exact.tsv");
        write_exact_table(config, spec, &cfg.checkpoint_orders, &dir.join(&file))?;
        out.files.push(file);
    }
    if config.thermal {
        let file = format!("{stem}_thermal.tsv");
        write_thermal_table(config, spec, &dir.join(&file))?;
        out.files.push(file);
    }

    let mut run = FilterRun::start(&rho0, alpha, &cfg)?;
    let result = run.finish(&h_c, &cfg);
    let rows: Vec<Vec<String>> = run
        .checkpoints
        .iter()
        .map(|c| {
            let mut r = key_fields(spec, cfg.max_bond, cfg.rel_tol, alpha);
            let (s, sp) = c.sigma.map_or((f64::NAN, f64::NAN), |w| (w.rescaled, w.physical));
            r.extend([
                c.order.to_string(),
                num(s),
                num(sp),
                num(c.delta_sq),
                num(c.delta_sq_physical),
                num(1.0 / c.delta_sq_physical.sqrt()),
                num(c.frobenius_sq),
                num(c.trace.re),
                num(c.trace.im),
                num(c.osee_half),
                c.max_bond_used.to_string(),
                num(c.cumulative_discarded_weight),
            ]);
            r.extend(labels.iter().map(|l| num(c.observables.get(l).copied().unwrap_or(f64::NAN))));
            r
        })
        .collect();
    let file = format!("{stem}.tsv");
    write_table(&dir.join(&file), &measurement_header(&labels, false), &rows)?;
    out.files.insert(0, file);
    for (m, v) in &run.stored {
        let file = format!("{stem}_T{m}.tnck");
        save_mps(v, &dir.join(&file))?;
        out.stored.push((*m, file));
    }
    result
}

fn exact_job(config: &ExperimentConfig, spec: &RunSpec, dir: &Path, out: &mut RunOutcome) -> Result<()> {
    let cfg = config.filter_config(spec)?;
    let file = format!("{}.tsv", spec.stem());
    write_exact_table(config, spec, &cfg.checkpoint_orders, &dir.join(&file))?;
    out.files.push(file);
    if config.thermal {
        let file = format!("{}_thermal.tsv", spec.stem());
        write_thermal_table(config, spec, &dir.join(&file))?;
        out.files.push(file);
    }
    Ok(())
}

/// Exact order-`M'` filter moments for each order, with diagonal-ensemble
/// values alongside.
fn write_exact_table(config: &ExperimentConfig, spec: &RunSpec, orders: &[usize], path: &Path) -> Result<()> {
    let model = config.model_for(spec.n)?;
    let alpha = model.alpha();
    let form = config.filter.jackson_form()?;
    let eig = diagonalize(&model)?;
    let psi0 = product_vector(spec.state, spec.n)?;
    let obs = config.observables_for(spec.n)?;
    let state = EigenbasisState::new(&eig, &psi0, &obs)?;
    let diag = state.diagonal_expectations();
    let cut = spec.n / 2;
    let osee = config.filter.osee;
    let osee_diag = if osee {
        osee_exact(&state.density(|x| if x == 0.0 { 1.0 } else { 0.0 }), cut)?
    } else {
        f64::NAN
    };
    let mut rows = Vec::new();
    for &m in orders {
        let kernel = chebyshev_kernel(m, alpha, form)?;
        let mom = state.filtered(&kernel)?;
        let (s, sp) = sigma_for_order(m, alpha).map_or((f64::NAN, f64::NAN), |w| (w.rescaled, w.physical));
        let entropy = if osee { osee_exact(&state.density(&kernel), cut)? } else { f64::NAN };
        let mut r = key_fields(spec, 0, 0.0, alpha);
        r.extend([
            m.to_string(),
            num(s),
            num(sp),
            num(mom.delta_sq * alpha * alpha),
            num(mom.delta_sq),
            num(1.0 / mom.delta_sq.sqrt()),
            num(mom.frobenius_sq),
            num(mom.trace),
            num(0.0),
            num(entropy),
            "0".into(),
            num(0.0),
        ]);
        for l in &config.observables {
            let v = mom.observables[l];
            r.extend([num(v), num(diag[l]), num((v - diag[l]).abs())]);
        }
        r.push(num(osee_diag));
        rows.push(r);
    }
    write_table(path, &measurement_header(&config.observables, true), &rows)
}

fn write_thermal_table(config: &ExperimentConfig, spec: &RunSpec, path: &Path) -> Result<()> {
    let model = config.model_for(spec.n)?;
    let eig = diagonalize(&model)?;
    let psi0 = product_vector(spec.state, spec.n)?;
    let obs = config.observables_for(spec.n)?;
    let energy = EigenbasisState::new(&eig, &psi0, &obs)?.energy();
    let th = thermal_reference_from(&eig, energy, &obs)?;
    let mut header: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(["energy".to_string(), "beta".to_string()]);
    header.extend(config.observables.iter().cloned());
    let mut row = key_fields(spec, config.filter.max_bond, config.filter.rel_tol, model.alpha());
    row.extend([num(th.energy), num(th.beta)]);
    row.extend(config.observables.iter().map(|l| num(th.observables[l])));
    write_table(path, &header, &[row])
}

fn write_status(config: &ExperimentConfig, summary: &RunSummary) -> Result<()> {
    let mut header: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(["rule", "status", "detail"].map(String::from));
    let mut rows = Vec::new();
    let mut stored_rows = Vec::new();
    for o in &summary.outcomes {
        let alpha = config.model_for(o.spec.n)?.alpha();
        let mut r = key_fields(&o.spec, config.filter.max_bond, config.filter.rel_tol, alpha);
        r.push(o.spec.rule.map_or("-", |x| x.label()).to_string());
        r.push(if o.failure.is_some() { "failed" } else { "ok" }.to_string());
        r.push(o.failure.clone().unwrap_or_default());
        rows.push(r);
        for (m, file) in &o.stored {
            let mut s = key_fields(&o.spec, config.filter.max_bond, config.filter.rel_tol, alpha);
            s.extend([m.to_string(), file.clone()]);
            stored_rows.push(s);
        }
    }
    write_table(&summary.dir.join("runs.tsv"), &header, &rows)?;
    let mut sh: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    sh.extend(["degree", "file"].map(String::from));
    write_table(&summary.dir.join("stored.tsv"), &sh, &stored_rows)
}

fn write_manifest(config: &ExperimentConfig, summary: &RunSummary) -> Result<()> {
    let mut lines = vec![
        format!("name = {}", config.name),
        format!("version = {}", env!("CARGO_PKG_VERSION")),
        format!("kind = {:?}", config.kind).to_lowercase(),
        format!("model.j = {}", num(config.model.j)),
        format!("model.g = {}", num(config.model.g)),
        format!("model.h = {}", num(config.model.h)),
        format!("sizes = {:?}", config.sizes),
        format!("initial_states = {}", config.initial_states.join(",")),
        format!("observables = {}", config.observables.join(",")),
        format!("filter.order = {}", config.filter.order),
        format!(
            "filter.order_rules = {}",
            config.filter.order_rules.iter().map(|r| r.label()).collect::<Vec<_>>().join(",")
        ),
        format!("filter.max_bond = {}", config.filter.max_bond),
        format!("filter.rel_tol = {}", num(config.filter.rel_tol)),
        format!("filter.checkpoints = {:?}", config.filter.checkpoints),
        format!("filter.abort_threshold = {}", num(config.filter.abort_threshold)),
        format!("filter.jackson = {}", config.filter.jackson),
        format!("filter.store_degrees = {:?}", config.filter.store_degrees),
        format!("oracle = {}", config.oracle),
        format!("thermal = {}", config.thermal),
        format!("seed = {}", config.seed),
        format!("runs = {}", summary.outcomes.len()),
        format!("failed = {}", summary.failed().count()),
    ];
    if !config.note.is_empty() {
        lines.push(format!("note = {}", config.note));
    }
    for o in &summary.outcomes {
        lines.push(format!("table.{} = {}", o.spec.stem(), o.files.join(",")));
    }
    fs::write(summary.dir.join("manifest.txt"), lines.join("\n") + "\n")?;
    Ok(())
}

/// A tab-separated table with a header line.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .from_path(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let header = r
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("no column {name:?}")))?;
        self.rows
            .iter()
            .map(|r| {
                r[k].parse::<f64>()
                    .map_err(|_| Error::Format(format!("column {name:?}: {:?} is not a number", r[k])))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Smallest and largest abscissa used.
    pub range: (f64, f64),
    pub points: usize,
}

/// Least-squares fit of `ln y = intercept + slope ln x` over the points with
/// `x` inside `range` (inclusive; all points when `None`).
pub fn fit_power_law(xs: &[f64], ys: &[f64], range: Option<(f64, f64)>) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::Fit(format!("{} abscissae for {} ordinates", xs.len(), ys.len())));
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, _)| range.is_none_or(|(a, b)| **x >= a && **x <= b))
        .map(|(&x, &y)| (x, y))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points in range, got {}", pts.len())));
    }
    if let Some(&(x, y)) = pts.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::Fit(format!("non-positive point ({x}, {y})")));
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let k = pts.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    let range = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        range,
        points: pts.len(),
    })
}

/// `1 - |<v|c>|^2 / (|v|^2 |c|^2)` for `c` the SVD compression of `v` to `bond`.
pub fn overlap_deficit(v: &MpsVector, bond: usize) -> Result<f64> {
    let (c, _) = compress(v, bond, 0.0)?;
    let (nv, nc) = (v.norm_sqr(), c.norm_sqr());
    if nv == 0.0 || nc == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - inner(v, &c)?.norm_sqr() / (nv * nc)).max(0.0))
}

/// Smallest bond whose compression keeps the overlap deficit within `tol`,
/// by bisection over `[1, max bond of v]`.
pub fn required_bond(v: &MpsVector, tol: f64) -> Result<usize> {
    let (mut lo, mut hi) = (1usize, v.max_bond().max(1));
    if overlap_deficit(v, lo)? <= tol {
        return Ok(lo);
    }
    // invariant: deficit(lo) > tol, and hi is accepted
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if overlap_deficit(v, mid)? <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileRow {
    pub degree: usize,
    pub tolerance: f64,
    pub required_bond: usize,
}

/// Required bond per stored degree and tolerance, degrees ascending.
pub fn truncation_profile(vectors: &[(usize, MpsVector)], tols: &[f64]) -> Result<Vec<ProfileRow>> {
    let mut sorted: Vec<&(usize, MpsVector)> = vectors.iter().collect();
    sorted.sort_by_key(|p| p.0);
    let mut out = Vec::new();
    for (degree, v) in sorted {
        for &tolerance in tols {
            out.push(ProfileRow {
                degree: *degree,
                tolerance,
                required_bond: required_bond(v, tolerance)?,
            });
        }
    }
    Ok(out)
}

/// Profiles every vector listed in `stored.tsv` of a run directory and
/// writes `profile.tsv` there.
pub fn profile_run_dir(dir: &Path, tols: &[f64]) -> Result<Table> {
    let index = Table::read(&dir.join("stored.tsv"))?;
    let col = |name: &str| index.header.iter().position(|h| h == name).ok_or_else(|| Error::Format(format!("stored.tsv lacks {name}")));
    let (file_k, degree_k) = (col("file")?, col("degree")?);
    let mut groups: BTreeMap<Vec<String>, Vec<(usize, MpsVector)>> = BTreeMap::new();
    for r in &index.rows {
        let degree: usize = r[degree_k]
            .parse()
            .map_err(|_| Error::Format(format!("bad degree {:?}", r[degree_k])))?;
        let v = load_mps(&dir.join(&r[file_k]))?;
        groups.entry(r[..KEY_COLUMNS.len()].to_vec()).or_default().push((degree, v));
    }
    let mut header: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(["degree", "tolerance", "required_bond", "stored_bond"].map(String::from));
    let mut rows = Vec::new();
    for (key, vecs) in &groups {
        let bonds: BTreeMap<usize, usize> = vecs.iter().map(|(m, v)| (*m, v.max_bond())).collect();
        for p in truncation_profile(vecs, tols)? {
            let mut r = key.clone();
            r.extend([
                p.degree.to_string(),
                num(p.tolerance),
                p.required_bond.to_string(),
                bonds[&p.degree].to_string(),
            ]);
            rows.push(r);
        }
    }
    write_table(&dir.join("profile.tsv"), &header, &rows)?;
    Ok(Table { header, rows })
}

/// A named preset reproducing one figure at desk scale.
#[derive(Clone, Debug)]
pub struct Recipe {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

fn preset(name: &str, f: impl FnOnce(&mut ExperimentConfig)) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        name: name.into(),
        output_dir: PathBuf::from(format!("runs/{}", name.replace('/', "-"))),
        ..ExperimentConfig::default()
    };
    f(&mut c);
    c
}

/// Every preset, in figure order.
pub fn figure_recipes() -> Vec<Recipe> {
    vec![
        Recipe {
            name: "fig1-variance-scaling",
            description: "delta^2 against M for N = 20, |X+>, bond 256, M up to 256",
            config: preset("fig1-variance-scaling", |c| {
                c.sizes = vec![20];
                c.filter.order = 256;
                c.filter.max_bond = 256;
                c.filter.osee = false;
            }),
        },
        Recipe {
            name: "fig2-norm-vs-width",
            description: "<rho_M|rho_M> against M for N = 12, 16, 20 at bond 256",
            config: preset("fig2-norm-vs-width", |c| {
                c.sizes = vec![12, 16, 20];
                c.filter.order = 256;
                c.filter.max_bond = 256;
                c.filter.osee = false;
            }),
        },
        Recipe {
            name: "fig3/5-error-small-N",
            description: "exact filtering, N = 12, |X+> and |Z+>: observable error against 1/delta",
            config: preset("fig3/5-error-small-N", |c| {
                c.kind = RunKind::Exact;
                c.sizes = vec![12];
                c.initial_states = vec!["X+".into(), "Z+".into()];
                c.filter.order = 400;
                c.filter.osee = false;
            }),
        },
        Recipe {
            name: "fig4/6-error-large-N",
            description: "reduced-size analogue: filter runs with thermal references, N <= 14, |X+> and |Z+>",
            config: preset("fig4/6-error-large-N", |c| {
                c.sizes = vec![10, 12, 14];
                c.initial_states = vec!["X+".into(), "Z+".into()];
                c.filter.order = 128;
                c.filter.max_bond = 128;
                c.filter.osee = false;
                c.thermal = true;
                c.note = "reduced-size analogue (N <= 14, exact thermal reference); both |X+> and |Z+> are run \
                          since the initial state of the second panel set is ambiguous"
                    .into();
            }),
        },
        Recipe {
            name: "fig7-osee-scaling",
            description: "half-chain OSEE for M = 5 sqrt N, N, N log2 N, N^2 at N = 12..24",
            config: preset("fig7-osee-scaling", |c| {
                c.sizes = vec![12, 16, 20, 24];
                c.filter.order_rules = OrderRule::ALL.to_vec();
                c.filter.max_bond = 128;
                c.filter.checkpoints = Checkpoints::Schedule("final".into());
                c.filter.delta = true;
            }),
        },
        Recipe {
            name: "fig8-osee-peak",
            description: "exact OSEE against 1/delta for N = 8, 10, 12, |X+>",
            config: preset("fig8-osee-peak", |c| {
                c.kind = RunKind::Exact;
                c.sizes = vec![8, 10, 12];
                c.filter.order = 400;
                c.filter.checkpoints = Checkpoints::Orders(vec![2, 4, 8, 16, 24, 32, 48, 64, 96, 128, 192, 256, 320, 400]);
            }),
        },
        Recipe {
            name: "fig9-truncation-profile",
            description: "stored T_m for m = 2..64 at N = 12, |X+>, bond 512, for `profile`",
            config: preset("fig9-truncation-profile", |c| {
                c.sizes = vec![12];
                c.filter.order = 64;
                c.filter.max_bond = 512;
                c.filter.rel_tol = 1e-12;
                c.filter.exact_bond_limit = 512;
                c.filter.checkpoints = Checkpoints::Schedule("final".into());
                c.filter.store_degrees = (1..=32).map(|k| 2 * k).collect();
            }),
        },
    ]
}

pub fn recipe(name: &str) -> Result<Recipe> {
    figure_recipes()
        .into_iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::Config(format!("unknown recipe {name:?}")))
}
