//! End-to-end runs: ingest, split, model space, Rashomon set, permutation
//! importance and order discrepancy for every (setup, course) pair, with
//! every artifact written to one run directory.
//!
//! Run directory layout:
//!
//! ```text
//! config.resolved.json
//! datasets.csv
//! spaces/<setup>_<course>/{registry.csv, fingerprint.txt, models/<id>.json}
//! rashomon_summary.csv
//! pvi_long.csv   pvi_summary.csv
//! viod.csv       tau_long.csv
//! run_summary.json
//! FAILED          (only after a failed run)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{validate_value, DataSource, RunConfig};
use crate::dataset::{self, one_hot_encode, stratified_split, TabularDataset, TargetMode};
use crate::discrepancy::{tau_distribution, viod, ViodReport};
use crate::ensembles::Family;
use crate::error::{Error, Result};
use crate::importance::{pvi_over_set, summarize, PviConfig, PviRecord, PviReport};
use crate::rashomon::{extract_from, summary_from, RashomonSet, RashomonSummary};
use crate::search::{build_model_space, ModelSpace, ParamSpace};
use crate::seed;

pub const CONFIG_FILE: &str = "config.resolved.json";
pub const DATASETS_FILE: &str = "datasets.csv";
pub const SPACES_DIR: &str = "spaces";
pub const RASHOMON_FILE: &str = "rashomon_summary.csv";
pub const PVI_LONG_FILE: &str = "pvi_long.csv";
pub const PVI_SUMMARY_FILE: &str = "pvi_summary.csv";
pub const VIOD_FILE: &str = "viod.csv";
pub const TAU_FILE: &str = "tau_long.csv";
pub const SUMMARY_FILE: &str = "run_summary.json";
pub const FAILED_FILE: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Space,
    Rashomon,
    Pvi,
    Viod,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Space => "space",
            Stage::Rashomon => "rashomon",
            Stage::Pvi => "pvi",
            Stage::Viod => "viod",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads for model fitting and importance; never changes outputs.
    pub workers: usize,
    /// Last stage to run.
    pub until: Stage,
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            until: Stage::Viod,
            progress: false,
        }
    }
}

/// Everything computed for one (setup, course) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SetupOutcome {
    pub setup: TargetMode,
    pub course: String,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub class_counts: Vec<(String, usize)>,
    pub families: Vec<Family>,
    pub accuracies: Vec<f64>,
    pub set: Option<RashomonSet>,
    pub summary: Option<RashomonSummary>,
    pub pvi: Option<PviReport>,
    /// `None` at the viod stage means the set was a singleton.
    pub viod: Option<ViodReport>,
    pub taus: Vec<(usize, f64)>,
    pub reused_space: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub stage: Stage,
    pub setups: Vec<SetupOutcome>,
}

/// The headline numbers of one setup as written to `run_summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setup: TargetMode,
    pub course: String,
    pub n_rows: usize,
    pub space_size: Option<usize>,
    pub reference_id: Option<usize>,
    pub reference_accuracy: Option<f64>,
    pub space_mean: Option<f64>,
    pub space_sd: Option<f64>,
    pub set_mean: Option<f64>,
    pub set_sd: Option<f64>,
    pub set_size: Option<usize>,
    pub viod_min: Option<f64>,
    pub viod_max: Option<f64>,
    pub viod_reported: Option<f64>,
    pub mean_tau: Option<f64>,
}

impl SetupOutcome {
    pub fn summary_row(&self) -> SummaryRow {
        let s = self.summary.as_ref();
        SummaryRow {
            setup: self.setup,
            course: self.course.clone(),
            n_rows: self.n_rows,
            space_size: s.map(|s| s.space_size),
            reference_id: s.map(|s| s.reference_id),
            reference_accuracy: s.map(|s| s.reference_accuracy),
            space_mean: s.map(|s| s.space_mean),
            space_sd: s.map(|s| s.space_sd),
            set_mean: s.map(|s| s.set_mean),
            set_sd: s.map(|s| s.set_sd),
            set_size: s.map(|s| s.set_size),
            viod_min: self.viod.as_ref().map(|v| v.viod_min),
            viod_max: self.viod.as_ref().map(|v| v.viod_max),
            viod_reported: self.viod.as_ref().map(ViodReport::reported),
            mean_tau: self.mean_tau(),
        }
    }

    pub fn mean_tau(&self) -> Option<f64> {
        if self.taus.is_empty() {
            None
        } else {
            Some(self.taus.iter().map(|t| t.1).sum::<f64>() / self.taus.len() as f64)
        }
    }

    fn family_of(&self, id: usize) -> &'static str {
        self.families.get(id).map_or("", |f| f.as_str())
    }
}

fn space_dir(out: &Path, setup: TargetMode, course: &str) -> PathBuf {
    out.join(SPACES_DIR).join(format!("{setup}_{course}"))
}

/// Base (three-class) dataset for a course tag.
pub fn load_source(data: &DataSource, course: &str) -> Result<TabularDataset> {
    match data {
        DataSource::Oulad { dir, .. } => dataset::load_oulad(dir, course, TargetMode::Multiclass),
        DataSource::Synthetic { n_rows, seed, variables } => dataset::synth_generate(
            *n_rows,
            &dataset::PlantedSpec {
                variables: variables.clone(),
            },
            *seed,
        ),
    }
}

fn for_mode(base: &TabularDataset, mode: TargetMode) -> TabularDataset {
    match mode {
        TargetMode::Binary => dataset::make_binary(base),
        TargetMode::Multiclass => base.clone(),
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn space_fingerprint(config: &RunConfig, data: &TabularDataset, setup: TargetMode, course: &str) -> Result<String> {
    let doc = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "setup": setup,
        "course": course,
        "split_ratio": config.split_ratio,
        "master_seed": config.master_seed,
        "search": config.search,
        "param_space": ParamSpace::default(),
        "data": serde_json::to_value(data)?,
    });
    Ok(hex(&Sha256::digest(serde_json::to_vec(&doc)?)))
}

fn run_setup(
    config: &RunConfig,
    base: &TabularDataset,
    setup: TargetMode,
    course: &str,
    opts: &RunOptions,
    out: &Path,
) -> Result<SetupOutcome> {
    let ctx = format!("{setup}/{course}");
    let data = for_mode(base, setup);
    let split_seed = seed::derive(config.master_seed, &[seed::tag("split"), seed::tag(course)]);
    let split = stratified_split(&data, config.split_ratio, split_seed).map_err(|e| e.in_stage("ingest", &ctx))?;
    let mut outcome = SetupOutcome {
        setup,
        course: course.to_string(),
        n_rows: data.len(),
        n_train: split.train.len(),
        n_valid: split.valid.len(),
        class_counts: data
            .target_levels()
            .iter()
            .cloned()
            .zip(data.class_counts())
            .collect(),
        families: Vec::new(),
        accuracies: Vec::new(),
        set: None,
        summary: None,
        pvi: None,
        viod: None,
        taus: Vec::new(),
        reused_space: false,
    };
    if opts.until < Stage::Space {
        return Ok(outcome);
    }

    let dir = space_dir(out, setup, course);
    let fingerprint = space_fingerprint(config, &data, setup, course).map_err(|e| e.in_stage("space", &ctx))?;
    let space_seed = seed::derive(
        config.master_seed,
        &[seed::tag("space"), seed::tag(course), seed::tag(setup.as_str())],
    );
    let cached = (ModelSpace::stored_fingerprint(&dir).as_deref() == Some(fingerprint.as_str()))
        .then(|| ModelSpace::load(&dir).ok())
        .flatten();
    let space = match cached {
        Some(space) => {
            outcome.reused_space = true;
            space
        }
        None => {
            if opts.progress {
                eprintln!("[{ctx}] fitting {} models", config.search.total(4));
            }
            
            build_model_space(&config.search, &ParamSpace::default(), &split, space_seed, fingerprint)
                .and_then(|s| s.save(&dir).map(|_| s))
                .map_err(|e| e.in_stage("space", &ctx))?
        }
    };
    outcome.families = space.models.iter().map(|m| m.family).collect();
    outcome.accuracies = space.accuracies();
    if opts.until < Stage::Rashomon {
        return Ok(outcome);
    }

    let set = extract_from(&outcome.accuracies, config.epsilon).map_err(|e| e.in_stage("rashomon", &ctx))?;
    outcome.summary = Some(summary_from(&outcome.accuracies, &set).map_err(|e| e.in_stage("rashomon", &ctx))?);
    if opts.progress {
        eprintln!("[{ctx}] Rashomon set: {} of {} models", set.len(), space.len());
    }
    outcome.set = Some(set);
    if opts.until < Stage::Pvi {
        return Ok(outcome);
    }

    let set = outcome.set.as_ref().expect("set computed above");
    let valid = one_hot_encode(&split.valid);
    let pvi_cfg = PviConfig {
        repeats: config.pvi_repeats,
        seed: seed::derive(
            config.master_seed,
            &[seed::tag("pvi"), seed::tag(course), seed::tag(setup.as_str())],
        ),
    };
    let report = pvi_over_set(set, &space, &valid, &pvi_cfg, course, setup.as_str())
        .map_err(|e| e.in_stage("pvi", &ctx))?;
    outcome.pvi = Some(report);
    if opts.until < Stage::Viod {
        return Ok(outcome);
    }
    finish_viod(&mut outcome, config).map_err(|e| e.in_stage("viod", &ctx))?;
    Ok(outcome)
}

fn finish_viod(outcome: &mut SetupOutcome, config: &RunConfig) -> Result<()> {
    let (Some(set), Some(report)) = (&outcome.set, &outcome.pvi) else {
        return Ok(());
    };
    outcome.taus = tau_distribution(report, set)?;
    outcome.viod = if set.len() > 1 {
        Some(viod(report, set, config.viod_mode)?)
    } else {
        None
    };
    Ok(())
}

/// Run the pipeline up to `opts.until`, writing artifacts under
/// `config.output_dir`. On failure a `FAILED` marker with the error is left
/// next to whatever artifacts were already written.
pub fn run_pipeline(config: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    let out = config.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let failed = out.join(FAILED_FILE);
    if failed.exists() {
        fs::remove_file(&failed).map_err(|e| Error::io(&failed, e))?;
    }
    let result = run_inner(config, opts, &out);
    if let Err(e) = &result {
        let _ = fs::write(&failed, format!("{e}\n"));
    }
    result
}

fn run_inner(config: &RunConfig, opts: &RunOptions, out: &Path) -> Result<RunSummary> {
    write_json(&out.join(CONFIG_FILE), config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    let courses = config.data.course_tags();
    let mut bases = BTreeMap::new();
    for course in &courses {
        let base = load_source(&config.data, course).map_err(|e| e.in_stage("ingest", course.as_str()))?;
        bases.insert(course.clone(), base);
    }
    let mut setups = Vec::new();
    for &mode in &config.target_modes {
        for course in &courses {
            let outcome = pool.install(|| run_setup(config, &bases[course], mode, course, opts, out))?;
            setups.push(outcome);
        }
    }
    let summary = RunSummary {
        out_dir: out.to_path_buf(),
        stage: opts.until,
        setups,
    };
    emit(&summary)?;
    Ok(summary)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

/// Write every artifact the completed stages support.
pub fn emit(summary: &RunSummary) -> Result<()> {
    let out = &summary.out_dir;
    let mut w = csv_writer(
        &out.join(DATASETS_FILE),
        &["setup", "course", "n_rows", "n_train", "n_valid", "class_counts"],
    )?;
    for s in &summary.setups {
        let counts: Vec<String> = s.class_counts.iter().map(|(l, c)| format!("{l}={c}")).collect();
        w.write_record([
            s.setup.as_str(),
            &s.course,
            &s.n_rows.to_string(),
            &s.n_train.to_string(),
            &s.n_valid.to_string(),
            &counts.join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out.join(DATASETS_FILE), e))?;

    if summary.stage >= Stage::Rashomon {
        let mut w = csv_writer(
            &out.join(RASHOMON_FILE),
            &["setup", "course", "space_mean", "space_sd", "set_mean", "set_sd", "set_size"],
        )?;
        for s in &summary.setups {
            if let Some(r) = &s.summary {
                w.write_record([
                    s.setup.as_str(),
                    &s.course,
                    &fixed(r.space_mean),
                    &fixed(r.space_sd),
                    &fixed(r.set_mean),
                    &fixed(r.set_sd),
                    &r.set_size.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(out.join(RASHOMON_FILE), e))?;
    }

    if summary.stage >= Stage::Pvi {
        let mut long = csv_writer(
            &out.join(PVI_LONG_FILE),
            &["setup", "course", "model_id", "family", "variable", "repeat", "drop"],
        )?;
        let mut short = csv_writer(
            &out.join(PVI_SUMMARY_FILE),
            &["setup", "course", "variable", "n_models", "min", "q1", "median", "q3", "max", "mean"],
        )?;
        for s in &summary.setups {
            let Some(report) = &s.pvi else { continue };
            for r in &report.records {
                for (i, d) in r.drops.iter().enumerate() {
                    // Full precision so `report` can rebuild identical means.
                    long.write_record([
                        s.setup.as_str(),
                        &s.course,
                        &r.model_id.to_string(),
                        s.family_of(r.model_id),
                        &r.variable,
                        &i.to_string(),
                        &d.to_string(),
                    ])?;
                }
            }
            for v in summarize(report) {
                short.write_record([
                    s.setup.as_str(),
                    &s.course,
                    &v.variable,
                    &v.n_models.to_string(),
                    &fixed(v.min),
                    &fixed(v.q1),
                    &fixed(v.median),
                    &fixed(v.q3),
                    &fixed(v.max),
                    &fixed(v.mean),
                ])?;
            }
        }
        long.flush().map_err(|e| Error::io(out.join(PVI_LONG_FILE), e))?;
        short.flush().map_err(|e| Error::io(out.join(PVI_SUMMARY_FILE), e))?;
    }

    if summary.stage >= Stage::Viod {
        let mut vw = csv_writer(
            &out.join(VIOD_FILE),
            &["setup", "course", "viod_min", "viod_max", "reported_mode", "n_members"],
        )?;
        let mut tw = csv_writer(&out.join(TAU_FILE), &["setup", "course", "model_id", "family", "tau"])?;
        for s in &summary.setups {
            let Some(set) = &s.set else { continue };
            let (min, max, mode) = match &s.viod {
                Some(v) => (fixed(v.viod_min), fixed(v.viod_max), v.reported_mode.to_string()),
                None => ("NA".into(), "NA".into(), "NA".into()),
            };
            vw.write_record([s.setup.as_str(), &s.course, &min, &max, &mode, &set.len().to_string()])?;
            for (id, tau) in &s.taus {
                tw.write_record([s.setup.as_str(), &s.course, &id.to_string(), s.family_of(*id), &fixed(*tau)])?;
            }
        }
        vw.flush().map_err(|e| Error::io(out.join(VIOD_FILE), e))?;
        tw.flush().map_err(|e| Error::io(out.join(TAU_FILE), e))?;
    }

    let rows: Vec<SummaryRow> = summary.setups.iter().map(SetupOutcome::summary_row).collect();
    write_json(
        &out.join(SUMMARY_FILE),
        &serde_json::json!({ "stage": summary.stage.name(), "setups": rows }),
    )
}

#[derive(Debug, Deserialize)]
struct DatasetRow {
    setup: TargetMode,
    course: String,
    n_rows: usize,
    n_train: usize,
    n_valid: usize,
    class_counts: String,
}

#[derive(Debug, Deserialize)]
struct PviLongRow {
    setup: String,
    course: String,
    model_id: usize,
    variable: String,
    drop: f64,
}

/// Rebuild PVI reports from `pvi_long.csv`, keyed by (setup, course).
fn read_pvi_long(path: &Path, repeats: usize) -> Result<BTreeMap<(String, String), PviReport>> {
    let mut grouped: BTreeMap<(String, String), (Vec<String>, Vec<PviRecord>)> = BTreeMap::new();
    let mut r = csv::Reader::from_path(path)?;
    for row in r.deserialize::<PviLongRow>() {
        let row = row?;
        let (vars, recs) = grouped.entry((row.setup, row.course)).or_default();
        if !vars.contains(&row.variable) {
            vars.push(row.variable.clone());
        }
        match recs.last_mut() {
            Some(last) if last.model_id == row.model_id && last.variable == row.variable => last.drops.push(row.drop),
            _ => recs.push(PviRecord {
                model_id: row.model_id,
                variable: row.variable,
                baseline: f64::NAN,
                drops: vec![row.drop],
                mean_drop: 0.0,
            }),
        }
    }
    Ok(grouped
        .into_iter()
        .map(|((setup, course), (variables, mut records))| {
            for rec in &mut records {
                rec.mean_drop = rec.drops.iter().sum::<f64>() / rec.drops.len() as f64;
            }
            let report = PviReport {
                records,
                variables,
                config: PviConfig { repeats, seed: 0 },
                course: course.clone(),
                setup: setup.clone(),
            };
            ((setup, course), report)
        })
        .collect())
}

/// Recompute and re-emit the summary artifacts of an existing run directory
/// from its registries and `pvi_long.csv`, without refitting anything.
pub fn report(out: &Path) -> Result<RunSummary> {
    let cfg_path = out.join(CONFIG_FILE);
    let text = fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
    let config = validate_value(&serde_json::from_str(&text)?).map_err(Error::Config)?;

    let mut datasets = BTreeMap::new();
    let mut r = csv::Reader::from_path(out.join(DATASETS_FILE))?;
    for row in r.deserialize::<DatasetRow>() {
        let row = row?;
        datasets.insert((row.setup, row.course.clone()), row);
    }
    let pvi_path = out.join(PVI_LONG_FILE);
    let mut pvi = if pvi_path.exists() {
        read_pvi_long(&pvi_path, config.pvi_repeats)?
    } else {
        BTreeMap::new()
    };

    let mut stage = Stage::Viod;
    let mut setups = Vec::new();
    for &mode in &config.target_modes {
        for course in config.data.course_tags() {
            let ds = datasets
                .get(&(mode, course.clone()))
                .ok_or_else(|| Error::Data(format!("{DATASETS_FILE} has no row for {mode}/{course}")))?;
            let class_counts = ds
                .class_counts
                .split(';')
                .filter_map(|kv| kv.split_once('='))
                .map(|(k, v)| Ok((k.to_string(), v.parse().map_err(|_| Error::Data(format!("bad class count `{v}`")))?)))
                .collect::<Result<Vec<_>>>()?;
            let mut outcome = SetupOutcome {
                setup: mode,
                course: course.clone(),
                n_rows: ds.n_rows,
                n_train: ds.n_train,
                n_valid: ds.n_valid,
                class_counts,
                families: Vec::new(),
                accuracies: Vec::new(),
                set: None,
                summary: None,
                pvi: None,
                viod: None,
                taus: Vec::new(),
                reused_space: true,
            };
            let dir = space_dir(out, mode, &course);
            if dir.join(crate::search::REGISTRY_FILE).exists() {
                let reg = ModelSpace::read_registry(&dir)?;
                outcome.families = reg.iter().map(|r| r.1).collect();
                outcome.accuracies = reg.iter().map(|r| r.2).collect();
                let set = extract_from(&outcome.accuracies, config.epsilon)?;
                outcome.summary = Some(summary_from(&outcome.accuracies, &set)?);
                outcome.set = Some(set);
                outcome.pvi = pvi.remove(&(mode.as_str().to_string(), course.clone()));
                if outcome.pvi.is_some() {
                    finish_viod(&mut outcome, &config)?;
                } else {
                    stage = stage.min(Stage::Rashomon);
                }
            } else {
                stage = Stage::Ingest;
            }
            setups.push(outcome);
        }
    }
    let summary = RunSummary {
        out_dir: out.to_path_buf(),
        stage,
        setups,
    };
    emit(&summary)?;
    Ok(summary)
}
