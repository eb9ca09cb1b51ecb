//! Run configuration: a single JSON document. Validation reports every
//! problem with its field path, rejects unknown keys and materializes all
//! defaults into the returned [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::{Course, PlantedSpec, PlantedVariable, TargetMode};
use crate::discrepancy::ViodMode;
use crate::error::{Error, Result};
use crate::search::{BayesConfig, SearchConfig};

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_SPLIT_RATIO: f64 = 0.25;
pub const DEFAULT_PVI_REPEATS: usize = 10;
pub const DEFAULT_OULAD_DIR: &str = "data/oulad";
pub const DEFAULT_OUTPUT_DIR: &str = "runs/latest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Oulad {
        dir: PathBuf,
        courses: Vec<String>,
    },
    Synthetic {
        n_rows: usize,
        seed: u64,
        variables: Vec<PlantedVariable>,
    },
}

impl DataSource {
    /// Course tags the run iterates over.
    pub fn course_tags(&self) -> Vec<String> {
        match self {
            DataSource::Oulad { courses, .. } => courses.clone(),
            DataSource::Synthetic { .. } => vec!["SYN".to_string()],
        }
    }

    pub fn planted(&self) -> Option<PlantedSpec> {
        match self {
            DataSource::Synthetic { variables, .. } => Some(PlantedSpec {
                variables: variables.clone(),
            }),
            DataSource::Oulad { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    pub target_modes: Vec<TargetMode>,
    pub split_ratio: f64,
    pub master_seed: u64,
    pub search: SearchConfig,
    pub epsilon: f64,
    pub pvi_repeats: usize,
    pub viod_mode: ViodMode,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Synthetic config with the default epsilon and a small search, handy
    /// for examples and tests.
    pub fn synthetic(n_rows: usize, variables: Vec<PlantedVariable>, master_seed: u64) -> Self {
        Self {
            data: DataSource::Synthetic {
                n_rows,
                seed: master_seed,
                variables,
            },
            target_modes: vec![TargetMode::Binary, TargetMode::Multiclass],
            split_ratio: DEFAULT_SPLIT_RATIO,
            master_seed,
            search: SearchConfig {
                n_random: 8,
                bayes: None,
            },
            epsilon: DEFAULT_EPSILON,
            pvi_repeats: DEFAULT_PVI_REPEATS,
            viod_mode: ViodMode::Min,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
        }
    }
}

struct Checker {
    errors: Vec<String>,
}

impl Checker {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            self.err(path, "expected an object");
            return None;
        };
        for k in obj.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(&join(path, k), format!("unknown key (allowed: {})", allowed.join(", ")));
            }
        }
        Some(obj)
    }

    fn uint(&mut self, obj: &Map<String, Value>, path: &str, key: &str, default: Option<u64>) -> Option<u64> {
        let p = join(path, key);
        match obj.get(key) {
            None if default.is_some() => default,
            None => {
                self.err(&p, "missing required field");
                None
            }
            Some(v) => match v.as_u64() {
                Some(x) => Some(x),
                None => {
                    self.err(&p, format!("expected a non-negative integer, got {v}"));
                    None
                }
            },
        }
    }

    fn real(&mut self, obj: &Map<String, Value>, path: &str, key: &str, default: f64) -> Option<f64> {
        match obj.get(key) {
            None => Some(default),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.err(&join(path, key), format!("expected a number, got {v}"));
                    None
                }
            },
        }
    }

    fn string<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a str> {
        let s = v.as_str();
        if s.is_none() {
            self.err(path, format!("expected a string, got {v}"));
        }
        s
    }

    fn positive(&mut self, x: Option<u64>, path: &str) -> Option<u64> {
        match x {
            Some(0) => {
                self.err(path, "must be at least 1");
                None
            }
            other => other,
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

const TOP_KEYS: [&str; 9] = [
    "data",
    "target_modes",
    "split_ratio",
    "master_seed",
    "search",
    "epsilon",
    "pvi_repeats",
    "viod_mode",
    "output_dir",
];

fn check_data(c: &mut Checker, v: Option<&Value>, master_seed: u64) -> Option<DataSource> {
    let Some(v) = v else {
        return Some(DataSource::Oulad {
            dir: PathBuf::from(DEFAULT_OULAD_DIR),
            courses: Course::ALL.iter().map(|c| c.code().to_string()).collect(),
        });
    };
    let source = v.get("source").and_then(Value::as_str).unwrap_or("oulad");
    match source {
        "oulad" => {
            let obj = c.object(v, "data", &["source", "dir", "courses"])?;
            let dir = match obj.get("dir") {
                None => Some(PathBuf::from(DEFAULT_OULAD_DIR)),
                Some(d) => c.string(d, "data.dir").map(PathBuf::from),
            };
            let courses = match obj.get("courses") {
                None => Some(Course::ALL.iter().map(|c| c.code().to_string()).collect()),
                Some(Value::Array(items)) if items.is_empty() => {
                    c.err("data.courses", "at least one course is required");
                    None
                }
                Some(Value::Array(items)) => {
                    let mut out = Vec::new();
                    for (i, item) in items.iter().enumerate() {
                        let p = format!("data.courses[{i}]");
                        if let Some(s) = c.string(item, &p) {
                            match s.parse::<Course>() {
                                Ok(course) if out.contains(&course.code().to_string()) => {
                                    c.err(&p, format!("duplicate course {course}"))
                                }
                                Ok(course) => out.push(course.code().to_string()),
                                Err(e) => c.err(&p, e),
                            }
                        }
                    }
                    Some(out)
                }
                Some(other) => {
                    c.err("data.courses", format!("expected a list, got {other}"));
                    None
                }
            };
            Some(DataSource::Oulad {
                dir: dir?,
                courses: courses?,
            })
        }
        "synthetic" => {
            let obj = c.object(v, "data", &["source", "n_rows", "seed", "variables"])?;
            let n_rows = c.uint(obj, "data", "n_rows", Some(2000));
            if matches!(n_rows, Some(n) if n < 50) {
                c.err("data.n_rows", "must be at least 50");
            }
            let seed = c.uint(obj, "data", "seed", Some(master_seed));
            let variables = match obj.get("variables") {
                None => {
                    c.err("data.variables", "missing required field");
                    None
                }
                Some(vars) => match serde_json::from_value::<Vec<PlantedVariable>>(vars.clone()) {
                    Ok(vars) => {
                        let spec = PlantedSpec { variables: vars };
                        match spec.validate() {
                            Ok(()) => Some(spec.variables),
                            Err(e) => {
                                c.err("data.variables", e);
                                None
                            }
                        }
                    }
                    Err(e) => {
                        c.err("data.variables", e);
                        None
                    }
                },
            };
            Some(DataSource::Synthetic {
                n_rows: n_rows? as usize,
                seed: seed?,
                variables: variables?,
            })
        }
        other => {
            c.err("data.source", format!("unknown source `{other}` (expected oulad or synthetic)"));
            None
        }
    }
}

fn check_search(c: &mut Checker, v: Option<&Value>) -> Option<SearchConfig> {
    let Some(v) = v else {
        return Some(SearchConfig::default());
    };
    let obj = c.object(v, "search", &["n_random", "bayes"])?;
    let n_random = c.uint(obj, "search", "n_random", Some(SearchConfig::default().n_random as u64));
    let bayes = match obj.get("bayes") {
        None => Some(SearchConfig::default().bayes),
        Some(Value::Null) => Some(None),
        Some(b) => {
            let bo = c.object(b, "search.bayes", &["n_iter", "n_init"]);
            bo.and_then(|bo| {
                let n_iter = c.uint(bo, "search.bayes", "n_iter", Some(30));
                let n_iter = c.positive(n_iter, "search.bayes.n_iter");
                let n_init = c.uint(bo, "search.bayes", "n_init", Some(26));
                if matches!(n_init, Some(n) if n < 2) {
                    c.err("search.bayes.n_init", "must be at least 2");
                }
                Some(Some(BayesConfig {
                    n_iter: n_iter? as usize,
                    n_init: n_init.filter(|&n| n >= 2)? as usize,
                }))
            })
        }
    };
    let cfg = SearchConfig {
        n_random: n_random? as usize,
        bayes: bayes?,
    };
    if cfg.total(4) == 0 {
        c.err("search", "the search would produce no models");
        return None;
    }
    Some(cfg)
}

/// Validate a parsed JSON document. `Err` carries one message per violation.
pub fn validate_value(root: &Value) -> std::result::Result<RunConfig, Vec<String>> {
    let mut c = Checker { errors: Vec::new() };
    let Some(obj) = c.object(root, "", &TOP_KEYS) else {
        return Err(c.errors);
    };

    let master_seed = c.uint(obj, "", "master_seed", None);
    let data = check_data(&mut c, obj.get("data"), master_seed.unwrap_or(0));

    let target_modes = match obj.get("target_modes") {
        None => Some(vec![TargetMode::Binary, TargetMode::Multiclass]),
        Some(v) => match serde_json::from_value::<Vec<TargetMode>>(v.clone()) {
            Ok(m) if m.is_empty() => {
                c.err("target_modes", "at least one target mode is required");
                None
            }
            Ok(mut m) => {
                let n = m.len();
                m.sort();
                m.dedup();
                if m.len() != n {
                    c.err("target_modes", "duplicate target mode");
                }
                Some(m)
            }
            Err(e) => {
                c.err("target_modes", e);
                None
            }
        },
    };

    let split_ratio = c.real(obj, "", "split_ratio", DEFAULT_SPLIT_RATIO);
    if matches!(split_ratio, Some(r) if !(r > 0.0 && r < 1.0)) {
        c.err("split_ratio", "must lie strictly between 0 and 1");
    }
    let epsilon = c.real(obj, "", "epsilon", DEFAULT_EPSILON);
    if matches!(epsilon, Some(e) if e < 0.0) {
        c.err("epsilon", "must be non-negative");
    }
    let pvi_repeats = c.uint(obj, "", "pvi_repeats", Some(DEFAULT_PVI_REPEATS as u64));
    let pvi_repeats = c.positive(pvi_repeats, "pvi_repeats");
    let viod_mode = match obj.get("viod_mode") {
        None => Some(ViodMode::Min),
        Some(v) => match serde_json::from_value::<ViodMode>(v.clone()) {
            Ok(m) => Some(m),
            Err(_) => {
                c.err("viod_mode", format!("expected \"min\" or \"max\", got {v}"));
                None
            }
        },
    };
    let output_dir = match obj.get("output_dir") {
        None => Some(PathBuf::from(DEFAULT_OUTPUT_DIR)),
        Some(v) => c.string(v, "output_dir").map(PathBuf::from),
    };
    let search = check_search(&mut c, obj.get("search"));

    if !c.errors.is_empty() {
        return Err(c.errors);
    }
    let cfg = (|| {
        Some(RunConfig {
            data: data?,
            target_modes: target_modes?,
            split_ratio: split_ratio?,
            master_seed: master_seed?,
            search: search?,
            epsilon: epsilon?,
            pvi_repeats: pvi_repeats? as usize,
            viod_mode: viod_mode?,
            output_dir: output_dir?,
        })
    })();
    cfg.ok_or_else(|| vec!["config could not be resolved".to_string()])
}

/// Read, check and resolve a config file. `seed_override` replaces
/// `master_seed` before validation.
pub fn validate_config_with(path: &Path, seed_override: Option<u64>) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut root: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(vec![format!("{}: not valid JSON: {e}", path.display())]))?;
    if let (Some(seed), Some(obj)) = (seed_override, root.as_object_mut()) {
        obj.insert("master_seed".into(), Value::from(seed));
    }
    validate_value(&root).map_err(Error::Config)
}

pub fn validate_config(path: &Path) -> Result<RunConfig> {
    validate_config_with(path, None)
}
