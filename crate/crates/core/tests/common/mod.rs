// Independent oracles shared by the integration tests and the acceptance
// runner. Each check returns `Err` with a description of the first mismatch.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rashomon_core::dataset::{
    one_hot_encode, stratified_split, synth_generate, EncodedMatrix, PlantedSpec, TargetMode,
};
use rashomon_core::discrepancy::{kendall_tau, rank_variables, Ranking};
use rashomon_core::ensembles::{fit_gbdt, GbdtParams, Growth, Payload};
use rashomon_core::importance::{pvi_over_set, PviConfig};
use rashomon_core::rashomon::{extract_from, sweep_from};
use rashomon_core::search::{build_model_space, ParamSpace, SearchConfig};
use rashomon_core::trees::{best_split, Impurity};

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random 0/1 matrix with one singleton group per column.
pub fn random_matrix(rng: &mut ChaCha8Rng, n_rows: usize, n_cols: usize, n_classes: usize) -> EncodedMatrix {
    let p: f64 = rng.gen_range(0.2..0.8);
    let data: Vec<u8> = (0..n_rows * n_cols).map(|_| u8::from(rng.gen_bool(p))).collect();
    let labels: Vec<usize> = (0..n_rows).map(|_| rng.gen_range(0..n_classes)).collect();
    EncodedMatrix::from_columns(data, n_cols, labels, n_classes).expect("valid random matrix")
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|&c| (c as f64 / n as f64).powi(2)).sum::<f64>()
}

pub fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Weighted impurity decrease of every admissible column, by direct counting.
pub fn brute_force_decreases(
    m: &EncodedMatrix,
    rows: &[usize],
    columns: &[usize],
    kind: Impurity,
    min_leaf: usize,
) -> Vec<(usize, f64)> {
    let f = |c: &[usize]| match kind {
        Impurity::Gini => gini(c),
        Impurity::Entropy => entropy(c),
    };
    let k = m.n_classes();
    let mut parent = vec![0; k];
    for &r in rows {
        parent[m.labels()[r]] += 1;
    }
    let n = rows.len() as f64;
    let mut out = Vec::new();
    for &c in columns {
        let (mut left, mut right) = (vec![0; k], vec![0; k]);
        for &r in rows {
            if m.get(r, c) == 1 {
                right[m.labels()[r]] += 1;
            } else {
                left[m.labels()[r]] += 1;
            }
        }
        let (nl, nr): (usize, usize) = (left.iter().sum(), right.iter().sum());
        if nl < min_leaf.max(1) || nr < min_leaf.max(1) {
            continue;
        }
        let d = f(&parent) - nl as f64 / n * f(&left) - nr as f64 / n * f(&right);
        out.push((c, d));
    }
    out
}

/// Lowest column whose decrease is maximal, or `None` when no split helps.
pub fn brute_force_best(
    m: &EncodedMatrix,
    rows: &[usize],
    columns: &[usize],
    kind: Impurity,
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let cands = brute_force_decreases(m, rows, columns, kind, min_leaf);
    let max = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    if !(max > 1e-9) {
        return None;
    }
    cands.into_iter().filter(|c| c.1 >= max - 1e-9).min_by_key(|c| c.0)
}

pub fn check_best_split(n_instances: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..n_instances {
        let n_rows = rng.gen_range(1..=25);
        let n_cols = rng.gen_range(1..=8);
        let n_classes = rng.gen_range(2..=3);
        let m = random_matrix(&mut rng, n_rows, n_cols, n_classes);
        let mut rows: Vec<usize> = (0..n_rows).collect();
        rows.shuffle(&mut rng);
        rows.truncate(rng.gen_range(1..=n_rows));
        let mut columns: Vec<usize> = (0..n_cols).collect();
        columns.shuffle(&mut rng);
        columns.truncate(rng.gen_range(1..=n_cols));
        let min_leaf = rng.gen_range(1..=3);
        let kind = if rng.gen_bool(0.5) { Impurity::Gini } else { Impurity::Entropy };

        let got = best_split(&m, &rows, &columns, kind, min_leaf);
        let want = brute_force_best(&m, &rows, &columns, kind, min_leaf);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some((c, d))) if g.column == c && (g.decrease - d).abs() < 1e-9 => {}
            _ => return Err(format!("instance {case}: best_split {got:?}, brute force {want:?}")),
        }
    }
    Ok(())
}

pub fn ranking(order: &[usize]) -> Ranking {
    Ranking {
        order: order.iter().map(|i| format!("v{i}")).collect(),
        model_id: 0,
        tie_note: false,
    }
}

pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Tau-a from the sign of every pair's rank differences.
pub fn tau_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let pos = |order: &[usize], v: usize| order.iter().position(|&x| x == v).unwrap() as i64;
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += ((pos(a, i) - pos(a, j)) * (pos(b, i) - pos(b, j))).signum();
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

pub fn check_kendall_exhaustive(max_n: usize) -> Check {
    for n in 2..=max_n {
        let perms = all_permutations(n);
        let pairs = (n * (n - 1) / 2) as f64;
        for a in &perms {
            for b in &perms {
                let got = kendall_tau(&ranking(a), &ranking(b)).map_err(|e| e.to_string())?;
                let want = tau_by_pairs(a, b);
                if got != want {
                    return Err(format!("{a:?} vs {b:?}: got {got}, pair count gives {want}"));
                }
                if (got * pairs).fract() != 0.0 {
                    return Err(format!("{a:?} vs {b:?}: {got} is not a multiple of 1/{pairs}"));
                }
            }
        }
    }
    Ok(())
}

/// Accuracies of a random model space over a validation set of `n_valid`
/// rows, so ties occur as they do in practice.
pub fn random_accuracies(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n_valid = rng.gen_range(20..400);
    let n_models = rng.gen_range(1..120);
    let centre = rng.gen_range(0.3..0.9);
    (0..n_models)
        .map(|_| {
            let a: f64 = centre + rng.gen_range(-0.2..0.1);
            (a.clamp(0.0, 1.0) * n_valid as f64).round() / n_valid as f64
        })
        .collect()
}

/// Soundness, completeness, reference membership and containment across
/// epsilons for one accuracy vector.
pub fn rashomon_invariants(acc: &[f64], eps: &[f64]) -> Check {
    let best = acc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut previous: Option<BTreeSet<usize>> = None;
    for &e in eps {
        let set = extract_from(acc, e).map_err(|x| x.to_string())?;
        let r = set.reference_id;
        if acc[r] != best || acc[..r].contains(&best) {
            return Err(format!("reference {r} is not the first argmax"));
        }
        let bound = (1.0 - acc[r]) + e;
        for (i, &a) in acc.iter().enumerate() {
            if set.contains(i) != (1.0 - a <= bound) {
                return Err(format!("eps {e}: membership of {i} disagrees with its loss"));
            }
        }
        if !set.contains(r) || set.is_empty() || set.len() > acc.len() {
            return Err(format!("eps {e}: size {} out of bounds", set.len()));
        }
        let members: BTreeSet<usize> = set.member_ids.iter().copied().collect();
        if let Some(prev) = &previous {
            if !prev.is_subset(&members) {
                return Err(format!("eps {e}: smaller-epsilon set is not contained"));
            }
        }
        previous = Some(members);
    }
    let sweep = sweep_from(acc, eps).map_err(|x| x.to_string())?;
    if sweep.windows(2).any(|w| w[0].1 > w[1].1) {
        return Err("sweep sizes are not monotone".into());
    }
    Ok(())
}

pub fn check_rashomon_spaces(n_spaces: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for s in 0..n_spaces {
        let acc = random_accuracies(&mut rng);
        let mut eps: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..0.3)).collect();
        eps.push(0.0);
        eps.push(0.05);
        eps.sort_by(f64::total_cmp);
        rashomon_invariants(&acc, &eps).map_err(|e| format!("space {s}: {e}"))?;
    }
    Ok(())
}

fn gbdt(n_rounds: usize, growth: Growth) -> GbdtParams {
    GbdtParams {
        n_rounds,
        learning_rate: 0.2,
        growth,
        min_samples_leaf: 1,
        l2_reg: 1.0,
        seed: 3,
    }
}

fn probs(p: &Payload, m: &EncodedMatrix) -> Result<Vec<Vec<f64>>, String> {
    p.predict(m).map_err(|e| e.to_string())
}

pub fn check_gbdt_degenerate(n_instances: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for case in 0..n_instances {
        let n_classes = rng.gen_range(2..=3);
        let (n_rows, n_cols) = (rng.gen_range(10..60), rng.gen_range(1..6));
        let m = random_matrix(&mut rng, n_rows, n_cols, n_classes);
        let mut counts = vec![0usize; n_classes];
        for &y in m.labels() {
            counts[y] += 1;
        }
        if counts.contains(&0) {
            continue;
        }
        let prior: Vec<f64> = counts.iter().map(|&c| c as f64 / m.n_rows() as f64).collect();
        let zero = fit_gbdt(&m, &gbdt(0, Growth::Depthwise { max_depth: 3 })).map_err(|e| e.to_string())?;
        for p in probs(&Payload::Gbdt(zero), &m)? {
            if p.iter().zip(&prior).any(|(a, b)| (a - b).abs() > 1e-9) {
                return Err(format!("case {case}: zero rounds gave {p:?}, prior is {prior:?}"));
            }
        }
        let rounds = rng.gen_range(1..8);
        let leaf = fit_gbdt(&m, &gbdt(rounds, Growth::Leafwise { max_leaves: 2 })).map_err(|e| e.to_string())?;
        let depth = fit_gbdt(&m, &gbdt(rounds, Growth::Depthwise { max_depth: 1 })).map_err(|e| e.to_string())?;
        let (a, b) = (probs(&Payload::Gbdt(leaf), &m)?, probs(&Payload::Gbdt(depth), &m)?);
        for (pa, pb) in a.iter().zip(&b) {
            if pa.iter().zip(pb).any(|(x, y)| (x - y).abs() > 1e-12) {
                return Err(format!("case {case}: leafwise(2) {pa:?} vs depthwise(1) {pb:?}"));
            }
        }
    }
    Ok(())
}

pub struct ZeroSignal {
    pub setup: TargetMode,
    pub members: usize,
    pub noise_mean: f64,
    pub strongest_first: f64,
}

/// Planted synthetic data, a random-search space, the Rashomon set at 0.05
/// and PVI with `repeats` permutations.
pub fn zero_signal_run(setup: TargetMode, repeats: usize, seed: u64) -> Result<ZeroSignal, String> {
    let e = |x: rashomon_core::Error| x.to_string();
    let spec = PlantedSpec::uniform(3, &[("strong", 1.0), ("medium", 0.5), ("weak", 0.25), ("noise", 0.0)]);
    let base = synth_generate(2000, &spec, seed).map_err(e)?;
    let data = match setup {
        TargetMode::Binary => rashomon_core::dataset::make_binary(&base),
        TargetMode::Multiclass => base,
    };
    let split = stratified_split(&data, 0.25, seed).map_err(e)?;
    let search = SearchConfig { n_random: 40, bayes: None };
    let space = build_model_space(&search, &ParamSpace::default(), &split, seed, "zero-signal").map_err(e)?;
    let set = extract_from(&space.accuracies(), 0.05).map_err(e)?;
    let valid = one_hot_encode(&split.valid);
    let cfg = PviConfig { repeats, seed: seed ^ 0x5eed };
    let report = pvi_over_set(&set, &space, &valid, &cfg, "SYN", setup.as_str()).map_err(e)?;
    let noise: Vec<f64> = report.records.iter().filter(|r| r.variable == "noise").map(|r| r.mean_drop).collect();
    let mut first = 0usize;
    for &id in &set.member_ids {
        let r = rank_variables(&report.for_model(id), &report.variables).map_err(e)?;
        if r.order[0] == "strong" {
            first += 1;
        }
    }
    Ok(ZeroSignal {
        setup,
        members: set.len(),
        noise_mean: noise.iter().sum::<f64>() / noise.len() as f64,
        strongest_first: first as f64 / set.len() as f64,
    })
}

/// OULAD directory from `OULAD_DIR` or `<workspace>/data/oulad`, if the
/// student table is present.
pub fn oulad_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("OULAD_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/oulad"));
    dir.join("studentInfo.csv").is_file().then_some(dir)
}

/// Byte comparison of every CSV and JSON artifact (registries and model
/// files included) except the resolved config, which records the directory.
pub fn compare_artifacts(a: &Path, b: &Path) -> Check {
    let mut files = Vec::new();
    collect_artifacts(a, a, &mut files).map_err(|e| e.to_string())?;
    if files.is_empty() {
        return Err(format!("no CSV files under {}", a.display()));
    }
    for rel in files {
        let x = std::fs::read(a.join(&rel)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(&rel)).map_err(|e| format!("{}: {e}", rel.display()))?;
        if x != y {
            return Err(format!("{} differs", rel.display()));
        }
    }
    Ok(())
}

fn collect_artifacts(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_artifacts(root, &p, out)?;
        } else if p.extension().is_some_and(|x| x == "csv" || x == "json") && !p.ends_with("config.resolved.json") {
            out.push(p.strip_prefix(root).unwrap().to_path_buf());
        }
    }
    Ok(())
}
