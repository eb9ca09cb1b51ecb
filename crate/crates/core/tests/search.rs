use rashomon_core::dataset::{one_hot_encode, stratified_split, synth_generate, PlantedSpec};
use rashomon_core::ensembles::Family;
use rashomon_core::search::{
    bayes_opt, build_model_space, incumbent_trace, minimize, random_search, BayesConfig, Dimension, ModelSpace,
    Origin, ParamSpace, Scale, SearchConfig, Value,
};

fn split() -> rashomon_core::dataset::SplitPair {
    let spec = PlantedSpec::uniform(3, &[("a", 1.0), ("b", 0.4), ("c", 0.0)]);
    stratified_split(&synth_generate(300, &spec, 1).unwrap(), 0.25, 1).unwrap()
}

fn real(v: &Value) -> f64 {
    match v {
        Value::Real(x) => *x,
        other => panic!("expected a real, got {other:?}"),
    }
}

fn bowl(x: f64, y: f64) -> f64 {
    1.0 + (x - 0.3).powi(2) + (y - 0.7).powi(2)
}

#[test]
fn bayes_finds_toy_minimum() {
    let dims = [Dimension::real("x", 0.0, 1.0, Scale::Linear), Dimension::real("y", 0.0, 1.0, Scale::Linear)];
    let grid_min = (0..100)
        .flat_map(|i| (0..100).map(move |j| bowl(i as f64 / 99.0, j as f64 / 99.0)))
        .fold(f64::INFINITY, f64::min);
    for seed in 0..3 {
        let hist = minimize(&dims, 10, 30, seed, |s, _| Ok((bowl(real(&s["x"]), real(&s["y"])), ()))).unwrap();
        assert_eq!(hist.len(), 40);
        assert_eq!(hist.iter().filter(|h| h.warmup).count(), 10);
        let best = incumbent_trace(&hist).last().copied().unwrap();
        assert!(best <= grid_min * 1.05, "seed {seed}: best {best}, grid {grid_min}");
        let trace = incumbent_trace(&hist);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn minimize_is_deterministic() {
    let dims = [Dimension::real("x", 0.01, 1.0, Scale::Log), Dimension::integer("n", 1, 9)];
    let f = |s: &rashomon_core::search::Sample, seed: u64| {
        let n = match s["n"] {
            Value::Int(n) => n as f64,
            _ => unreachable!(),
        };
        Ok(((real(&s["x"]) - 0.1).abs() + (n - 4.0).abs() / 10.0, seed))
    };
    let a = minimize(&dims, 4, 6, 77, f).unwrap();
    let b = minimize(&dims, 4, 6, 77, f).unwrap();
    let key = |h: &Vec<rashomon_core::search::Evaluation<u64>>| {
        h.iter().map(|e| (e.sample.clone(), e.seed, e.loss)).collect::<Vec<_>>()
    };
    assert_eq!(key(&a), key(&b));
}

#[test]
fn random_search_is_deterministic_and_round_robin() {
    let s = split();
    let (train, valid) = (one_hot_encode(&s.train), one_hot_encode(&s.valid));
    let space = ParamSpace::default();
    let a = random_search(&space, 9, &train, &valid, 5).unwrap();
    let b = random_search(&space, 9, &train, &valid, 5).unwrap();
    assert_eq!(a, b);
    for (i, t) in a.iter().enumerate() {
        assert_eq!(t.family, Family::ALL[i % 4]);
        assert_eq!(t.index, i / 4);
        assert_eq!(t.origin, Origin::Random);
        let dims = space.dims(t.family).unwrap();
        for d in dims {
            assert!(d.contains(&t.sample[&d.name]), "{} out of range", d.name);
        }
    }
    let c = random_search(&space, 9, &train, &valid, 6).unwrap();
    assert_ne!(a, c);
}

#[test]
fn bayes_opt_covers_every_family() {
    let s = split();
    let (train, valid) = (one_hot_encode(&s.train), one_hot_encode(&s.valid));
    let trials = bayes_opt(&ParamSpace::default(), 2, 3, &train, &valid, 8).unwrap();
    assert_eq!(trials.len(), 4 * 5);
    for f in Family::ALL {
        assert_eq!(trials.iter().filter(|t| t.family == f).count(), 5);
    }
    assert!(trials.iter().all(|t| t.origin == Origin::Bayes));
}

#[test]
fn model_space_ids_and_registry_round_trip() {
    let s = split();
    let cfg = SearchConfig { n_random: 6, bayes: Some(BayesConfig { n_iter: 1, n_init: 2 }) };
    let space = build_model_space(&cfg, &ParamSpace::default(), &s, 3, "fp").unwrap();
    assert_eq!(space.len(), cfg.total(4));
    for (i, m) in space.models.iter().enumerate() {
        assert_eq!(m.model_id, i);
        assert!((0.0..=1.0).contains(&m.valid_accuracy));
    }
    let dir = tempfile::tempdir().unwrap();
    space.save(dir.path()).unwrap();
    assert_eq!(ModelSpace::stored_fingerprint(dir.path()).as_deref(), Some("fp"));
    let back = ModelSpace::load(dir.path()).unwrap();
    assert_eq!(back.accuracies(), space.accuracies());
    assert_eq!(back.models, space.models);
    let reg = ModelSpace::read_registry(dir.path()).unwrap();
    assert_eq!(reg.len(), space.len());
}
