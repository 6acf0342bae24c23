use lctrotter::experiments::{
    emit, render_with_config, run_bound, run_decompose, run_dqpt, run_gatecount, run_random, run_simulate,
    ExperimentConfig, OutputFormat, Table,
};
use serde_json::Value;

fn random_cfg() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        experiment: "random".into(),
        model: "powerlaw".into(),
        observable: "zsum".into(),
        n_values: vec![4, 5],
        t_per_n: Some(1.0),
        r: Some(6),
        samples: 50,
        seed: Some(2024),
        ..Default::default()
    };
    cfg.set_params("J=1,h=0.5,alpha=4").unwrap();
    cfg
}

#[test]
fn fixed_seed_runs_are_byte_identical() {
    let cfg = random_cfg();
    cfg.validate().unwrap();
    let a = render_with_config(&run_random(&cfg).unwrap(), &cfg).unwrap();
    let b = render_with_config(&run_random(&cfg).unwrap(), &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("# config: {"));
    let mut json_cfg = cfg.clone();
    json_cfg.format = OutputFormat::Json;
    let doc: Value = serde_json::from_str(&render_with_config(&run_random(&cfg).unwrap(), &json_cfg).unwrap()).unwrap();
    assert_eq!(doc["config"]["seed"], 2024);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn random_sweep_matches_golden_file() {
    let cfg = random_cfg();
    let table = run_random(&cfg).unwrap();
    let golden = include_str!("golden/random_powerlaw.csv");
    let mut reader = csv::Reader::from_reader(golden.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, table.columns);
    for (row, rec) in table.rows.iter().zip(reader.records()) {
        let rec = rec.unwrap();
        for (v, g) in row.iter().zip(rec.iter()) {
            match v {
                Value::Number(x) => {
                    let (x, g): (f64, f64) = (x.as_f64().unwrap(), g.parse().unwrap());
                    assert!((x - g).abs() <= 1e-12 * g.abs().max(1.0), "{x} vs {g}");
                }
                Value::Bool(b) => assert_eq!(b.to_string(), g),
                other => panic!("unexpected cell {other:?}"),
            }
        }
    }
}

#[test]
fn empirical_mean_below_bounds_in_random_rows() {
    let table = run_random(&random_cfg()).unwrap();
    let (m, o, w) = (table.column("empirical_mean").unwrap(), table.column("ours_bound").unwrap(), table.column("worst_bound").unwrap());
    for row in &table.rows {
        let mean = row[m].as_f64().unwrap();
        assert!(mean <= row[o].as_f64().unwrap());
        assert!(row[o].as_f64().unwrap() <= row[w].as_f64().unwrap());
    }
}

#[test]
fn huge_epsilon_needs_one_step() {
    let mut cfg = ExperimentConfig {
        experiment: "gatecount".into(),
        model: "mfi".into(),
        n_values: vec![4, 6],
        t: Some(0.1),
        epsilon: Some(1e6),
        ..Default::default()
    };
    cfg.set_params("J=1,h=0.5,g=1.2").unwrap();
    let table = run_gatecount(&cfg).unwrap();
    let r = table.column("bound_r").unwrap();
    assert_eq!(table.rows.len(), 2 * 6);
    assert!(table.rows.iter().all(|row| row[r] == 1));
}

#[test]
fn unreachable_epsilon_is_flagged() {
    let cfg = ExperimentConfig {
        experiment: "gatecount".into(),
        model: "tfi".into(),
        n_values: vec![4],
        t: Some(1.0),
        epsilon: Some(1e-12),
        r_max: 8,
        empirical_limit: 0,
        ..Default::default()
    };
    let table = run_gatecount(&cfg).unwrap();
    let reach = table.column("reachable").unwrap();
    assert!(table.rows.iter().all(|row| row[reach] == false));
}

fn small_dqpt(budget: usize, eps: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { experiment: "dqpt".into(), model: "tfi".into(), n: Some(6), epsilon: Some(eps), ..Default::default() };
    cfg.set_params("J=0.2,h=1").unwrap();
    cfg.dqpt.budget = budget;
    cfg.dqpt.t_max = 1.0;
    cfg.dqpt.t_step = 0.05;
    cfg
}

#[test]
fn dqpt_limits() {
    let open = run_dqpt(&small_dqpt(usize::MAX, 0.05)).unwrap();
    for g in &open.guaranteed {
        assert!((g.t.unwrap() - 1.0).abs() < 1e-12, "{g:?}");
    }
    let loose = run_dqpt(&small_dqpt(500, 1e9)).unwrap();
    for g in &loose.guaranteed {
        assert_eq!(g.r, Some(1));
        assert!((g.t.unwrap() - 1.0).abs() < 1e-12);
    }
    let starved = run_dqpt(&small_dqpt(1, 0.05)).unwrap();
    assert!(starved.guaranteed.iter().all(|g| g.t.is_none()));
    let table = starved.guaranteed_table();
    assert_eq!(table.rows.len(), 2);
}

#[test]
fn bound_search_and_simulate() {
    let cfg = ExperimentConfig {
        experiment: "bound".into(),
        n: Some(5),
        t: Some(1.0),
        epsilon: Some(1e-2),
        search_r: true,
        bound: "thm1".into(),
        ..Default::default()
    };
    cfg.validate().unwrap();
    let out = run_bound(&cfg).unwrap();
    assert!(out.report.value <= 1e-2);
    let r = out.steps.unwrap().steps().unwrap();
    let sim = ExperimentConfig { experiment: "simulate".into(), n: Some(5), t: Some(1.0), r: Some(r), method: "reduced".into(), ..Default::default() };
    let (table, circuit) = run_simulate(&sim).unwrap();
    let e = table.rows[0][table.column("heisenberg_error").unwrap()].as_f64().unwrap();
    assert!(e <= out.report.value);
    assert!(!circuit.is_empty());
}

#[test]
fn decompositions_dump_json() {
    let mut cfg = ExperimentConfig { experiment: "decompose".into(), n: Some(6), ..Default::default() };
    let v = run_decompose(&cfg).unwrap();
    assert_eq!(v["layers"].as_array().unwrap().len(), 7);
    cfg.decompose = "hypergraph".into();
    assert_eq!(run_decompose(&cfg).unwrap()["chi"], 2);
    cfg.decompose = "cubes".into();
    cfg.model = "powerlaw".into();
    cfg.d0 = Some(2.0);
    let cubes = run_decompose(&cfg).unwrap();
    assert!(cubes["removed_one_norm"].as_f64().unwrap() > 0.0);
}

#[test]
fn emit_rejects_unwritable_paths() {
    let t = Table::new(&["a"]);
    assert!(emit(&t, OutputFormat::Csv, "/nonexistent-dir/x.csv").is_err());
    let dir = std::env::temp_dir().join(format!("lctrotter-emit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("rows.json");
    emit(&t, OutputFormat::Json, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "[]\n");
    std::fs::remove_dir_all(&dir).unwrap();
}
