use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use h2pc::bn::{dag_to_dot, forward_sample, pdag_to_dot, read_network, BayesianNetwork};
use h2pc::dataset::{load_csv, CategoricalDataset};
use h2pc::eval::{dag_shd, dag_to_cpdag, holdout_scores, shd, skeleton_metrics};
use h2pc::multilabel::{run_scenarios, MlcData};
use h2pc::score_search::{hill_climb, total_score, ScoreKind};
use h2pc::skeleton::build_skeleton;
use h2pc::{
    CiTester, CsvOptions, Dag, Error, HoldoutScores, HpcConfig, MlcConfig, Pdag, RawTable, Scenario, ScoreConfig,
    Skeleton, SkeletonMetrics, TestConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BenchmarkArgs, EvaluateArgs, ExportDotArgs, LearnArgs, MlcArgs, RunArgs, SampleArgs, SkeletonArgs,
};
use crate::Failure;

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Data(Error::io(path, e)))
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    write_text(path, &(text + "\n"))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(Error::io(path, e)))
}

fn check_jobs(run: &RunArgs) -> Outcome {
    if run.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    Ok(())
}

fn test_config(args: &crate::args::TestArgs) -> Result<TestConfig, Failure> {
    let cfg = args.config();
    cfg.validate()?;
    Ok(cfg)
}

fn score_config(args: &crate::args::ScoreArgs) -> Result<ScoreConfig, Failure> {
    let cfg = args.config();
    cfg.validate()?;
    Ok(cfg)
}

fn elapsed(run: &RunArgs, start: Instant) -> Option<f64> {
    run.timings.then(|| start.elapsed().as_secs_f64())
}

fn names(data: &CategoricalDataset) -> Vec<String> {
    data.variables().iter().map(|v| v.name.clone()).collect()
}

fn with_seconds(mut report: Value, seconds: Option<f64>) -> Value {
    if let (Some(s), Some(obj)) = (seconds, report.as_object_mut()) {
        obj.insert("seconds".into(), json!(s));
    }
    report
}

pub fn sample(a: SampleArgs) -> Outcome {
    if !a.delimiter.is_ascii() {
        return Err(usage(format!("delimiter `{}` is not ASCII", a.delimiter)));
    }
    let net = read_network(&a.net)?;
    let delim = a.delimiter as u8;
    match (a.n, a.sizes) {
        (Some(n), _) => {
            let out = a.out.ok_or_else(|| usage("--out is required with --n"))?;
            forward_sample(&net, n, a.seed).write_csv_path(&out, delim)?;
            println!("wrote {n} rows to {}", out.display());
        }
        (None, Some(sizes)) => {
            let dir = a.out_dir.ok_or_else(|| usage("--out-dir is required with --sizes"))?;
            std::fs::create_dir_all(&dir).map_err(|e| Failure::Data(Error::io(&dir, e)))?;
            for n in sizes {
                let out = dir.join(format!("{}_{n}.csv", a.prefix));
                forward_sample(&net, n, a.seed).write_csv_path(&out, delim)?;
                println!("wrote {n} rows to {}", out.display());
            }
        }
        (None, None) => return Err(usage("give --n or --sizes")),
    }
    Ok(())
}

struct SkeletonPhase {
    skeleton: Skeleton,
    distinct_tests: Option<usize>,
}

fn learn_skeleton_phase(data: &CategoricalDataset, tc: &TestConfig, jobs: usize) -> SkeletonPhase {
    let tester = CiTester::new(data, *tc).with_cache();
    let skeleton = build_skeleton(&tester, &HpcConfig::from(tc), jobs);
    SkeletonPhase {
        skeleton,
        distinct_tests: tester.distinct_queries(),
    }
}

fn read_skeleton(path: &Path, data: &CategoricalDataset) -> Result<Skeleton, Failure> {
    let (node_names, sk) = Skeleton::from_json(&read_text(path)?)?;
    if node_names != names(data) {
        return Err(Failure::Data(Error::Mismatch(format!(
            "skeleton nodes in {} do not match the data columns",
            path.display()
        ))));
    }
    Ok(sk)
}

fn data_summary(path: &Path, data: &CategoricalDataset) -> Value {
    json!({
        "path": path.display().to_string(),
        "rows": data.n_rows(),
        "variables": data.n_vars(),
    })
}

pub fn learn(a: LearnArgs) -> Outcome {
    check_jobs(&a.run)?;
    if !(a.laplace >= 0.0) {
        return Err(usage("--laplace must be non-negative"));
    }
    let start = Instant::now();
    let tc = test_config(&a.test)?;
    let sc = score_config(&a.score)?;
    let data = load_csv(&a.data, a.csv.options().map_err(usage)?)?;
    let node_names = names(&data);

    let (skeleton, distinct_tests) = match &a.skeleton {
        Some(p) => (read_skeleton(p, &data)?, None),
        None => {
            let phase = learn_skeleton_phase(&data, &tc, a.run.jobs);
            (phase.skeleton, phase.distinct_tests)
        }
    };
    if let Some(p) = &a.skeleton_out {
        write_text(p, &(skeleton.to_json(&node_names)? + "\n"))?;
    }
    let skeleton_report = json!({
        "source": a.skeleton.as_ref().map(|p| p.display().to_string()),
        "edges": skeleton.n_edges(),
        "distinct_tests": distinct_tests,
    });

    let mut report = json!({
        "command": if a.skeleton_only { "learn --skeleton-only" } else { "learn" },
        "config": { "test": tc, "score": sc, "laplace": a.laplace },
        "data": data_summary(&a.data, &data),
        "skeleton": skeleton_report,
    });

    if a.skeleton_only {
        write_text(&a.out, &(skeleton.to_json(&node_names)? + "\n"))?;
        println!("skeleton: {} edges", skeleton.n_edges());
    } else {
        let result = hill_climb(&data, &skeleton, &sc)?;
        let n_edges = result.dag.n_edges();
        let net = BayesianNetwork::fit(result.dag, &data, a.laplace)?;
        write_text(&a.out, &(net.to_json()? + "\n"))?;
        report["search"] = json!({
            "initial_score": result.initial_score,
            "score": result.score,
            "moves": result.moves.len(),
            "edges": n_edges,
        });
        println!(
            "skeleton: {} edges; dag: {} edges; score {:.4}",
            skeleton.n_edges(),
            n_edges,
            result.score
        );
    }
    if let Some(p) = &a.report {
        write_json(p, &with_seconds(report, elapsed(&a.run, start)))?;
    }
    Ok(())
}

pub fn learn_skeleton(a: SkeletonArgs) -> Outcome {
    check_jobs(&a.run)?;
    let start = Instant::now();
    let tc = test_config(&a.test)?;
    let data = load_csv(&a.data, a.csv.options().map_err(usage)?)?;
    let phase = learn_skeleton_phase(&data, &tc, a.run.jobs);
    write_text(&a.out, &(phase.skeleton.to_json(&names(&data))? + "\n"))?;
    println!("skeleton: {} edges", phase.skeleton.n_edges());
    if let Some(p) = &a.report {
        let report = json!({
            "command": "learn-skeleton",
            "config": { "test": tc },
            "data": data_summary(&a.data, &data),
            "skeleton": { "edges": phase.skeleton.n_edges(), "distinct_tests": phase.distinct_tests },
        });
        write_json(p, &with_seconds(report, elapsed(&a.run, start)))?;
    }
    Ok(())
}

/// The truth's DAG relabelled into the learned network's variable order.
fn align(learned: &BayesianNetwork, truth: &BayesianNetwork) -> Result<Dag, Failure> {
    let n = learned.n_nodes();
    if truth.n_nodes() != n {
        return Err(Failure::Data(Error::Mismatch(format!(
            "learned network has {n} nodes, truth has {}",
            truth.n_nodes()
        ))));
    }
    let map: Vec<usize> = truth
        .variables()
        .iter()
        .map(|v| {
            learned
                .index_of(&v.name)
                .ok_or_else(|| Failure::Data(Error::Mismatch(format!("truth node `{}` missing from learned network", v.name))))
        })
        .collect::<Result<_, _>>()?;
    let edges: Vec<(usize, usize)> = truth.dag().edges().into_iter().map(|(u, v)| (map[u], map[v])).collect();
    Ok(Dag::from_edges(n, &edges)?)
}

fn load_with_schema(path: &Path, opts: CsvOptions, net: &BayesianNetwork) -> Result<CategoricalDataset, Failure> {
    Ok(RawTable::read_path(path, opts)?.to_categorical_with_schema(net.variables())?)
}

pub fn evaluate(a: EvaluateArgs) -> Outcome {
    let learned = read_network(&a.learned)?;
    let truth = read_network(&a.truth)?;
    let truth_dag = align(&learned, &truth)?;
    let metrics: SkeletonMetrics = skeleton_metrics(&Skeleton::from_dag(learned.dag()), &Skeleton::from_dag(&truth_dag))?;
    let shd_value = dag_shd(learned.dag(), &truth_dag)?;

    let opts = a.csv.options().map_err(usage)?;
    let score_cfg = |kind| ScoreConfig {
        score: kind,
        ess: a.ess,
        ..Default::default()
    };
    score_cfg(ScoreKind::Bdeu).validate()?;
    let mut scores = BTreeMap::new();
    for (part, path) in [("train", &a.train), ("test", &a.test)] {
        let Some(path) = path else { continue };
        let data = load_with_schema(path, opts, &learned)?;
        for (who, g) in [("learned", learned.dag()), ("truth", &truth_dag)] {
            scores.insert(
                format!("{who}_{part}"),
                json!({
                    "bdeu": total_score(&data, g, &score_cfg(ScoreKind::Bdeu)),
                    "bic": total_score(&data, g, &score_cfg(ScoreKind::Bic)),
                }),
            );
        }
    }
    let report = json!({
        "command": "evaluate",
        "config": {
            "learned": a.learned.display().to_string(),
            "truth": a.truth.display().to_string(),
            "train": a.train.as_ref().map(|p| p.display().to_string()),
            "test": a.test.as_ref().map(|p| p.display().to_string()),
            "ess": a.ess,
        },
        "skeleton": metrics,
        "shd": shd_value,
        "edges": { "learned": learned.dag().n_edges(), "truth": truth_dag.n_edges() },
        "scores": scores,
    });
    write_json(&a.report, &report)?;
    println!(
        "precision {:.4} recall {:.4} euclidean {:.4} shd {shd_value}",
        metrics.precision, metrics.recall, metrics.euclidean
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchmarkRow {
    size: usize,
    repeat: usize,
    seed: u64,
    edges: usize,
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    precision: f64,
    recall: f64,
    fpr: f64,
    euclidean: f64,
    shd: usize,
    bdeu_train: f64,
    bic_train: f64,
    bdeu_test: f64,
    bic_test: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seconds: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn benchmark(a: BenchmarkArgs) -> Outcome {
    check_jobs(&a.run)?;
    if a.sizes.is_empty() || a.repeats == 0 || a.test_size == 0 {
        return Err(usage("--sizes, --repeats and --test-size must be non-empty and positive"));
    }
    let tc = test_config(&a.test)?;
    let sc = score_config(&a.score)?;
    let truth = read_network(&a.truth)?;
    let truth_skeleton = Skeleton::from_dag(truth.dag());
    let truth_cpdag = dag_to_cpdag(truth.dag());
    let holdout = forward_sample(&truth, a.test_size, a.seed);

    let mut rows = Vec::new();
    let mut run_index = 0u64;
    for &size in &a.sizes {
        for repeat in 0..a.repeats {
            run_index += 1;
            let seed = a.seed.wrapping_add(run_index);
            let start = Instant::now();
            let data = forward_sample(&truth, size, seed);
            let phase = learn_skeleton_phase(&data, &tc, a.run.jobs);
            let result = hill_climb(&data, &phase.skeleton, &sc)?;
            let seconds = elapsed(&a.run, start);
            let m: SkeletonMetrics = skeleton_metrics(&Skeleton::from_dag(&result.dag), &truth_skeleton)?;
            let h: HoldoutScores = holdout_scores(&result.dag, &data, &holdout, &sc)?;
            rows.push(BenchmarkRow {
                size,
                repeat,
                seed,
                edges: result.dag.n_edges(),
                tp: m.tp,
                fp: m.fp,
                fn_: m.fn_,
                precision: m.precision,
                recall: m.recall,
                fpr: m.fpr,
                euclidean: m.euclidean,
                shd: shd(&dag_to_cpdag(&result.dag), &truth_cpdag)?,
                bdeu_train: h.bdeu_train,
                bic_train: h.bic_train,
                bdeu_test: h.bdeu_test,
                bic_test: h.bic_test,
                seconds,
            });
        }
    }

    let mut w = csv::Writer::from_path(&a.out).map_err(Error::from)?;
    for r in &rows {
        w.serialize(r).map_err(Error::from)?;
    }
    w.flush().map_err(|e| Failure::Data(Error::io(&a.out, e)))?;

    println!("{:>8} {:>10} {:>10} {:>10} {:>8}", "size", "precision", "recall", "euclidean", "shd");
    let mut summary = Vec::new();
    for &size in &a.sizes {
        let of = |f: &dyn Fn(&BenchmarkRow) -> f64| median(rows.iter().filter(|r| r.size == size).map(f).collect());
        let s = json!({
            "size": size,
            "median_precision": of(&|r| r.precision),
            "median_recall": of(&|r| r.recall),
            "median_euclidean": of(&|r| r.euclidean),
            "median_shd": of(&|r| r.shd as f64),
            "median_bdeu_test": of(&|r| r.bdeu_test),
        });
        println!(
            "{size:>8} {:>10.4} {:>10.4} {:>10.4} {:>8.1}",
            s["median_precision"].as_f64().unwrap_or(f64::NAN),
            s["median_recall"].as_f64().unwrap_or(f64::NAN),
            s["median_euclidean"].as_f64().unwrap_or(f64::NAN),
            s["median_shd"].as_f64().unwrap_or(f64::NAN),
        );
        summary.push(s);
    }
    if let Some(p) = &a.report {
        let report = json!({
            "command": "benchmark",
            "config": {
                "truth": a.truth.display().to_string(),
                "sizes": a.sizes,
                "repeats": a.repeats,
                "seed": a.seed,
                "test_size": a.test_size,
                "test": tc,
                "score": sc,
            },
            "summary": summary,
            "runs": rows,
        });
        write_json(p, &report)?;
    }
    Ok(())
}

fn parse_scenarios(spec: &str) -> Result<Vec<Scenario>, Failure> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(Scenario::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let s: Scenario = part.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(usage("no scenario given"));
    }
    Ok(out)
}

pub fn mlc(a: MlcArgs) -> Outcome {
    check_jobs(&a.run)?;
    let start = Instant::now();
    let scenarios = parse_scenarios(&a.scenario)?;
    let tc = test_config(&a.test)?;
    let sc = score_config(&a.score)?;
    let raw = RawTable::read_path(&a.data, a.csv.options().map_err(usage)?)?;
    let labels: Vec<String> = match (&a.labels, a.label_count) {
        (Some(l), _) => l.clone(),
        (None, Some(k)) => {
            if k == 0 || k >= raw.names.len() {
                return Err(usage(format!("--label-count must be in 1..{}", raw.names.len())));
            }
            raw.names[raw.names.len() - k..].to_vec()
        }
        (None, None) => return Err(usage("give --labels or --label-count")),
    };
    let data = MlcData::from_raw(&raw, &labels, a.max_discrete_levels)?;
    let cfg = MlcConfig {
        test: tc,
        hpc: HpcConfig::from(&tc),
        score: sc,
        folds: a.folds,
        seed: a.seed,
        smoothing: a.smoothing,
        jobs: a.run.jobs,
        export_blocks: a.export_blocks.clone(),
    };
    let reports = run_scenarios(&data, &scenarios, &cfg)?;

    println!("{:>8} {:>10} {:>8} {:>8}", "scenario", "accuracy", "sd", "blocks");
    for r in &reports {
        println!(
            "{:>8} {:>10.4} {:>8.4} {:>8.1}",
            r.scenario.to_string(),
            r.mean_accuracy,
            r.sd_accuracy,
            r.blocks_per_fold.median
        );
    }
    let report = json!({
        "command": "mlc",
        "config": {
            "data": a.data.display().to_string(),
            "labels": labels,
            "numeric_features": data.n_numeric(),
            "max_discrete_levels": a.max_discrete_levels,
            "mlc": cfg,
        },
        "scenarios": reports,
    });
    write_json(&a.report, &with_seconds(report, elapsed(&a.run, start)))
}

pub fn export_dot(a: ExportDotArgs) -> Outcome {
    let dot = match (&a.net, &a.skeleton) {
        (Some(p), _) => {
            let net = read_network(p)?;
            let node_names: Vec<String> = net.variables().iter().map(|v| v.name.clone()).collect();
            if a.cpdag {
                pdag_to_dot(&node_names, &dag_to_cpdag(net.dag()))
            } else {
                dag_to_dot(&node_names, net.dag())
            }
        }
        (None, Some(p)) => {
            let (node_names, sk) = Skeleton::from_json(&read_text(p)?)?;
            let mut pdag = Pdag::new(sk.n_nodes());
            for (u, v) in sk.edges() {
                pdag.set_undirected(u, v);
            }
            pdag_to_dot(&node_names, &pdag)
        }
        (None, None) => return Err(usage("give --net or --skeleton")),
    };
    match &a.out {
        Some(p) => write_text(p, &dot),
        None => {
            print!("{dot}");
            Ok(())
        }
    }
}
