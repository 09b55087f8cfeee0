//! Multi-label classification through minimal label powersets: graphical
//! decomposition of the label set, powerset Markov boundaries, per-block
//! naive Bayes classifiers and cross-validated scenarios.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bn::{markov_sets, Dag};
use crate::citest::{CiTester, TestConfig};
use crate::dataset::{encode_first_appearance, kfold, CategoricalDataset, Level, MedianSplit, RawTable, Variable};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::score_search::{hill_climb, ScoreConfig};
use crate::skeleton::{hpc_many, HpcConfig, Skeleton};

fn find(parent: &mut [usize], v: usize) -> usize {
    let mut r = v;
    while parent[r] != r {
        r = parent[r];
    }
    let mut v = v;
    while parent[v] != r {
        let next = parent[v];
        parent[v] = r;
        v = next;
    }
    r
}

/// Connected components of the label graph in which two labels are linked
/// when adjacent in `g` or when they share a non-label child.
///
/// Blocks are sorted internally and ordered by their smallest member.
pub fn minimal_label_powersets(g: &Dag, labels: &[usize]) -> Vec<Vec<usize>> {
    let is_label: BTreeSet<usize> = labels.iter().copied().collect();
    let mut parent: Vec<usize> = (0..g.n_nodes()).collect();
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for &y in &is_label {
        for &w in g.parents(y).iter().chain(g.children(y)) {
            if is_label.contains(&w) {
                union(&mut parent, y, w);
            }
        }
        for &x in g.children(y).iter().filter(|x| !is_label.contains(x)) {
            for &w in g.parents(x) {
                if is_label.contains(&w) {
                    union(&mut parent, y, w);
                }
            }
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &y in &is_label {
        let root = find(&mut parent, y);
        blocks.entry(root).or_default().push(y);
    }
    let mut out: Vec<Vec<usize>> = blocks.into_values().collect();
    out.sort();
    out
}

/// Union of parents, children and spouses of the block members, minus every label.
pub fn powerset_markov_boundary(g: &Dag, block: &[usize], labels: &[usize]) -> Vec<usize> {
    let m = markov_sets(g);
    let mut out = BTreeSet::new();
    for &y in block {
        out.extend(m.pc[y].iter().chain(&m.sp[y]).copied());
    }
    for y in labels {
        out.remove(y);
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPowersetDecomposition {
    pub blocks: Vec<Vec<usize>>,
    pub boundaries: Vec<Vec<usize>>,
}

impl LabelPowersetDecomposition {
    pub fn from_dag(g: &Dag, labels: &[usize]) -> Self {
        let blocks = minimal_label_powersets(g, labels);
        let boundaries = blocks.iter().map(|b| powerset_markov_boundary(g, b, labels)).collect();
        LabelPowersetDecomposition { blocks, boundaries }
    }
}

/// Naive Bayes over a feature subset, with one class per observed joint
/// configuration of the block's labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowersetClassifier {
    pub block: Vec<usize>,
    pub features: Vec<usize>,
    /// Label combinations in lexicographic order; the class index is the position.
    pub classes: Vec<Vec<Level>>,
    log_prior: Vec<f64>,
    /// Per feature, `log p(level | class)` laid out `[class * arity + level]`.
    log_lik: Vec<Vec<f64>>,
    arities: Vec<usize>,
}

impl PowersetClassifier {
    pub fn fit(train: &CategoricalDataset, block: &[usize], features: &[usize], smoothing: f64) -> Result<Self> {
        if block.is_empty() {
            return Err(Error::invalid("label block is empty"));
        }
        if let Some(f) = features.iter().find(|f| block.contains(f)) {
            return Err(Error::invalid(format!("feature `{}` is also a label of the block", train.name(*f))));
        }
        if !(smoothing >= 0.0) {
            return Err(Error::invalid("smoothing must be non-negative"));
        }
        let n = train.n_rows();
        if n == 0 {
            return Err(Error::Empty("no training rows".into()));
        }
        let combo = |row: usize| -> Vec<Level> { block.iter().map(|&y| train.value(row, y)).collect() };
        let classes: Vec<Vec<Level>> = (0..n).map(combo).collect::<BTreeSet<_>>().into_iter().collect();
        let index: BTreeMap<&[Level], usize> = classes.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
        let class_of: Vec<usize> = (0..n).map(|r| index[combo(r).as_slice()]).collect();
        let k = classes.len();

        let mut class_count = vec![0usize; k];
        for &c in &class_of {
            class_count[c] += 1;
        }
        let denom = n as f64 + smoothing * k as f64;
        let log_prior = class_count.iter().map(|&c| ((c as f64 + smoothing) / denom).ln()).collect();

        let arities: Vec<usize> = features.iter().map(|&f| train.arity(f)).collect();
        let log_lik = features
            .iter()
            .zip(&arities)
            .map(|(&f, &a)| {
                let mut counts = vec![0usize; k * a];
                for (&c, &lvl) in class_of.iter().zip(train.column(f)) {
                    counts[c * a + lvl as usize] += 1;
                }
                counts
                    .chunks(a)
                    .zip(&class_count)
                    .flat_map(|(row, &nc)| {
                        let d = nc as f64 + smoothing * a as f64;
                        row.iter().map(move |&x| {
                            if d > 0.0 {
                                ((x as f64 + smoothing) / d).ln()
                            } else {
                                -(a as f64).ln()
                            }
                        })
                    })
                    .collect()
            })
            .collect();

        Ok(PowersetClassifier {
            block: block.to_vec(),
            features: features.to_vec(),
            classes,
            log_prior,
            log_lik,
            arities,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Unnormalized log posterior of every class for a full data row.
    ///
    /// A feature level outside the training arity carries no evidence.
    pub fn class_scores(&self, row: &[Level]) -> Vec<f64> {
        let mut scores = self.log_prior.clone();
        for ((&f, lik), &a) in self.features.iter().zip(&self.log_lik).zip(&self.arities) {
            let lvl = row[f] as usize;
            if lvl >= a {
                continue;
            }
            for (c, s) in scores.iter_mut().enumerate() {
                *s += lik[c * a + lvl];
            }
        }
        scores
    }

    /// Most probable class; ties go to the lowest class index.
    pub fn predict_class(&self, row: &[Level]) -> usize {
        argmax(&self.class_scores(row))
    }

    pub fn predict(&self, row: &[Level]) -> &[Level] {
        &self.classes[self.predict_class(row)]
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Joint label assignment, aligned with `labels`, from the per-block argmaxes.
pub fn predict_mpe(classifiers: &[PowersetClassifier], labels: &[usize], row: &[Level]) -> Result<Vec<Level>> {
    let mut out: Vec<Option<Level>> = vec![None; labels.len()];
    for clf in classifiers {
        for (&y, &v) in clf.block.iter().zip(clf.predict(row)) {
            let pos = labels
                .iter()
                .position(|&l| l == y)
                .ok_or_else(|| Error::Mismatch(format!("block variable {y} is not a label")))?;
            if out[pos].replace(v).is_some() {
                return Err(Error::Mismatch(format!("label {y} covered by two blocks")));
            }
        }
    }
    out.into_iter()
        .zip(labels)
        .map(|(v, y)| v.ok_or_else(|| Error::Mismatch(format!("label {y} covered by no block"))))
        .collect()
}

/// Fraction of rows predicted exactly on every label.
pub fn global_accuracy<T: Real>(pred: &[Vec<Level>], truth: &[Vec<Level>]) -> Result<T> {
    if pred.len() != truth.len() || pred.iter().zip(truth).any(|(p, t)| p.len() != t.len()) {
        return Err(Error::Mismatch("prediction and truth shapes differ".into()));
    }
    if pred.is_empty() {
        return Err(Error::Empty("no rows to score".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(T::from_count(hits) / T::from_count(pred.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "br")]
    Br,
    #[serde(rename = "br+mb")]
    BrMb,
    #[serde(rename = "mlp")]
    Mlp,
    #[serde(rename = "mlp+mb")]
    MlpMb,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Br, Scenario::BrMb, Scenario::Mlp, Scenario::MlpMb];

    fn uses_powersets(self) -> bool {
        matches!(self, Scenario::Mlp | Scenario::MlpMb)
    }

    fn uses_boundaries(self) -> bool {
        matches!(self, Scenario::BrMb | Scenario::MlpMb)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Br => "br",
            Scenario::BrMb => "br+mb",
            Scenario::Mlp => "mlp",
            Scenario::MlpMb => "mlp+mb",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "br" => Ok(Scenario::Br),
            "br+mb" => Ok(Scenario::BrMb),
            "mlp" => Ok(Scenario::Mlp),
            "mlp+mb" => Ok(Scenario::MlpMb),
            other => Err(Error::invalid(format!(
                "unknown scenario `{other}` (expected br, br+mb, mlp or mlp+mb)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MlcConfig<T: Real> {
    pub test: TestConfig<T>,
    pub hpc: HpcConfig<T>,
    pub score: ScoreConfig<T>,
    pub folds: usize,
    pub seed: u64,
    pub smoothing: f64,
    #[serde(skip)]
    pub jobs: usize,
    /// Directory receiving per-fold, per-block training and test files.
    #[serde(skip)]
    pub export_blocks: Option<PathBuf>,
}

impl<T: Real> Default for MlcConfig<T> {
    fn default() -> Self {
        MlcConfig {
            test: TestConfig::default(),
            hpc: HpcConfig::default(),
            score: ScoreConfig::default(),
            folds: 10,
            seed: 0,
            smoothing: 1.0,
            jobs: 1,
            export_blocks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Column {
    Categorical(Variable, Vec<Level>),
    Numeric(String, Vec<f64>),
}

impl Column {
    fn name(&self) -> &str {
        match self {
            Column::Categorical(v, _) => &v.name,
            Column::Numeric(n, _) => n,
        }
    }
}

/// Multi-label data whose numeric feature columns are binarized per fold.
#[derive(Debug, Clone, PartialEq)]
pub struct MlcData {
    columns: Vec<Column>,
    labels: Vec<usize>,
    n_rows: usize,
}

impl MlcData {
    pub fn from_categorical(data: &CategoricalDataset, labels: &[usize]) -> Result<Self> {
        let columns = data
            .variables()
            .iter()
            .enumerate()
            .map(|(i, v)| Column::Categorical(v.clone(), data.column(i).to_vec()))
            .collect();
        MlcData::assemble(columns, labels.to_vec(), data.n_rows())
    }

    /// Feature columns whose tokens are all numeric with more than
    /// `max_discrete_levels` distinct values are treated as continuous.
    pub fn from_raw(raw: &RawTable, labels: &[String], max_discrete_levels: usize) -> Result<Self> {
        let mut label_idx = Vec::with_capacity(labels.len());
        for name in labels {
            let i = raw
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Mismatch(format!("label column `{name}` not found")))?;
            label_idx.push(i);
        }
        let mut columns = Vec::with_capacity(raw.names.len());
        for (i, (name, tokens)) in raw.names.iter().zip(&raw.columns).enumerate() {
            let numeric = if label_idx.contains(&i) { None } else { raw.numeric_column(i) };
            let col = match numeric {
                Some(values) if distinct_exceeds(&values, max_discrete_levels) => Column::Numeric(name.clone(), values),
                _ => {
                    let (var, values) = encode_first_appearance(name, tokens)?;
                    if var.arity() < 2 {
                        return Err(Error::ConstantColumn(name.clone()));
                    }
                    Column::Categorical(var, values)
                }
            };
            columns.push(col);
        }
        MlcData::assemble(columns, label_idx, raw.n_rows())
    }

    fn assemble(columns: Vec<Column>, labels: Vec<usize>, n_rows: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("no label columns given"));
        }
        let distinct: BTreeSet<usize> = labels.iter().copied().collect();
        if distinct.len() != labels.len() || labels.iter().any(|&l| l >= columns.len()) {
            return Err(Error::invalid("label columns must be distinct and in range"));
        }
        if labels.len() == columns.len() {
            return Err(Error::invalid("no feature columns left after removing labels"));
        }
        Ok(MlcData { columns, labels, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name().to_string()).collect()
    }

    pub fn features(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|i| !self.labels.contains(i)).collect()
    }

    pub fn n_numeric(&self) -> usize {
        self.columns.iter().filter(|c| matches!(c, Column::Numeric(..))).count()
    }

    /// Discrete train and test sets; numeric thresholds come from `train` rows only.
    pub fn split(&self, train: &[usize], test: &[usize]) -> Result<(CategoricalDataset, CategoricalDataset)> {
        let mut vars = Vec::with_capacity(self.columns.len());
        let mut train_cols = Vec::with_capacity(self.columns.len());
        let mut test_cols = Vec::with_capacity(self.columns.len());
        for col in &self.columns {
            match col {
                Column::Categorical(v, values) => {
                    vars.push(v.clone());
                    train_cols.push(train.iter().map(|&r| values[r]).collect());
                    test_cols.push(test.iter().map(|&r| values[r]).collect());
                }
                Column::Numeric(name, values) => {
                    let tr: Vec<f64> = train.iter().map(|&r| values[r]).collect();
                    let te: Vec<f64> = test.iter().map(|&r| values[r]).collect();
                    // a column constant on the training rows keeps its lone value in the low class
                    let split = MedianSplit::fit(&tr).unwrap_or_else(|_| MedianSplit {
                        threshold: tr.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    });
                    vars.push(Variable::new(name.clone(), vec![format!("<={}", split.threshold), format!(">{}", split.threshold)]));
                    train_cols.push(split.apply(&tr));
                    test_cols.push(split.apply(&te));
                }
            }
        }
        Ok((
            CategoricalDataset::new(vars.clone(), train_cols)?,
            CategoricalDataset::new(vars, test_cols)?,
        ))
    }
}

fn distinct_exceeds(values: &[f64], limit: usize) -> bool {
    let mut seen: BTreeSet<u64> = BTreeSet::new();
    for v in values {
        seen.insert(v.to_bits());
        if seen.len() > limit {
            return true;
        }
    }
    false
}

/// Learns a DAG over the neighbourhood of the labels: HPC runs for the labels
/// and their neighbours, then hill climbing runs on those nodes and their
/// neighbours. Nodes outside that set stay isolated.
pub fn learn_local_dag<T: Real>(
    data: &CategoricalDataset,
    labels: &[usize],
    test: &TestConfig<T>,
    hpc_cfg: &HpcConfig<T>,
    score: &ScoreConfig<T>,
    jobs: usize,
) -> Result<Dag> {
    let n = data.n_vars();
    let tester = CiTester::new(data, *test).with_cache();
    let universe: Vec<usize> = (0..n).collect();
    let mut pc: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&t, out) in labels.iter().zip(hpc_many(labels, &tester, &universe, hpc_cfg, jobs)) {
        pc.insert(t, out);
    }
    let ring: Vec<usize> = pc
        .values()
        .flatten()
        .copied()
        .filter(|v| !pc.contains_key(v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for (&t, out) in ring.iter().zip(hpc_many(&ring, &tester, &universe, hpc_cfg, jobs)) {
        pc.insert(t, out);
    }

    let mut nodes: BTreeSet<usize> = pc.keys().copied().collect();
    nodes.extend(pc.values().flatten().copied());
    let nodes: Vec<usize> = nodes.into_iter().collect();
    let local_of: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut skeleton = Skeleton::empty(nodes.len());
    for (&t, out) in &pc {
        for &u in out {
            let keep = match pc.get(&u) {
                Some(back) => back.contains(&t),
                None => true,
            };
            if keep {
                skeleton.insert(local_of[&t], local_of[&u]);
            }
        }
    }

    let sub = data.select_columns(&nodes);
    let result = hill_climb(&sub, &skeleton, score)?;
    let edges: Vec<(usize, usize)> = result.dag.edges().into_iter().map(|(u, v)| (nodes[u], nodes[v])).collect();
    Dag::from_edges(n, &edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FoldReport<T: Real> {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Label names of each block.
    pub blocks: Vec<Vec<String>>,
    pub classes_per_block: Vec<usize>,
    pub boundary_sizes: Vec<usize>,
    pub accuracy: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Spread<T: Real> {
    pub min: T,
    pub median: T,
    pub max: T,
}

impl<T: Real> Spread<T> {
    fn of(values: &[T]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        Spread {
            min: v[0],
            median: median_sorted(&v),
            max: v[v.len() - 1],
        }
    }
}

fn median_sorted<T: Real>(v: &[T]) -> T {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ScenarioReport<T: Real> {
    pub scenario: Scenario,
    pub n_rows: usize,
    pub n_labels: usize,
    pub n_features: usize,
    pub mean_accuracy: T,
    pub sd_accuracy: T,
    /// Number of blocks per fold.
    pub blocks_per_fold: Spread<T>,
    /// Labels per block, pooled over folds.
    pub labels_per_block: Spread<T>,
    pub folds: Vec<FoldReport<T>>,
}

/// Cross-validated subset accuracy of one scenario.
pub fn run_scenario<T: Real>(data: &MlcData, scenario: Scenario, cfg: &MlcConfig<T>) -> Result<ScenarioReport<T>> {
    cfg.test.validate()?;
    cfg.score.validate()?;
    let assignment = kfold(data.n_rows(), cfg.folds, cfg.seed)?;
    let names = data.names();
    let labels = data.labels().to_vec();
    let features = data.features();
    let mut folds = Vec::with_capacity(cfg.folds);

    for fold in 0..cfg.folds {
        let (train_rows, test_rows) = (assignment.train_rows(fold), assignment.test_rows(fold));
        let (train, test) = data.split(&train_rows, &test_rows)?;

        let dag = if scenario == Scenario::Br {
            None
        } else {
            Some(learn_local_dag(&train, &labels, &cfg.test, &cfg.hpc, &cfg.score, cfg.jobs)?)
        };
        let blocks: Vec<Vec<usize>> = match (&dag, scenario.uses_powersets()) {
            (Some(g), true) => minimal_label_powersets(g, &labels),
            _ => labels.iter().map(|&y| vec![y]).collect(),
        };
        let boundaries: Vec<Vec<usize>> = match (&dag, scenario.uses_boundaries()) {
            (Some(g), true) => blocks.iter().map(|b| powerset_markov_boundary(g, b, &labels)).collect(),
            _ => vec![features.clone(); blocks.len()],
        };

        let classifiers = blocks
            .iter()
            .zip(&boundaries)
            .map(|(b, m)| PowersetClassifier::fit(&train, b, m, cfg.smoothing))
            .collect::<Result<Vec<_>>>()?;

        if let Some(dir) = &cfg.export_blocks {
            export_fold_blocks(dir, scenario, fold, &train, &test, &classifiers)?;
        }

        let mut pred = Vec::with_capacity(test.n_rows());
        let mut truth = Vec::with_capacity(test.n_rows());
        for r in 0..test.n_rows() {
            let row = test.row(r);
            pred.push(predict_mpe(&classifiers, &labels, &row)?);
            truth.push(labels.iter().map(|&y| row[y]).collect());
        }
        folds.push(FoldReport {
            fold,
            n_train: train.n_rows(),
            n_test: test.n_rows(),
            blocks: blocks.iter().map(|b| b.iter().map(|&y| names[y].clone()).collect()).collect(),
            classes_per_block: classifiers.iter().map(PowersetClassifier::n_classes).collect(),
            boundary_sizes: boundaries.iter().map(Vec::len).collect(),
            accuracy: global_accuracy(&pred, &truth)?,
        });
    }

    let acc: Vec<T> = folds.iter().map(|f| f.accuracy).collect();
    let k = T::from_count(acc.len());
    let mean = acc.iter().copied().sum::<T>() / k;
    let var = if acc.len() > 1 {
        acc.iter().map(|&a| (a - mean).powi(2)).sum::<T>() / (k - T::one())
    } else {
        T::zero()
    };
    let block_counts: Vec<T> = folds.iter().map(|f| T::from_count(f.blocks.len())).collect();
    let block_sizes: Vec<T> = folds
        .iter()
        .flat_map(|f| f.blocks.iter().map(|b| T::from_count(b.len())))
        .collect();
    Ok(ScenarioReport {
        scenario,
        n_rows: data.n_rows(),
        n_labels: labels.len(),
        n_features: features.len(),
        mean_accuracy: mean,
        sd_accuracy: var.sqrt(),
        blocks_per_fold: Spread::of(&block_counts),
        labels_per_block: Spread::of(&block_sizes),
        folds,
    })
}

/// Writes each block's boundary features plus a joint `class` column, one
/// training and one test file per block.
fn export_fold_blocks(
    dir: &std::path::Path,
    scenario: Scenario,
    fold: usize,
    train: &CategoricalDataset,
    test: &CategoricalDataset,
    classifiers: &[PowersetClassifier],
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (b, clf) in classifiers.iter().enumerate() {
        for (part, data) in [("train", train), ("test", test)] {
            let path = dir.join(format!("{}_fold{fold}_block{b}_{part}.csv", scenario.to_string().replace('+', "_")));
            let mut w = csv::Writer::from_path(&path)?;
            let mut header: Vec<&str> = clf.features.iter().map(|&f| data.name(f)).collect();
            header.push("class");
            w.write_record(&header)?;
            for r in 0..data.n_rows() {
                let mut rec: Vec<String> = clf
                    .features
                    .iter()
                    .map(|&f| data.variable(f).levels[data.value(r, f) as usize].clone())
                    .collect();
                let class: Vec<&str> = clf
                    .block
                    .iter()
                    .map(|&y| data.variable(y).levels[data.value(r, y) as usize].as_str())
                    .collect();
                rec.push(class.join("|"));
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

/// Runs several scenarios on the same folds.
pub fn run_scenarios<T: Real>(
    data: &MlcData,
    scenarios: &[Scenario],
    cfg: &MlcConfig<T>,
) -> Result<Vec<ScenarioReport<T>>> {
    scenarios.iter().map(|&s| run_scenario(data, s, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(n: usize, e: &[(usize, usize)]) -> Dag {
        Dag::from_edges(n, e).unwrap()
    }

    fn dataset(arities: &[usize], cols: Vec<Vec<Level>>) -> CategoricalDataset {
        let vars = arities
            .iter()
            .enumerate()
            .map(|(i, &a)| Variable::with_arity(format!("V{i}"), a))
            .collect();
        CategoricalDataset::new(vars, cols).unwrap()
    }

    #[test]
    fn collider_merges_labels() {
        // Y1=0, Y2=1, Y3=2, X1=3
        let g = dag(4, &[(0, 3), (1, 3)]);
        assert_eq!(minimal_label_powersets(&g, &[0, 1, 2]), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn disconnected_labels_are_singletons() {
        let g = dag(5, &[(3, 0), (3, 1), (4, 2)]);
        assert_eq!(minimal_label_powersets(&g, &[0, 1, 2]), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn boundary_examples() {
        // Y=0, X1=1, X2=2: Y -> X1, X2 -> Y
        let g = dag(3, &[(0, 1), (2, 0)]);
        assert_eq!(powerset_markov_boundary(&g, &[0], &[0]), vec![1, 2]);
        // Y1=0, Y2=1, X=2, X2=3: Y1 -> X <- X2, Y1 -> Y2
        let g = dag(4, &[(0, 2), (3, 2), (0, 1)]);
        assert_eq!(powerset_markov_boundary(&g, &[0, 1], &[0, 1]), vec![2, 3]);
    }

    #[test]
    fn perfect_feature_is_learned() {
        let x: Vec<Level> = (0..100).map(|i| (i % 2) as Level).collect();
        let d = dataset(&[2, 2], vec![x.clone(), x]);
        let clf = PowersetClassifier::fit(&d, &[0], &[1], 1.0).unwrap();
        assert!((0..100).all(|r| clf.predict(&d.row(r)) == [d.value(r, 0)]));
    }

    #[test]
    fn no_features_predicts_majority() {
        let y: Vec<Level> = vec![0, 1, 1, 1, 0, 1];
        let x: Vec<Level> = vec![0, 1, 0, 1, 0, 1];
        let d = dataset(&[2, 2], vec![y, x]);
        let clf = PowersetClassifier::fit(&d, &[0], &[], 1.0).unwrap();
        assert_eq!(clf.predict(&[0, 0]), [1]);
        assert!(PowersetClassifier::fit(&d, &[], &[1], 1.0).is_err());
    }

    #[test]
    fn unseen_level_does_not_crash() {
        let d = dataset(&[2, 2], vec![vec![0, 1, 0, 1], vec![0, 1, 0, 1]]);
        let clf = PowersetClassifier::fit(&d, &[0], &[1], 1.0).unwrap();
        assert_eq!(clf.class_scores(&[0, 7]).len(), 2);
    }

    #[test]
    fn single_class_always_predicted() {
        let d = dataset(&[3, 2], vec![vec![2, 2, 2], vec![0, 1, 0]]);
        let clf = PowersetClassifier::fit(&d, &[0], &[1], 1.0).unwrap();
        assert_eq!(clf.n_classes(), 1);
        assert_eq!(predict_mpe(&[clf], &[0], &[0, 1]).unwrap(), vec![2]);
    }

    #[test]
    fn accuracy_examples() {
        let t = vec![vec![0, 1], vec![1, 1], vec![0, 0], vec![1, 0]];
        assert_eq!(global_accuracy::<f64>(&t, &t).unwrap(), 1.0);
        let mut p = t.clone();
        p[2][1] = 1;
        assert_eq!(global_accuracy::<f64>(&p, &t).unwrap(), 0.75);
        let wrong: Vec<Vec<Level>> = t.iter().map(|r| r.iter().map(|v| 1 - v).collect()).collect();
        assert_eq!(global_accuracy::<f64>(&wrong, &t).unwrap(), 0.0);
        assert!(global_accuracy::<f64>(&t[..2], &t).is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.to_string().parse::<Scenario>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert!("lp".parse::<Scenario>().is_err());
    }

    #[test]
    fn numeric_features_split_on_training_rows() {
        let raw = RawTable {
            names: vec!["x".into(), "y".into()],
            columns: vec![
                (0..20).map(|i| format!("{}.5", i)).collect(),
                (0..20).map(|i| if i < 10 { "a".into() } else { "b".into() }).collect(),
            ],
        };
        let d = MlcData::from_raw(&raw, &["y".into()], 10).unwrap();
        assert_eq!(d.n_numeric(), 1);
        let train: Vec<usize> = (0..10).collect();
        let (tr, te) = d.split(&train, &[15]).unwrap();
        // training median is 4.5+5.5 / 2 = 5.0, so 15.5 lands high
        assert_eq!(tr.column(0).iter().filter(|&&v| v == 0).count(), 5);
        assert_eq!(te.value(0, 0), 1);
    }
}
