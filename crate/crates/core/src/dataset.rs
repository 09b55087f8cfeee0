//! Discrete datasets, contingency tables and cross-validation folds.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level index of a discrete variable.
pub type Level = u16;

const MISSING_TOKENS: [&str; 3] = ["", "?", "NA"];

/// A named discrete variable; its arity is the number of levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub levels: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, levels: Vec<String>) -> Self {
        Variable {
            name: name.into(),
            levels,
        }
    }

    /// A variable whose levels are the tokens `"0"`, `"1"`, ...
    pub fn with_arity(name: impl Into<String>, arity: usize) -> Self {
        Variable::new(name, (0..arity).map(|l| l.to_string()).collect())
    }

    pub fn arity(&self) -> usize {
        self.levels.len()
    }

    pub fn level_of(&self, token: &str) -> Option<Level> {
        self.levels
            .iter()
            .position(|l| l == token)
            .map(|i| i as Level)
    }
}

/// Column-oriented table of discrete observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalDataset {
    variables: Vec<Variable>,
    columns: Vec<Vec<Level>>,
    n_rows: usize,
}

impl CategoricalDataset {
    /// Builds a dataset, checking that columns are equally long and that
    /// every cell is below the arity of its variable.
    pub fn new(variables: Vec<Variable>, columns: Vec<Vec<Level>>) -> Result<Self> {
        if variables.len() != columns.len() {
            return Err(Error::Mismatch(format!(
                "{} variables but {} columns",
                variables.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (var, col) in variables.iter().zip(&columns) {
            if var.arity() == 0 {
                return Err(Error::invalid(format!("variable `{}` has no levels", var.name)));
            }
            if col.len() != n_rows {
                return Err(Error::Mismatch(format!(
                    "column `{}` has {} rows, expected {n_rows}",
                    var.name,
                    col.len()
                )));
            }
            if let Some(&bad) = col.iter().find(|&&v| v as usize >= var.arity()) {
                return Err(Error::invalid(format!(
                    "level {bad} out of range for `{}` (arity {})",
                    var.name,
                    var.arity()
                )));
            }
        }
        Ok(CategoricalDataset {
            variables,
            columns,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: usize) -> &Variable {
        &self.variables[var]
    }

    pub fn name(&self, var: usize) -> &str {
        &self.variables[var].name
    }

    pub fn arity(&self, var: usize) -> usize {
        self.variables[var].arity()
    }

    pub fn column(&self, var: usize) -> &[Level] {
        &self.columns[var]
    }

    pub fn value(&self, row: usize, var: usize) -> Level {
        self.columns[var][row]
    }

    pub fn row(&self, row: usize) -> Vec<Level> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Rows in the given order; variable metadata is kept.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        CategoricalDataset {
            variables: self.variables.clone(),
            columns,
            n_rows: rows.len(),
        }
    }

    pub fn select_columns(&self, vars: &[usize]) -> Self {
        CategoricalDataset {
            variables: vars.iter().map(|&v| self.variables[v].clone()).collect(),
            columns: vars.iter().map(|&v| self.columns[v].clone()).collect(),
            n_rows: self.n_rows,
        }
    }

    /// Writes the dataset with a header row, mapping levels back to tokens.
    pub fn write_csv<W: Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(writer);
        w.write_record(self.variables.iter().map(|v| v.name.as_str()))?;
        let mut record = Vec::with_capacity(self.n_vars());
        for row in 0..self.n_rows {
            record.clear();
            for (var, col) in self.variables.iter().zip(&self.columns) {
                record.push(var.levels[col[row] as usize].as_str());
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file), delimiter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            has_header: true,
        }
    }
}

/// Rectangular table of raw string tokens, as read from a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub names: Vec<String>,
    /// One vector of tokens per column.
    pub columns: Vec<Vec<String>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn read<R: Read>(reader: R, opts: CsvOptions) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(opts.delimiter)
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let mut names: Option<Vec<String>> = None;
        let mut columns: Vec<Vec<String>> = Vec::new();
        let mut width = 0;
        let mut line = 0usize;
        for rec in records.by_ref() {
            let rec = rec?;
            line = rec.position().map_or(line + 1, |p| p.line() as usize);
            if names.is_none() {
                width = rec.len();
                if opts.has_header {
                    names = Some(rec.iter().map(|s| s.trim().to_string()).collect());
                    columns = vec![Vec::new(); width];
                    continue;
                }
                names = Some((1..=width).map(|i| format!("V{i}")).collect());
                columns = vec![Vec::new(); width];
            }
            if rec.len() != width {
                return Err(Error::RaggedRow {
                    row: line,
                    expected: width,
                    found: rec.len(),
                });
            }
            for (col, tok) in columns.iter_mut().zip(rec.iter()) {
                col.push(tok.trim().to_string());
            }
        }
        let names = names.ok_or_else(|| Error::Empty("csv input has no rows".into()))?;
        if columns.first().is_none_or(Vec::is_empty) {
            return Err(Error::Empty("csv input has no data rows".into()));
        }
        let table = RawTable { names, columns };
        table.check_missing()?;
        Ok(table)
    }

    pub fn read_path(path: impl AsRef<Path>, opts: CsvOptions) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        RawTable::read(std::io::BufReader::new(file), opts)
    }

    fn check_missing(&self) -> Result<()> {
        for (name, col) in self.names.iter().zip(&self.columns) {
            if let Some(row) = col.iter().position(|t| MISSING_TOKENS.contains(&t.as_str())) {
                return Err(Error::MissingValue {
                    row: row + 1,
                    column: name.clone(),
                });
            }
        }
        Ok(())
    }

    /// Maps tokens to levels in first-appearance order; constant columns are rejected.
    pub fn to_categorical(&self) -> Result<CategoricalDataset> {
        let mut variables = Vec::with_capacity(self.names.len());
        let mut columns = Vec::with_capacity(self.names.len());
        for (name, col) in self.names.iter().zip(&self.columns) {
            let (var, values) = encode_first_appearance(name, col)?;
            if var.arity() < 2 {
                return Err(Error::ConstantColumn(name.clone()));
            }
            variables.push(var);
            columns.push(values);
        }
        CategoricalDataset::new(variables, columns)
    }

    /// Maps tokens through a known schema, matching columns by name.
    pub fn to_categorical_with_schema(&self, schema: &[Variable]) -> Result<CategoricalDataset> {
        let mut columns = Vec::with_capacity(schema.len());
        for var in schema {
            let idx = self
                .names
                .iter()
                .position(|n| *n == var.name)
                .ok_or_else(|| Error::Mismatch(format!("column `{}` not found", var.name)))?;
            let values = self.columns[idx]
                .iter()
                .map(|tok| {
                    var.level_of(tok).ok_or_else(|| Error::UnknownLevel {
                        variable: var.name.clone(),
                        token: tok.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            columns.push(values);
        }
        CategoricalDataset::new(schema.to_vec(), columns)
    }

    /// Parses a column as numbers, if every token is numeric.
    pub fn numeric_column(&self, col: usize) -> Option<Vec<f64>> {
        self.columns[col]
            .iter()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect()
    }
}

pub(crate) fn encode_first_appearance(name: &str, tokens: &[String]) -> Result<(Variable, Vec<Level>)> {
    let mut index: HashMap<&str, Level> = HashMap::new();
    let mut levels = Vec::new();
    let mut values = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let next = levels.len();
        let lvl = *index.entry(tok.as_str()).or_insert_with(|| {
            levels.push(tok.clone());
            next as Level
        });
        if levels.len() > Level::MAX as usize {
            return Err(Error::invalid(format!("column `{name}` has too many levels")));
        }
        values.push(lvl);
    }
    Ok((Variable::new(name, levels), values))
}

/// Loads a discrete dataset from a CSV file.
pub fn load_csv(path: impl AsRef<Path>, opts: CsvOptions) -> Result<CategoricalDataset> {
    RawTable::read_path(path, opts)?.to_categorical()
}

/// Median split of a numeric column: values at or below the threshold map to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianSplit {
    pub threshold: f64,
}

impl MedianSplit {
    /// Fits the threshold; fails when the split would produce a constant column.
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("cannot binarize an empty column".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let threshold = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        if sorted[n - 1] <= threshold {
            return Err(Error::ConstantColumn(format!(
                "median split at {threshold} leaves every value in the low class"
            )));
        }
        Ok(MedianSplit { threshold })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<Level> {
        values
            .iter()
            .map(|&v| if v <= self.threshold { 0 } else { 1 })
            .collect()
    }
}

/// Median-split binarization of a numeric column.
pub fn binarize_continuous(values: &[f64]) -> Result<Vec<Level>> {
    Ok(MedianSplit::fit(values)?.apply(values))
}

/// Dense identifiers for the joint configurations of `vars`, numbered in
/// order of first appearance. Returns the per-row ids and the number of
/// distinct observed configurations.
pub fn configurations(data: &CategoricalDataset, vars: &[usize]) -> (Vec<u32>, usize) {
    let n = data.n_rows();
    let mut ids = vec![0u32; n];
    let mut distinct = 1usize;
    for &v in vars {
        let arity = data.arity(v) as u64;
        let col = data.column(v);
        let mut remap: HashMap<u64, u32> = HashMap::with_capacity(distinct * 2);
        for (id, &lvl) in ids.iter_mut().zip(col) {
            let key = *id as u64 * arity + lvl as u64;
            let next = remap.len() as u32;
            *id = *remap.entry(key).or_insert(next);
        }
        distinct = remap.len();
    }
    if n == 0 {
        distinct = 0;
    }
    (ids, distinct)
}

/// Joint counts of `(X, Y)` within each observed configuration of `Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    /// Levels of X.
    pub r: usize,
    /// Levels of Y.
    pub c: usize,
    /// Observed conditioning configurations.
    pub l: usize,
    /// Layout `[k][i][j]`, flattened.
    pub counts: Vec<u64>,
    pub n: u64,
}

impl ContingencyTable {
    /// Builds a table from nested `[k][i][j]` counts.
    pub fn from_nested(strata: &[Vec<Vec<u64>>]) -> Self {
        let l = strata.len();
        let r = strata.first().map_or(0, Vec::len);
        let c = strata
            .first()
            .and_then(|s| s.first())
            .map_or(0, Vec::len);
        let counts: Vec<u64> = strata.iter().flatten().flatten().copied().collect();
        assert_eq!(counts.len(), l * r * c, "ragged contingency table");
        let n = counts.iter().sum();
        ContingencyTable { r, c, l, counts, n }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> u64 {
        self.counts[(k * self.r + i) * self.c + j]
    }

    pub fn stratum(&self, k: usize) -> &[u64] {
        let size = self.r * self.c;
        &self.counts[k * size..(k + 1) * size]
    }

    /// `n_{i+k}`
    pub fn row_margin(&self, i: usize, k: usize) -> u64 {
        (0..self.c).map(|j| self.get(i, j, k)).sum()
    }

    /// `n_{+jk}`
    pub fn col_margin(&self, j: usize, k: usize) -> u64 {
        (0..self.r).map(|i| self.get(i, j, k)).sum()
    }

    /// `n_{++k}`
    pub fn stratum_total(&self, k: usize) -> u64 {
        self.stratum(k).iter().sum()
    }
}

/// Counts of `(X, Y)` under each conditioning configuration of `z` present in the data.
pub fn contingency(data: &CategoricalDataset, x: usize, y: usize, z: &[usize]) -> ContingencyTable {
    debug_assert!(x != y && !z.contains(&x) && !z.contains(&y));
    let (strata, l) = configurations(data, z);
    let r = data.arity(x);
    let c = data.arity(y);
    let mut counts = vec![0u64; l * r * c];
    let xs = data.column(x);
    let ys = data.column(y);
    for ((&k, &xi), &yj) in strata.iter().zip(xs).zip(ys) {
        counts[(k as usize * r + xi as usize) * c + yj as usize] += 1;
    }
    ContingencyTable {
        r,
        c,
        l,
        counts,
        n: data.n_rows() as u64,
    }
}

/// Fold index of every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of_row: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_row.len())
            .filter(|&r| self.fold_of_row[r] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_row.len())
            .filter(|&r| self.fold_of_row[r] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of_row {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded random partition of `n` rows into `k` folds of near-equal size.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::invalid(format!("{k} folds requested for {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of_row = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold_of_row[row] = pos % k;
    }
    Ok(FoldAssignment { k, fold_of_row })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(text: &str) -> Result<RawTable> {
        RawTable::read(text.as_bytes(), CsvOptions::default())
    }

    #[test]
    fn loads_first_appearance_levels() {
        let ds = raw("a,b,c\na,x,0\nb,y,1\na,z,1\nb,x,0\n")
            .unwrap()
            .to_categorical()
            .unwrap();
        assert_eq!(ds.n_rows(), 4);
        let arities: Vec<_> = (0..3).map(|v| ds.arity(v)).collect();
        assert_eq!(arities, vec![2, 3, 2]);
        assert_eq!(ds.column(1), &[0, 1, 2, 0]);
        assert_eq!(ds.variable(1).levels, vec!["x", "y", "z"]);
    }

    #[test]
    fn ragged_row_names_the_row() {
        let err = raw("a,b,c\n1,2\n3,4,5\n").unwrap_err();
        assert!(err.to_string().contains("ragged row 2"), "{err}");
    }

    #[test]
    fn empty_and_constant_inputs_fail() {
        assert!(matches!(raw(""), Err(Error::Empty(_))));
        assert!(matches!(raw("a,b\n"), Err(Error::Empty(_))));
        let err = raw("a,b\n0,1\n0,0\n").unwrap().to_categorical().unwrap_err();
        match err {
            Error::ConstantColumn(name) => assert_eq!(name, "a"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_value_is_an_error() {
        assert!(matches!(raw("a,b\n0,1\n,0\n"), Err(Error::MissingValue { .. })));
    }

    #[test]
    fn headerless_files_get_generated_names() {
        let opts = CsvOptions {
            delimiter: b';',
            has_header: false,
        };
        let ds = RawTable::read("0;1\n1;0\n".as_bytes(), opts)
            .unwrap()
            .to_categorical()
            .unwrap();
        assert_eq!(ds.name(0), "V1");
        assert_eq!(ds.n_rows(), 2);
    }

    #[test]
    fn schema_mapping_rejects_unknown_tokens() {
        let schema = vec![Variable::with_arity("a", 2)];
        let t = raw("a\n0\n1\n").unwrap();
        assert_eq!(t.to_categorical_with_schema(&schema).unwrap().column(0), &[0, 1]);
        let t = raw("a\n0\n7\n").unwrap();
        assert!(matches!(
            t.to_categorical_with_schema(&schema),
            Err(Error::UnknownLevel { .. })
        ));
    }

    #[test]
    fn median_split_examples() {
        assert_eq!(binarize_continuous(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0, 0, 1, 1]);
        assert_eq!(binarize_continuous(&[5.0, 5.0, 5.0, 9.0]).unwrap(), vec![0, 0, 0, 1]);
        assert!(matches!(
            binarize_continuous(&[7.0, 7.0, 7.0, 7.0]),
            Err(Error::ConstantColumn(_))
        ));
    }

    fn two_by_two() -> CategoricalDataset {
        CategoricalDataset::new(
            vec![
                Variable::with_arity("x", 2),
                Variable::with_arity("y", 2),
                Variable::with_arity("z", 2),
            ],
            vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1], vec![0, 0, 0, 0]],
        )
        .unwrap()
    }

    #[test]
    fn contingency_without_conditioning() {
        let t = contingency(&two_by_two(), 0, 1, &[]);
        assert_eq!((t.r, t.c, t.l, t.n), (2, 2, 1, 4));
        assert!(t.counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn unseen_strata_are_not_materialized() {
        let t = contingency(&two_by_two(), 0, 1, &[2]);
        assert_eq!(t.l, 1);
    }

    #[test]
    fn kfold_sizes() {
        let f = kfold(100, 10, 1).unwrap();
        assert!(f.fold_sizes().iter().all(|&s| s == 10));
        let mut sizes = kfold(11, 10, 1).unwrap().fold_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 1, 1, 1, 1, 1, 1, 1, 2]);
        assert_eq!(kfold(593, 10, 42).unwrap(), kfold(593, 10, 42).unwrap());
        assert!(kfold(5, 10, 0).is_err());
        assert!(kfold(5, 1, 0).is_err());
    }

    fn small_dataset() -> impl Strategy<Value = CategoricalDataset> {
        (1usize..30, prop::collection::vec(2usize..4, 4)).prop_flat_map(|(n, arities)| {
            let cols: Vec<_> = arities
                .iter()
                .map(|&a| prop::collection::vec(0..a as Level, n))
                .collect();
            (Just(arities), cols).prop_map(|(arities, cols)| {
                let vars = arities
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| Variable::with_arity(format!("v{i}"), a))
                    .collect();
                CategoricalDataset::new(vars, cols).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn contingency_matches_row_tally(ds in small_dataset()) {
            let t = contingency(&ds, 0, 1, &[2, 3]);
            // brute-force: tally by explicit Z tuples
            let mut tally: HashMap<(Level, Level, Level, Level), u64> = HashMap::new();
            for row in 0..ds.n_rows() {
                let key = (ds.value(row, 0), ds.value(row, 1), ds.value(row, 2), ds.value(row, 3));
                *tally.entry(key).or_default() += 1;
            }
            let strata: std::collections::HashSet<_> = tally.keys().map(|k| (k.2, k.3)).collect();
            prop_assert_eq!(t.l, strata.len());
            prop_assert_eq!(t.counts.iter().sum::<u64>(), t.n);
            // first row of each stratum identifies its index
            let (ids, _) = configurations(&ds, &[2, 3]);
            for row in 0..ds.n_rows() {
                let k = ids[row] as usize;
                let key = (ds.value(row, 0), ds.value(row, 1), ds.value(row, 2), ds.value(row, 3));
                prop_assert_eq!(t.get(key.0 as usize, key.1 as usize, k), tally[&key]);
            }
            for k in 0..t.l {
                for i in 0..t.r {
                    let margin: u64 = (0..t.c).map(|j| t.get(i, j, k)).sum();
                    prop_assert_eq!(margin, t.row_margin(i, k));
                }
            }
        }

        #[test]
        fn csv_round_trip_preserves_levels(ds in small_dataset()) {
            // re-encode in first-appearance order so the round trip is exact
            let names: Vec<String> = ds.variables().iter().map(|v| v.name.clone()).collect();
            let columns = (0..ds.n_vars())
                .map(|v| ds.column(v).iter().map(|l| format!("t{l}")).collect())
                .collect();
            let table = RawTable { names, columns };
            let mut buf = Vec::new();
            let first = table.to_categorical();
            prop_assume!(first.is_ok());
            let first = first.unwrap();
            first.write_csv(&mut buf, b',').unwrap();
            let second = RawTable::read(buf.as_slice(), CsvOptions::default()).unwrap().to_categorical().unwrap();
            prop_assert_eq!(first, second);
        }

        #[test]
        fn kfold_is_a_partition(n in 2usize..300, k in 2usize..12, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let f = kfold(n, k, seed).unwrap();
            let sizes = f.fold_sizes();
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert!(f.fold_of_row.iter().all(|&x| x < k));
        }
    }
}
