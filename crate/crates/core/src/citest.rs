//! Mutual-information / G² conditional independence test with the power
//! rule and the structural-zero degrees-of-freedom adjustment.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::dataset::{contingency, CategoricalDataset, ContingencyTable};
use crate::real::Real;

pub use crate::special::chi2_survival;

/// Which cells the power rule divides the sample size by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerRuleCells {
    /// `r · c · Π arity(z)`, counted before looking at the data.
    #[default]
    Nominal,
    /// `r · c · (observed strata)`.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TestConfig<T: Real> {
    pub alpha: T,
    pub power_threshold: T,
    /// Largest conditioning set tried by the spouse-removal subset search.
    pub max_condset: Option<usize>,
    pub power_cells: PowerRuleCells,
}

impl<T: Real> Default for TestConfig<T> {
    fn default() -> Self {
        TestConfig {
            alpha: T::lit(0.05),
            power_threshold: T::lit(5.0),
            max_condset: None,
            power_cells: PowerRuleCells::Nominal,
        }
    }
}

impl<T: Real> TestConfig<T> {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(crate::Error::invalid(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.power_threshold > T::zero()) {
            return Err(crate::Error::invalid("power threshold must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TestResult<T: Real> {
    pub p_value: T,
    pub statistic: T,
    pub dof: usize,
    pub decided_by_power_rule: bool,
    pub independent: bool,
}

/// `Σ_ijk (n_ijk/n) ln(n_ijk n_++k / (n_i+k n_+jk))`, in nats.
pub fn mutual_information<T: Real>(table: &ContingencyTable) -> T {
    if table.n == 0 {
        return T::zero();
    }
    let n = T::from_u64(table.n).expect("count");
    let mut mi = T::zero();
    for k in 0..table.l {
        let total = table.stratum_total(k) as u128;
        let rows: Vec<u64> = (0..table.r).map(|i| table.row_margin(i, k)).collect();
        let cols: Vec<u64> = (0..table.c).map(|j| table.col_margin(j, k)).collect();
        for (i, &ni) in rows.iter().enumerate() {
            for (j, &nj) in cols.iter().enumerate() {
                let nijk = table.get(i, j, k);
                if nijk == 0 {
                    continue;
                }
                let num = nijk as u128 * total;
                let den = ni as u128 * nj as u128;
                if num == den {
                    continue;
                }
                let ratio = T::from_u128(num).expect("count") / T::from_u128(den).expect("count");
                mi += T::from_u64(nijk).expect("count") / n * ratio.ln();
            }
        }
    }
    mi.max(T::zero())
}

/// Degrees of freedom after dropping all-zero rows and columns stratum by stratum.
pub fn adjusted_dof(table: &ContingencyTable) -> usize {
    (0..table.l)
        .map(|k| {
            let rk = (0..table.r).filter(|&i| table.row_margin(i, k) > 0).count();
            let ck = (0..table.c).filter(|&j| table.col_margin(j, k) > 0).count();
            rk.saturating_sub(1) * ck.saturating_sub(1)
        })
        .sum()
}

/// `G² = 2n·MI` together with the adjusted degrees of freedom.
pub fn g2_statistic<T: Real>(table: &ContingencyTable) -> (T, usize) {
    let n = T::from_u64(table.n).expect("count");
    (T::lit(2.0) * n * mutual_information::<T>(table), adjusted_dof(table))
}

fn power_rule_cells(data: &CategoricalDataset, x: usize, y: usize, z: &[usize]) -> f64 {
    let mut cells = (data.arity(x) * data.arity(y)) as f64;
    for &v in z {
        cells *= data.arity(v) as f64;
    }
    cells
}

fn power_rule_result<T: Real>() -> TestResult<T> {
    TestResult {
        p_value: T::one(),
        statistic: T::zero(),
        dof: 0,
        decided_by_power_rule: true,
        independent: true,
    }
}

/// Tests `X ⫫ Y | Z` on the data.
///
/// Panics if `x == y` or either endpoint is in `z`.
pub fn test_independence<T: Real>(
    data: &CategoricalDataset,
    x: usize,
    y: usize,
    z: &[usize],
    cfg: &TestConfig<T>,
) -> TestResult<T> {
    assert!(x != y, "test endpoints must differ");
    assert!(
        !z.contains(&x) && !z.contains(&y),
        "test endpoints must not be conditioned on"
    );
    let n = data.n_rows() as f64;
    let threshold = cfg.power_threshold.as_f64();
    if cfg.power_cells == PowerRuleCells::Nominal && n / power_rule_cells(data, x, y, z) < threshold {
        return power_rule_result();
    }
    let table = contingency(data, x, y, z);
    if cfg.power_cells == PowerRuleCells::Observed {
        let cells = (table.r * table.c * table.l.max(1)) as f64;
        if n / cells < threshold {
            return power_rule_result();
        }
    }
    let (statistic, dof) = g2_statistic::<T>(&table);
    if dof == 0 {
        return TestResult {
            p_value: T::one(),
            statistic,
            dof,
            decided_by_power_rule: false,
            independent: true,
        };
    }
    let p_value = chi2_survival(statistic, dof);
    TestResult {
        p_value,
        statistic,
        dof,
        decided_by_power_rule: false,
        independent: p_value > cfg.alpha,
    }
}

type CacheKey = (usize, usize, Vec<usize>);

/// Data-backed tester with an optional synchronized memo cache.
pub struct CiTester<'a, T: Real> {
    data: &'a CategoricalDataset,
    cfg: TestConfig<T>,
    cache: Option<Mutex<HashMap<CacheKey, TestResult<T>>>>,
    performed: AtomicUsize,
}

impl<'a, T: Real> CiTester<'a, T> {
    pub fn new(data: &'a CategoricalDataset, cfg: TestConfig<T>) -> Self {
        CiTester {
            data,
            cfg,
            cache: None,
            performed: AtomicUsize::new(0),
        }
    }

    pub fn with_cache(mut self) -> Self {
        self.cache = Some(Mutex::new(HashMap::new()));
        self
    }

    pub fn data(&self) -> &'a CategoricalDataset {
        self.data
    }

    pub fn config(&self) -> &TestConfig<T> {
        &self.cfg
    }

    /// Number of statistical tests actually evaluated (cache hits excluded).
    pub fn tests_performed(&self) -> usize {
        self.performed.load(Ordering::Relaxed)
    }

    /// Number of distinct queries answered so far, when caching. Unlike
    /// [`Self::tests_performed`] this does not depend on thread timing.
    pub fn distinct_queries(&self) -> Option<usize> {
        self.cache.as_ref().map(|c| c.lock().expect("cache lock").len())
    }

    pub fn test(&self, x: usize, y: usize, z: &[usize]) -> TestResult<T> {
        let Some(cache) = &self.cache else {
            self.performed.fetch_add(1, Ordering::Relaxed);
            return test_independence(self.data, x, y, z, &self.cfg);
        };
        let mut zs = z.to_vec();
        zs.sort_unstable();
        let key = (x.min(y), x.max(y), zs);
        if let Some(hit) = cache.lock().expect("cache lock").get(&key) {
            return *hit;
        }
        self.performed.fetch_add(1, Ordering::Relaxed);
        let res = test_independence(self.data, key.0, key.1, &key.2, &self.cfg);
        cache.lock().expect("cache lock").insert(key, res);
        res
    }
}
