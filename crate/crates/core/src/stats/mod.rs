//! Comparison of method combinations across evaluation units: percentage
//! gains, mean-rank aggregation, the Friedman test and post-hoc p-values
//! against a control method.

mod posthoc;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

pub use posthoc::{
    control_pvalues, posthoc_adjust, posthoc_table, significance_report, ControlComparison, PosthocMethod,
    PosthocResult, PosthocRow, SignificanceFlag,
};

/// Methods (rows) scored on evaluation units (columns); larger is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    methods: Vec<String>,
    columns: Vec<String>,
    /// `values[method][column]`.
    values: Vec<Vec<f64>>,
}

impl ComparisonTable {
    pub fn new(methods: Vec<String>, columns: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != methods.len() {
            return Err(Error::Data(format!("{} rows for {} methods", values.len(), methods.len())));
        }
        for (m, row) in methods.iter().zip(&values) {
            if row.len() != columns.len() {
                return Err(Error::Data(format!(
                    "method {m:?} has {} cells, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("method {m:?} has a non-finite cell")));
            }
        }
        let mut seen = methods.clone();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Data("method names must be unique".into()));
        }
        Ok(Self { methods, columns, values })
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn n_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Header `method,<column...>`, then one row per method.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Data(format!("CSV write failed: {e}"));
        w.write_record(std::iter::once("method").chain(self.columns.iter().map(String::as_str)))
            .map_err(io)?;
        for (m, row) in self.methods.iter().zip(&self.values) {
            let mut rec = vec![m.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Data(format!("CSV write failed: {e}")))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, source: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            file: source.to_path_buf(),
            line,
            message,
        };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if header.len() < 2 {
            return Err(parse_err(1, "header needs a method column and at least one unit".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut methods = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != header.len() {
                return Err(parse_err(line, format!("{} fields, expected {}", record.len(), header.len())));
            }
            methods.push(record[0].to_string());
            let row = record
                .iter()
                .skip(1)
                .map(|f| f.parse::<f64>().map_err(|_| parse_err(line, format!("{f:?} is not a number"))))
                .collect::<Result<Vec<f64>>>()?;
            values.push(row);
        }
        Self::new(methods, columns, values).map_err(|e| e.context(source.display().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, path)
    }

    /// Mid-ranks of the methods in each column, rank 1 for the largest value.
    fn column_ranks(&self) -> Vec<Vec<f64>> {
        let k = self.n_methods();
        let mut ranks = vec![vec![0.0; self.n_columns()]; k];
        for c in 0..self.n_columns() {
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| self.values[b][c].total_cmp(&self.values[a][c]));
            let mut start = 0;
            while start < k {
                let mut end = start + 1;
                while end < k && self.values[order[end]][c] == self.values[order[start]][c] {
                    end += 1;
                }
                // positions start..end hold ranks start+1..=end
                let mid = (start + 1 + end) as f64 / 2.0;
                for &m in &order[start..end] {
                    ranks[m][c] = mid;
                }
                start = end;
            }
        }
        ranks
    }

    fn average_ranks(&self) -> Vec<f64> {
        let n = self.n_columns() as f64;
        self.column_ranks().iter().map(|r| r.iter().sum::<f64>() / n).collect()
    }
}

/// `100 (with - baseline) / baseline`.
pub fn percentage_gain(acc_with: f64, acc_baseline: f64) -> Result<f64> {
    if !(acc_baseline > 0.0) || !acc_baseline.is_finite() || !acc_with.is_finite() {
        return Err(Error::Range(format!(
            "percentage gain needs a positive baseline (with {acc_with}, baseline {acc_baseline})"
        )));
    }
    Ok(100.0 * (acc_with - acc_baseline) / acc_baseline)
}

/// Mean-rank aggregation of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankAggregation {
    pub methods: Vec<String>,
    /// Average rank per method, in table row order.
    pub average_ranks: Vec<f64>,
    /// Row indices from best to worst; equal averages are ordered by name.
    pub ordering: Vec<usize>,
}

impl RankAggregation {
    /// Writes `position,method,average_rank` in final order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "position,method,average_rank")?;
        for (pos, &i) in self.ordering.iter().enumerate() {
            writeln!(out, "{},{},{}", pos + 1, csv_field(&self.methods[i]), self.average_ranks[i])?;
        }
        Ok(())
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Ranks methods within each column (mid-ranks for ties, rank 1 = largest
/// value), averages over columns and orders ascending.
pub fn robust_rank(table: &ComparisonTable) -> Result<RankAggregation> {
    if table.n_methods() < 2 || table.n_columns() == 0 {
        return Err(Error::Config(format!(
            "ranking needs at least 2 methods and 1 column (got {} × {})",
            table.n_methods(),
            table.n_columns()
        )));
    }
    let average_ranks = table.average_ranks();
    let mut ordering: Vec<usize> = (0..table.n_methods()).collect();
    ordering.sort_by(|&a, &b| {
        average_ranks[a]
            .total_cmp(&average_ranks[b])
            .then_with(|| table.methods[a].cmp(&table.methods[b]))
    });
    Ok(RankAggregation {
        methods: table.methods.clone(),
        average_ranks,
        ordering,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub methods: Vec<String>,
    pub average_ranks: Vec<f64>,
    pub n_columns: usize,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Friedman chi-square test on within-column ranks.
pub fn friedman_test(table: &ComparisonTable) -> Result<FriedmanResult> {
    let (k, n) = (table.n_methods(), table.n_columns());
    if k < 2 || n < 2 {
        return Err(Error::Config(format!("Friedman test needs at least 2 methods and 2 columns (got {k} × {n})")));
    }
    let average_ranks = table.average_ranks();
    let (kf, nf) = (k as f64, n as f64);
    let sum_sq: f64 = average_ranks.iter().map(|r| r * r).sum();
    let statistic = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::Numeric(format!("chi-square distribution: {e}")))?;
    let p_value = if statistic == 0.0 { 1.0 } else { chi.sf(statistic) };
    Ok(FriedmanResult {
        methods: table.methods.clone(),
        average_ranks,
        n_columns: n,
        statistic,
        df: k - 1,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(values: Vec<Vec<f64>>) -> ComparisonTable {
        let k = values.len();
        let n = values[0].len();
        ComparisonTable::new(
            (0..k).map(|i| format!("m{i}")).collect(),
            (0..n).map(|j| format!("u{j}")).collect(),
            values,
        )
        .unwrap()
    }

    #[test]
    fn gains() {
        assert_eq!(percentage_gain(0.8, 0.8).unwrap(), 0.0);
        assert!((percentage_gain(0.9, 0.75).unwrap() - 20.0).abs() < 1e-12);
        assert!(percentage_gain(0.9, 0.0).is_err());
        assert!(percentage_gain(0.7, 0.75).unwrap() < 0.0);
    }

    #[test]
    fn dominating_method_ranks_first() {
        let t = table(vec![vec![1.0, 2.0, 3.0], vec![5.0, 6.0, 7.0], vec![0.0, 0.0, 6.5]]);
        let r = robust_rank(&t).unwrap();
        assert_eq!(r.ordering[0], 1);
        assert_eq!(r.average_ranks[1], 1.0);
    }

    #[test]
    fn full_ties_share_the_middle_rank() {
        let t = table(vec![vec![0.5; 4]; 5]);
        let r = robust_rank(&t).unwrap();
        assert!(r.average_ranks.iter().all(|&v| v == 3.0));
        assert_eq!(r.ordering, vec![0, 1, 2, 3, 4]);
        let f = friedman_test(&t).unwrap();
        assert_eq!(f.statistic, 0.0);
        assert_eq!(f.p_value, 1.0);
    }

    #[test]
    fn fixed_table_by_hand() {
        // column ranks (1 = best):
        //   u0: m2=1, m0=2, m1=3.5, m3=3.5   (m1, m3 tied)
        //   u1: m1=1, m2=2, m0=3, m3=4
        //   u2: m0=1, m1=2, m2=3, m3=4
        let t = table(vec![
            vec![0.8, 0.5, 0.9],
            vec![0.6, 0.9, 0.7],
            vec![0.9, 0.8, 0.6],
            vec![0.6, 0.1, 0.2],
        ]);
        let want = [6.0 / 3.0, 6.5 / 3.0, 6.0 / 3.0, 11.5 / 3.0];
        let r = robust_rank(&t).unwrap();
        for (a, b) in r.average_ranks.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        // m0 and m2 tie on 2.0; name order decides
        assert_eq!(r.ordering, vec![0, 2, 1, 3]);
        let f = friedman_test(&t).unwrap();
        let sum_sq: f64 = want.iter().map(|r| r * r).sum();
        let stat = 12.0 * 3.0 / 20.0 * (sum_sq - 4.0 * 25.0 / 4.0);
        assert!((f.statistic - stat).abs() < 1e-9);
        assert!((f.statistic - 4.3).abs() < 1e-9);
        assert_eq!(f.df, 3);
        assert!(f.p_value > 0.0 && f.p_value < 1.0);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let t = table(vec![vec![1.5, -2.0], vec![0.25, 3.0]]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ComparisonTable::read_csv(&buf[..], Path::new("t.csv")).unwrap();
        assert_eq!(back, t);
        let bad = "method,a,b\nx,1,2\ny,1\n";
        let err = ComparisonTable::read_csv(bad.as_bytes(), Path::new("bad.csv")).unwrap_err();
        assert!(err.to_string().starts_with("bad.csv:3:"), "{err}");
        let nan = "method,a\nx,abc\n";
        assert!(matches!(ComparisonTable::read_csv(nan.as_bytes(), Path::new("n.csv")), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn needs_two_methods() {
        let t = table(vec![vec![1.0, 2.0]]);
        assert!(matches!(friedman_test(&t), Err(Error::Config(_))));
        assert!(matches!(robust_rank(&t), Err(Error::Config(_))));
    }

    fn random_table() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..7, 2usize..8).prop_flat_map(|(k, n)| {
            proptest::collection::vec(proptest::collection::vec((0i32..6).prop_map(|v| v as f64 * 0.1), n), k)
        })
    }

    /// Rank of each method counted directly: 1 + (#better) + (#tied others) / 2.
    fn oracle_average_ranks(v: &[Vec<f64>]) -> Vec<f64> {
        let (k, n) = (v.len(), v[0].len());
        (0..k)
            .map(|m| {
                (0..n)
                    .map(|c| {
                        let better = (0..k).filter(|&o| v[o][c] > v[m][c]).count() as f64;
                        let tied = (0..k).filter(|&o| o != m && v[o][c] == v[m][c]).count() as f64;
                        1.0 + better + tied / 2.0
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .collect()
    }

    proptest! {
        #[test]
        fn rank_identities(v in random_table()) {
            let t = table(v.clone());
            let k = t.n_methods() as f64;
            let r = robust_rank(&t).unwrap();
            prop_assert!((r.average_ranks.iter().sum::<f64>() - k * (k + 1.0) / 2.0).abs() < 1e-9);
            prop_assert!(r.average_ranks.iter().all(|&x| (1.0..=k).contains(&x)));
            for (a, b) in r.average_ranks.iter().zip(oracle_average_ranks(&v)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn column_transforms_preserve_results(v in random_table(), col in 0usize..8, scale in 0.1f64..10.0) {
            let t = table(v.clone());
            let c = col % t.n_columns();
            let mut w = v.clone();
            for row in w.iter_mut() {
                row[c] = row[c] * scale;
            }
            let mut e = v;
            for row in e.iter_mut() {
                row[c] = row[c].exp() + row[c].powi(3);
            }
            let f = friedman_test(&t).unwrap();
            for other in [table(w), table(e)] {
                prop_assert_eq!(robust_rank(&other).unwrap().ordering, robust_rank(&t).unwrap().ordering);
                prop_assert!((friedman_test(&other).unwrap().statistic - f.statistic).abs() < 1e-9);
            }
        }
    }
}
