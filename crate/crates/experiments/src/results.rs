//! Result records, their CSV form, and per-cell summaries.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{ExperimentError, Result};

pub const SINGLE_GRID: &str = "single-grid";
pub const SINGLE_NOISE: &str = "single-noise";
pub const TWO_SWEEP: &str = "two-sweep";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// Learned, but at least one weight row had rank below its column count.
    Underdetermined,
    /// Coincident hidden spikes; excluded from quantiles.
    Degenerate,
    /// No estimate; counts as an infinite error in quantiles.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub examples: usize,
    /// Seconds for one-layer runs, periods for two-layer runs.
    pub exposure: f64,
    pub snr_db: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub w1_error: Option<f64>,
    pub w2_error: Option<f64>,
    pub status: Status,
}

impl ResultRecord {
    fn cell(&self) -> (usize, u64, Option<u64>) {
        (
            self.examples,
            self.exposure.to_bits(),
            self.snr_db.map(f64::to_bits),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub records: Vec<ResultRecord>,
}

impl ResultTable {
    pub fn new(records: Vec<ResultRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if self.records.is_empty() {
            w.write_record([
                "experiment",
                "examples",
                "exposure",
                "snr_db",
                "trial",
                "seed",
                "w1_error",
                "w2_error",
                "status",
            ])?;
        }
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let records = r
            .deserialize()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// The experiment id shared by every record.
    pub fn experiment(&self) -> Result<&str> {
        let first = self.records.first().ok_or(ExperimentError::EmptyTable)?;
        if self
            .records
            .iter()
            .any(|r| r.experiment != first.experiment)
        {
            return Err(ExperimentError::MixedTable("several experiment ids".into()));
        }
        Ok(&first.experiment)
    }

    /// One summary per grid cell, in order of first appearance.
    pub fn summarize(&self) -> Vec<CellSummary> {
        let mut cells: Vec<(_, Vec<&ResultRecord>)> = Vec::new();
        for r in &self.records {
            match cells.iter_mut().find(|(key, _)| *key == r.cell()) {
                Some((_, group)) => group.push(r),
                None => cells.push((r.cell(), vec![r])),
            }
        }
        cells
            .into_iter()
            .map(|(_, group)| CellSummary::from_records(&group))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Linear-interpolation quantile of sorted data (`+inf` allowed).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        return sorted[lo];
    }
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    if b.is_infinite() {
        return b;
    }
    a + frac * (b - a)
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub experiment: String,
    pub examples: usize,
    pub exposure: f64,
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub failed: usize,
    pub degenerate: usize,
    pub underdetermined: usize,
    pub w1: Option<Quartiles>,
    pub w2: Option<Quartiles>,
}

/// Errors entering quantiles: degenerate trials dropped, failed ones infinite.
fn quantile_inputs(
    records: &[&ResultRecord],
    pick: impl Fn(&ResultRecord) -> Option<f64>,
) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.status != Status::Degenerate)
        .map(|r| match r.status {
            Status::Failed => f64::INFINITY,
            _ => pick(r).unwrap_or(f64::INFINITY),
        })
        .collect()
}

impl CellSummary {
    fn from_records(group: &[&ResultRecord]) -> Self {
        let first = group[0];
        let count = |s: Status| group.iter().filter(|r| r.status == s).count();
        let has_w2 = group.iter().any(|r| r.w2_error.is_some());
        Self {
            experiment: first.experiment.clone(),
            examples: first.examples,
            exposure: first.exposure,
            snr_db: first.snr_db,
            trials: group.len(),
            failed: count(Status::Failed),
            degenerate: count(Status::Degenerate),
            underdetermined: count(Status::Underdetermined),
            w1: Quartiles::of(&quantile_inputs(group, |r| r.w1_error)),
            w2: if has_w2 || first.experiment == TWO_SWEEP {
                Quartiles::of(&quantile_inputs(group, |r| r.w2_error))
            } else {
                None
            },
        }
    }
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    experiment: &'a str,
    examples: usize,
    exposure: f64,
    snr_db: Option<f64>,
    trials: usize,
    failed: usize,
    degenerate: usize,
    underdetermined: usize,
    w1_q1: Option<f64>,
    w1_median: Option<f64>,
    w1_q3: Option<f64>,
    w2_q1: Option<f64>,
    w2_median: Option<f64>,
    w2_q3: Option<f64>,
}

pub fn write_summary_csv<W: Write>(summaries: &[CellSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in summaries {
        w.serialize(SummaryRow {
            experiment: &s.experiment,
            examples: s.examples,
            exposure: s.exposure,
            snr_db: s.snr_db,
            trials: s.trials,
            failed: s.failed,
            degenerate: s.degenerate,
            underdetermined: s.underdetermined,
            w1_q1: s.w1.map(|q| q.q1),
            w1_median: s.w1.map(|q| q.median),
            w1_q3: s.w1.map(|q| q.q3),
            w2_q1: s.w2.map(|q| q.q1),
            w2_median: s.w2.map(|q| q.median),
            w2_q3: s.w2.map(|q| q.q3),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    /// Pairs where the first sample is strictly smaller.
    pub wins: usize,
    /// Pairs that are not ties.
    pub pairs: usize,
    /// One-sided p-value for "the first sample tends to be smaller".
    pub p_value: f64,
}

/// Paired one-sided sign test; ties are dropped.
pub fn sign_test_less(a: &[f64], b: &[f64]) -> SignTest {
    let (wins, pairs) = a.iter().zip(b).fold((0, 0), |(w, n), (x, y)| {
        if x < y {
            (w + 1, n + 1)
        } else if x > y {
            (w, n + 1)
        } else {
            (w, n)
        }
    });
    let p_value = if pairs == 0 || wins == 0 {
        1.0
    } else {
        Binomial::new(0.5, pairs as u64)
            .expect("valid binomial")
            .sf(wins as u64 - 1)
    };
    SignTest {
        wins,
        pairs,
        p_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(trial: usize, examples: usize, w1: Option<f64>, status: Status) -> ResultRecord {
        ResultRecord {
            experiment: SINGLE_GRID.into(),
            examples,
            exposure: 0.5,
            snr_db: None,
            trial,
            seed: 1234567890123 + trial as u64,
            w1_error: w1,
            w2_error: None,
            status,
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let mut recs = vec![
            record(0, 1, Some(0.1 + 0.2), Status::Ok),
            record(1, 1, Some(1e-300), Status::Underdetermined),
            record(2, 1, None, Status::Failed),
        ];
        recs[1].snr_db = Some(f64::INFINITY);
        recs[2].w2_error = Some(5e-17);
        recs[2].seed = u64::MAX;
        let table = ResultTable::new(recs);
        let bytes = table.to_csv_bytes().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with(
            "experiment,examples,exposure,snr_db,trial,seed,w1_error,w2_error,status\n"
        ));
        let back = ResultTable::read_csv(&bytes[..]).unwrap();
        assert_eq!(back, table);
        assert_eq!(back.to_csv_bytes().unwrap(), bytes);
    }

    #[test]
    fn empty_table_keeps_header() {
        let bytes = ResultTable::default().to_csv_bytes().unwrap();
        assert!(String::from_utf8(bytes.clone())
            .unwrap()
            .starts_with("experiment,"));
        assert!(ResultTable::read_csv(&bytes[..]).unwrap().is_empty());
    }

    #[test]
    fn quartiles_match_interpolation() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
        let q = Quartiles::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (1.75, 2.5, 3.25));
        let q = Quartiles::of(&[1.0, 2.0, f64::INFINITY, f64::INFINITY, 3.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, f64::INFINITY));
        assert!(Quartiles::of(&[]).is_none());
    }

    #[test]
    fn summaries_treat_failed_and_degenerate() {
        let table = ResultTable::new(vec![
            record(0, 1, Some(1.0), Status::Ok),
            record(1, 1, None, Status::Failed),
            record(2, 1, Some(9.0), Status::Degenerate),
            record(0, 2, Some(0.5), Status::Ok),
        ]);
        let s = table.summarize();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].trials, s[0].failed, s[0].degenerate), (3, 1, 1));
        assert_eq!(s[0].w1.unwrap().median, f64::INFINITY);
        assert_eq!(s[0].w1.unwrap().q1, f64::INFINITY);
        assert_eq!(s[1].w1.unwrap().median, 0.5);
        assert!(s[0].w2.is_none());
    }

    #[test]
    fn sign_test_values() {
        let a = vec![0.0; 20];
        let b = vec![1.0; 20];
        let t = sign_test_less(&a, &b);
        assert_eq!((t.wins, t.pairs), (20, 20));
        assert!((t.p_value - 0.5f64.powi(20)).abs() < 1e-18);
        // 15 of 20: P(X >= 15) = 21700 / 2^20.
        let mut a2 = vec![0.0; 15];
        a2.extend(vec![2.0; 5]);
        let t = sign_test_less(&a2, &b);
        assert!((t.p_value - 21700.0 / 1048576.0).abs() < 1e-12);
        assert_eq!(sign_test_less(&b, &b).p_value, 1.0);
    }

    #[test]
    fn mixed_table_rejected() {
        let mut r = record(1, 1, Some(1.0), Status::Ok);
        r.experiment = TWO_SWEEP.into();
        let t = ResultTable::new(vec![record(0, 1, Some(1.0), Status::Ok), r]);
        assert!(t.experiment().is_err());
        assert!(ResultTable::default().experiment().is_err());
    }
}
