//! Block-level detection scoring.
//!
//! Detections are matched one-to-one against ground-truth boxes and sorted
//! into truly detected (TDB), falsely detected (FDB) and missing-data (MDB)
//! blocks, from which detection, false-positive and misdetection rates and
//! precision / recall / F-measure follow.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

use crate::components::Rect;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Minimum fraction of a truth box a detection must cover to count as TDB.
    pub tdb_overlap: f64,
    /// A TDB covering less than this fraction of its truth box is also MDB.
    pub mdb_coverage: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            tdb_overlap: 0.5,
            mdb_coverage: 0.95,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tdb_overlap > 0.0
            && self.tdb_overlap <= self.mdb_coverage
            && self.mdb_coverage <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "need 0 < tdb_overlap <= mdb_coverage <= 1, got {} and {}",
                self.tdb_overlap, self.mdb_coverage
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub tdb: u64,
    pub fdb: u64,
    pub mdb: u64,
    /// Number of ground-truth blocks.
    pub actual: u64,
}

impl Add for EvalCounts {
    type Output = EvalCounts;

    fn add(self, rhs: EvalCounts) -> EvalCounts {
        EvalCounts {
            tdb: self.tdb + rhs.tdb,
            fdb: self.fdb + rhs.fdb,
            mdb: self.mdb + rhs.mdb,
            actual: self.actual + rhs.actual,
        }
    }
}

impl AddAssign for EvalCounts {
    fn add_assign(&mut self, rhs: EvalCounts) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for EvalCounts {
    fn sum<I: Iterator<Item = EvalCounts>>(iter: I) -> Self {
        iter.fold(EvalCounts::default(), Add::add)
    }
}

struct Candidate {
    det: usize,
    truth: usize,
    inter: u64,
    truth_area: u64,
}

impl Candidate {
    // inter / truth_area, compared exactly by cross-multiplication.
    fn cmp_coverage(&self, other: &Candidate) -> Ordering {
        let a = self.inter as u128 * other.truth_area as u128;
        let b = other.inter as u128 * self.truth_area as u128;
        a.cmp(&b)
    }

    fn covers_at_least(&self, ratio: f64) -> bool {
        self.inter as f64 >= ratio * self.truth_area as f64
    }
}

/// Greedy one-to-one matching in descending order of truth-box coverage.
pub fn match_detections(detections: &[Rect], truth: &[Rect], cfg: &MatchConfig) -> EvalCounts {
    let mut candidates = Vec::new();
    for (ti, t) in truth.iter().enumerate() {
        for (di, d) in detections.iter().enumerate() {
            let c = Candidate {
                det: di,
                truth: ti,
                inter: d.intersection_area(t),
                truth_area: t.area(),
            };
            if c.inter > 0 && c.covers_at_least(cfg.tdb_overlap) {
                candidates.push(c);
            }
        }
    }
    // Ties fall back to truth index then box geometry, never detection order,
    // so the counts do not depend on how the detection list is permuted.
    candidates.sort_by(|a, b| {
        b.cmp_coverage(a)
            .then(a.truth.cmp(&b.truth))
            .then(detections[a.det].cmp(&detections[b.det]))
    });

    let mut det_used = vec![false; detections.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut counts = EvalCounts {
        actual: truth.len() as u64,
        ..EvalCounts::default()
    };
    for c in &candidates {
        if det_used[c.det] || truth_used[c.truth] {
            continue;
        }
        det_used[c.det] = true;
        truth_used[c.truth] = true;
        counts.tdb += 1;
        if !c.covers_at_least(cfg.mdb_coverage) {
            counts.mdb += 1;
        }
    }
    counts.fdb = detections.len() as u64 - counts.tdb;
    counts
}

/// Which rate denominators were zero (the rate was then reported as 0).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Degenerate {
    pub no_truth: bool,
    pub no_detections: bool,
    pub no_true_detections: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.no_truth || self.no_detections || self.no_true_detections
    }

    fn or(self, other: Degenerate) -> Degenerate {
        Degenerate {
            no_truth: self.no_truth || other.no_truth,
            no_detections: self.no_detections || other.no_detections,
            no_true_detections: self.no_true_detections || other.no_true_detections,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub detection_rate: f64,
    pub false_positive_rate: f64,
    pub misdetection_rate: f64,
    pub degenerate: Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub detection_rate: f64,
    pub false_positive_rate: f64,
    pub misdetection_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub degenerate: Degenerate,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// TDB / actual, FDB / (TDB + FDB), and MDB / TDB.
pub fn compute_rates(c: &EvalCounts) -> Rates {
    let (detection_rate, no_truth) = ratio(c.tdb, c.actual);
    let (false_positive_rate, no_detections) = ratio(c.fdb, c.tdb + c.fdb);
    let (misdetection_rate, no_true_detections) = ratio(c.mdb, c.tdb);
    Rates {
        detection_rate,
        false_positive_rate,
        misdetection_rate,
        degenerate: Degenerate {
            no_truth,
            no_detections,
            no_true_detections,
        },
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    let sum = precision + recall;
    if sum == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / sum
    }
}

/// All rates, with precision = TDB / (TDB + FDB) and recall = TDB / actual.
pub fn precision_recall_f(c: &EvalCounts) -> Metrics {
    let rates = compute_rates(c);
    let (precision, _) = ratio(c.tdb, c.tdb + c.fdb);
    let recall = rates.detection_rate;
    Metrics {
        detection_rate: rates.detection_rate,
        false_positive_rate: rates.false_positive_rate,
        misdetection_rate: rates.misdetection_rate,
        precision,
        recall,
        f_measure: f_measure(precision, recall),
        degenerate: rates.degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Pool counts over all images, then compute rates.
    #[default]
    Micro,
    /// Average per-image rates.
    Macro,
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Averaging::Micro => "micro",
            Averaging::Macro => "macro",
        })
    }
}

/// Dataset-level metrics over per-image counts.
///
/// Macro averaging takes the mean of each per-image rate and reports F as the
/// harmonic mean of the averaged precision and recall.
pub fn aggregate(per_image: &[EvalCounts], averaging: Averaging) -> Metrics {
    match averaging {
        Averaging::Micro => precision_recall_f(&per_image.iter().copied().sum()),
        Averaging::Macro => {
            if per_image.is_empty() {
                return precision_recall_f(&EvalCounts::default());
            }
            let n = per_image.len() as f64;
            let all: Vec<Metrics> = per_image.iter().map(precision_recall_f).collect();
            let mean = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
            let precision = mean(|m| m.precision);
            let recall = mean(|m| m.recall);
            Metrics {
                detection_rate: mean(|m| m.detection_rate),
                false_positive_rate: mean(|m| m.false_positive_rate),
                misdetection_rate: mean(|m| m.misdetection_rate),
                precision,
                recall,
                f_measure: f_measure(precision, recall),
                degenerate: all
                    .iter()
                    .fold(Degenerate::default(), |d, m| d.or(m.degenerate)),
            }
        }
    }
}

/// Per-image counts plus the dataset summary.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub per_image: Vec<(String, EvalCounts)>,
    pub averaging: Averaging,
    pub metrics: Metrics,
}

impl EvalReport {
    pub fn new(per_image: Vec<(String, EvalCounts)>, averaging: Averaging) -> Self {
        let counts: Vec<EvalCounts> = per_image.iter().map(|(_, c)| *c).collect();
        let metrics = aggregate(&counts, averaging);
        Self {
            per_image,
            averaging,
            metrics,
        }
    }

    pub fn totals(&self) -> EvalCounts {
        self.per_image.iter().map(|(_, c)| *c).sum()
    }

    /// One `key=value` pair per line.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (name, c) in &self.per_image {
            out.push_str(&format!(
                "image.{name}.tdb={}\nimage.{name}.fdb={}\nimage.{name}.mdb={}\nimage.{name}.actual={}\n",
                c.tdb, c.fdb, c.mdb, c.actual
            ));
        }
        let t = self.totals();
        let m = &self.metrics;
        out.push_str(&format!(
            "averaging={}\nimages={}\ntdb={}\nfdb={}\nmdb={}\nactual={}\n",
            self.averaging,
            self.per_image.len(),
            t.tdb,
            t.fdb,
            t.mdb,
            t.actual
        ));
        out.push_str(&format!(
            "detection_rate={:.6}\nfalse_positive_rate={:.6}\nmisdetection_rate={:.6}\nprecision={:.6}\nrecall={:.6}\nf_measure={:.6}\ndegenerate={}\n",
            m.detection_rate,
            m.false_positive_rate,
            m.misdetection_rate,
            m.precision,
            m.recall,
            m.f_measure,
            m.degenerate.any()
        ));
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<32} {:>6} {:>6} {:>6} {:>6}",
            "image", "TDB", "FDB", "MDB", "GT"
        )?;
        for (name, c) in &self.per_image {
            writeln!(
                f,
                "{name:<32} {:>6} {:>6} {:>6} {:>6}",
                c.tdb, c.fdb, c.mdb, c.actual
            )?;
        }
        let t = self.totals();
        writeln!(
            f,
            "{:<32} {:>6} {:>6} {:>6} {:>6}",
            "total", t.tdb, t.fdb, t.mdb, t.actual
        )?;
        writeln!(f)?;
        let m = &self.metrics;
        writeln!(f, "averaging            {}", self.averaging)?;
        writeln!(f, "detection rate       {:.4}", m.detection_rate)?;
        writeln!(f, "false positive rate  {:.4}", m.false_positive_rate)?;
        writeln!(f, "misdetection rate    {:.4}", m.misdetection_rate)?;
        writeln!(f, "precision            {:.4}", m.precision)?;
        writeln!(f, "recall               {:.4}", m.recall)?;
        writeln!(f, "f-measure            {:.4}", m.f_measure)?;
        if m.degenerate.any() {
            writeln!(
                f,
                "note: some rates had a zero denominator and were reported as 0"
            )?;
        }
        Ok(())
    }
}
