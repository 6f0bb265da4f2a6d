//! Scoring of detection runs against ground truth and tolerance-factor sweeps.
//!
//! Detection rate counts attack intervals with at least one alarm inside;
//! false-positive rate counts alarmed windows over all attack-free windows.

mod roc;

use serde::{Deserialize, Serialize};

use crate::detector::DetectorError;
use crate::simulator::SimError;

pub use roc::{
    evaluate_run, prepare_suite, roc_sweep, score_suite, PreparedRun, RocPoint, RocRow,
    SuiteConfig, SuiteEntry,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("misaligned inputs: {0}")]
    Misaligned(String),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Contiguous run of attack windows, 1-based and inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackInterval {
    pub start_window: u64,
    pub end_window: u64,
    pub t_a_ms: u64,
    pub t_b_ms: Option<u64>,
}

impl AttackInterval {
    fn contains(&self, window: u64) -> bool {
        (self.start_window..=self.end_window).contains(&window)
    }
}

/// Attack intervals as the maximal runs of true windows. Onset defaults to
/// the start of the first attack window; `t_a_ms`/`t_b_ms` override it for
/// the first interval when known.
pub fn attack_intervals(
    truth: &[bool],
    delta_ms: u64,
    t_a_ms: Option<u64>,
    t_b_ms: Option<u64>,
) -> Vec<AttackInterval> {
    let mut out: Vec<AttackInterval> = Vec::new();
    let mut open: Option<u64> = None;
    for (i, t) in truth.iter().chain(std::iter::once(&false)).enumerate() {
        let w = i as u64 + 1;
        match (open, *t) {
            (None, true) => open = Some(w),
            (Some(start), false) => {
                out.push(AttackInterval {
                    start_window: start,
                    end_window: w - 1,
                    t_a_ms: (start - 1) * delta_ms,
                    t_b_ms: None,
                });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(first) = out.first_mut() {
        if let Some(t_a) = t_a_ms {
            first.t_a_ms = t_a;
        }
        first.t_b_ms = t_b_ms;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Attack intervals detected.
    pub d: u64,
    /// Attack intervals generated.
    pub n: u64,
    /// Alarmed attack-free windows.
    pub f: u64,
    /// Attack-free windows.
    pub m: u64,
    #[serde(rename = "R_d")]
    pub r_d: f64,
    #[serde(rename = "R_fp")]
    pub r_fp: f64,
    /// Per interval: first alarm time inside the interval.
    pub t_d_ms: Vec<Option<u64>>,
    /// Per interval: `t_d - t_a`.
    pub latency_ms: Vec<Option<i64>>,
    /// Per interval with a known overwhelm time: `t_d < t_b`.
    pub met_deadline: Vec<Option<bool>>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    fn from_parts(d: u64, n: u64, f: u64, m: u64) -> Self {
        Self {
            d,
            n,
            f,
            m,
            r_d: ratio(d, n),
            r_fp: ratio(f, m),
            t_d_ms: Vec::new(),
            latency_ms: Vec::new(),
            met_deadline: Vec::new(),
        }
    }

    /// Pools counts across runs; rates are recomputed from the sums.
    pub fn pool<'a, I: IntoIterator<Item = &'a EvalReport>>(reports: I) -> Self {
        let mut out = Self::from_parts(0, 0, 0, 0);
        for r in reports {
            out.d += r.d;
            out.n += r.n;
            out.f += r.f;
            out.m += r.m;
            out.t_d_ms.extend(&r.t_d_ms);
            out.latency_ms.extend(&r.latency_ms);
            out.met_deadline.extend(&r.met_deadline);
        }
        out.r_d = ratio(out.d, out.n);
        out.r_fp = ratio(out.f, out.m);
        out
    }

    pub fn deadline_violations(&self) -> usize {
        self.met_deadline
            .iter()
            .filter(|m| **m == Some(false))
            .count()
    }
}

pub fn score_run(
    verdicts: &[bool],
    truth: &[bool],
    intervals: &[AttackInterval],
    delta_ms: u64,
) -> Result<EvalReport, EvalError> {
    if verdicts.len() != truth.len() {
        return Err(EvalError::Misaligned(format!(
            "{} verdicts vs {} truth labels",
            verdicts.len(),
            truth.len()
        )));
    }
    let window_count = verdicts.len() as u64;
    if let Some(bad) = intervals
        .iter()
        .find(|i| i.start_window == 0 || i.end_window > window_count)
    {
        return Err(EvalError::Misaligned(format!(
            "interval {}..={} outside {window_count} windows",
            bad.start_window, bad.end_window
        )));
    }

    let alarmed = |w: u64| verdicts[(w - 1) as usize];
    let f = (1..=window_count)
        .filter(|w| alarmed(*w) && !intervals.iter().any(|i| i.contains(*w)))
        .count() as u64;
    let m = truth.iter().filter(|t| !**t).count() as u64;

    let mut report = EvalReport::from_parts(0, intervals.len() as u64, f, m);
    for interval in intervals {
        let first = (interval.start_window..=interval.end_window).find(|w| alarmed(*w));
        let t_d = first.map(|w| w * delta_ms);
        if first.is_some() {
            report.d += 1;
        }
        report.t_d_ms.push(t_d);
        report
            .latency_ms
            .push(t_d.map(|t| t as i64 - interval.t_a_ms as i64));
        report
            .met_deadline
            .push(interval.t_b_ms.map(|t_b| t_d.is_some_and(|t| t < t_b)));
    }
    report.r_d = ratio(report.d, report.n);
    Ok(report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Per-window confusion tally.
pub fn window_eval_mode(verdicts: &[bool], truth: &[bool]) -> Result<Confusion, EvalError> {
    if verdicts.len() != truth.len() {
        return Err(EvalError::Misaligned(format!(
            "{} verdicts vs {} truth labels",
            verdicts.len(),
            truth.len()
        )));
    }
    let mut c = Confusion::default();
    for (v, t) in verdicts.iter().zip(truth) {
        match (v, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `attacks` intervals of 5 windows separated by 50 normal windows.
    fn layout(attacks: usize) -> (Vec<bool>, Vec<AttackInterval>) {
        let mut truth = Vec::new();
        for _ in 0..attacks {
            truth.extend(std::iter::repeat_n(false, 50));
            truth.extend(std::iter::repeat_n(true, 5));
        }
        let iv = attack_intervals(&truth, 200, None, None);
        (truth, iv)
    }

    #[test]
    fn interval_extraction() {
        let truth = [false, true, true, false, true, false];
        let iv = attack_intervals(&truth, 200, Some(250), Some(600));
        assert_eq!(iv.len(), 2);
        assert_eq!((iv[0].start_window, iv[0].end_window), (2, 3));
        assert_eq!((iv[0].t_a_ms, iv[0].t_b_ms), (250, Some(600)));
        assert_eq!(
            (iv[1].start_window, iv[1].end_window, iv[1].t_a_ms),
            (5, 5, 800)
        );
        assert!(attack_intervals(&[false; 4], 200, None, None).is_empty());
    }

    #[test]
    fn perfect_detector() {
        let (truth, iv) = layout(10);
        assert_eq!(truth.iter().filter(|t| !**t).count(), 500);
        let r = score_run(&truth, &truth, &iv, 200).unwrap();
        assert_eq!((r.d, r.n, r.f, r.m), (10, 10, 0, 500));
        assert_eq!((r.r_d, r.r_fp), (1.0, 0.0));
    }

    #[test]
    fn ninety_nine_of_hundred() {
        let (truth, iv) = layout(100);
        let mut verdicts = truth.clone();
        for w in iv[0].start_window..=iv[0].end_window {
            verdicts[(w - 1) as usize] = false;
        }
        let r = score_run(&verdicts, &truth, &iv, 200).unwrap();
        assert_eq!(r.d, 99);
        assert_eq!(r.r_d, 0.99);
        assert_eq!(r.t_d_ms[0], None);
    }

    #[test]
    fn fifteen_stray_alarms() {
        let (truth, iv) = layout(10);
        let mut verdicts = vec![false; truth.len()];
        let mut placed = 0;
        for (i, t) in truth.iter().enumerate() {
            if !t && placed < 15 && i % 7 == 0 {
                verdicts[i] = true;
                placed += 1;
            }
        }
        assert_eq!(placed, 15);
        let r = score_run(&verdicts, &truth, &iv, 200).unwrap();
        assert_eq!((r.f, r.m), (15, 500));
        assert_eq!(r.r_fp, 0.03);
        assert_eq!(r.d, 0);
    }

    #[test]
    fn latency_and_deadline() {
        let truth = [false, false, true, true, true, false];
        let iv = attack_intervals(&truth, 200, Some(400), Some(900));
        let r = score_run(&[false, false, false, true, true, false], &truth, &iv, 200).unwrap();
        assert_eq!(r.t_d_ms, vec![Some(800)]);
        assert_eq!(r.latency_ms, vec![Some(400)]);
        assert_eq!(r.met_deadline, vec![Some(true)]);
        let iv = attack_intervals(&truth, 200, Some(400), Some(800));
        let r = score_run(&[false, false, false, true, true, false], &truth, &iv, 200).unwrap();
        assert_eq!(r.deadline_violations(), 1);
    }

    #[test]
    fn misaligned_lengths() {
        assert!(score_run(&[true], &[true, false], &[], 200).is_err());
        assert!(window_eval_mode(&[true], &[]).is_err());
    }

    #[test]
    fn confusion_tallies() {
        let truth = [true, false, true, false];
        let c = window_eval_mode(&truth, &truth).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        let inverted: Vec<bool> = truth.iter().map(|t| !t).collect();
        let c = window_eval_mode(&inverted, &truth).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        let c = window_eval_mode(&[false, true, true], &[true, false, true]).unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (1, 1, 0, 1));
    }

    #[test]
    fn pooling_sums_counts() {
        let a = EvalReport::from_parts(1, 1, 2, 100);
        let b = EvalReport::from_parts(0, 1, 0, 300);
        let p = EvalReport::pool([&a, &b]);
        assert_eq!((p.d, p.n, p.f, p.m), (1, 2, 2, 400));
        assert_eq!(p.r_d, 0.5);
        assert_eq!(p.r_fp, 2.0 / 400.0);
    }
}
