//! Streaming Cesàro averages `a_n(f) = (1/n) Σ_{k<n} T^k f` and weighted
//! averages `a_n(β, f) = (1/n) Σ_{k<n} β_k T^k f`.
//!
//! One operator application per step; powers are never recomputed. Averages
//! are recorded only at the requested checkpoints, either in full or at a set
//! of probe atoms.

use std::ops::RangeInclusive;
use std::sync::Arc;

use crate::measure_space::{
    l1_norm, linf_norm, majorizes_rearranged, rearrangement, same_space, MeasurableFunction,
    MAJORIZATION_TOL,
};
use crate::operators::Operator;
use crate::weights::WeightSequence;
use crate::{Error, Result, C64};

/// Default ceiling on the number of operator applications per run.
pub const DEFAULT_BUDGET: u64 = 50_000_000;

/// Strictly increasing positive `n` at which averages are recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoints(Vec<u64>);

impl Checkpoints {
    pub fn new(ns: Vec<u64>) -> Result<Self> {
        if ns.is_empty() {
            return Err(Error::input("at least one checkpoint is required"));
        }
        if ns[0] == 0 {
            return Err(Error::input("checkpoints must be ≥ 1"));
        }
        if let Some(w) = ns.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!(
                "checkpoints must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self(ns))
    }

    /// `1, 2, 4, …` up to `max`, with `max` itself appended.
    pub fn geometric(max: u64) -> Result<Self> {
        if max == 0 {
            return Err(Error::input("checkpoints must be ≥ 1"));
        }
        let mut ns: Vec<u64> = std::iter::successors(Some(1u64), |&n| n.checked_mul(2))
            .take_while(|&n| n <= max)
            .collect();
        if ns.last() != Some(&max) {
            ns.push(max);
        }
        Ok(Self(ns))
    }

    /// `1..=max`.
    pub fn every(max: u64) -> Result<Self> {
        Self::new((1..=max).collect())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn max(&self) -> u64 {
        *self.0.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct AveragingOptions {
    /// Atoms whose values are recorded at each checkpoint.
    pub probes: Vec<usize>,
    /// Keep the whole average function at each checkpoint.
    pub retain_full: bool,
    /// Test `a_n ≺≺ f` (normalized for weighted runs) at each checkpoint.
    pub check_majorization: bool,
    pub budget: u64,
}

impl Default for AveragingOptions {
    fn default() -> Self {
        Self {
            probes: Vec::new(),
            retain_full: true,
            check_majorization: false,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl AveragingOptions {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn probes_only(probes: Vec<usize>) -> Self {
        Self {
            probes,
            retain_full: false,
            ..Self::default()
        }
    }

    pub fn with_majorization(mut self) -> Self {
        self.check_majorization = true;
        self
    }

    pub fn with_probes(mut self, probes: Vec<usize>) -> Self {
        self.probes = probes;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }
}

#[derive(Debug, Clone)]
pub struct CheckpointRecord {
    pub n: u64,
    pub average: Option<MeasurableFunction>,
    /// Values at `AveragingReport::probes`, same order.
    pub probe_values: Vec<C64>,
    pub l1_norm: f64,
    pub linf_norm: f64,
    pub majorized: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct AveragingReport {
    pub checkpoints: Checkpoints,
    pub probes: Vec<usize>,
    pub records: Vec<CheckpointRecord>,
    /// `M(β) = max{1, sup_k |β_k|}` for weighted runs.
    pub weight_normalizer: Option<f64>,
    pub full: bool,
}

impl AveragingReport {
    pub fn record(&self, n: u64) -> Option<&CheckpointRecord> {
        self.records.iter().find(|r| r.n == n)
    }

    fn value_at(&self, rec: &CheckpointRecord, atom: usize) -> Result<C64> {
        if let Some(pos) = self.probes.iter().position(|&p| p == atom) {
            return Ok(rec.probe_values[pos]);
        }
        match &rec.average {
            Some(a) => a
                .values()
                .get(atom)
                .copied()
                .ok_or_else(|| Error::Input(format!("atom {atom} out of range"))),
            None => Err(Error::Input(format!(
                "atom {atom} is not a probe of this probe-only report"
            ))),
        }
    }

    /// Recorded values at `atom` for every checkpoint.
    pub fn trace(&self, atom: usize) -> Result<Vec<(u64, C64)>> {
        self.records
            .iter()
            .map(|r| Ok((r.n, self.value_at(r, atom)?)))
            .collect()
    }
}

/// `a_n(f) = (1/n) Σ_{k<n} T^k f` at every checkpoint.
pub fn cesaro(
    op: &dyn Operator,
    f: &MeasurableFunction,
    cps: &Checkpoints,
    opts: &AveragingOptions,
) -> Result<AveragingReport> {
    run(op, f, None, cps, opts)
}

/// `a_n(β, f) = (1/n) Σ_{k<n} β_k T^k f` at every checkpoint.
pub fn weighted(
    op: &dyn Operator,
    f: &MeasurableFunction,
    beta: &dyn WeightSequence,
    cps: &Checkpoints,
    opts: &AveragingOptions,
) -> Result<AveragingReport> {
    run(op, f, Some(beta), cps, opts)
}

fn run(
    op: &dyn Operator,
    f: &MeasurableFunction,
    beta: Option<&dyn WeightSequence>,
    cps: &Checkpoints,
    opts: &AveragingOptions,
) -> Result<AveragingReport> {
    if !same_space(op.space(), f.space()) {
        return Err(Error::input("operator and function live on different spaces"));
    }
    let n_max = cps.max();
    if n_max > opts.budget {
        return Err(Error::Budget(format!(
            "{n_max} iterations requested, budget is {}",
            opts.budget
        )));
    }
    let dim = f.len();
    if let Some(&p) = opts.probes.iter().find(|&&p| p >= dim) {
        return Err(Error::Input(format!("probe atom {p} out of range")));
    }
    let normalizer = beta.map(|b| b.bound().max(1.0));
    let source_rearrangement = opts.check_majorization.then(|| rearrangement(f));

    let zero = C64::new(0.0, 0.0);
    let mut power = f.values().to_vec();
    let mut scratch = vec![zero; dim];
    let mut sum = vec![zero; dim];
    let mut weights = beta.map(|b| b.stream());
    let mut records = Vec::with_capacity(cps.len());
    let mut next_cp = cps.as_slice().iter().peekable();

    for k in 0..n_max {
        match weights.as_mut() {
            Some(stream) => {
                let b = stream
                    .next()
                    .ok_or_else(|| Error::Range("weight stream ended".into()))??;
                for (s, g) in sum.iter_mut().zip(&power) {
                    *s += b * g;
                }
            }
            None => {
                for (s, g) in sum.iter_mut().zip(&power) {
                    *s += g;
                }
            }
        }
        let n = k + 1;
        if next_cp.peek() == Some(&&n) {
            next_cp.next();
            let avg: Vec<C64> = sum.iter().map(|s| s / n as f64).collect();
            let avg = MeasurableFunction::new(Arc::clone(f.space()), avg)?;
            let majorized = source_rearrangement.as_ref().map(|src| {
                let scaled = match normalizer {
                    Some(m) => avg.scale(C64::new(1.0 / m, 0.0)),
                    None => avg.clone(),
                };
                majorizes_rearranged(src, &rearrangement(&scaled), MAJORIZATION_TOL).holds
            });
            records.push(CheckpointRecord {
                n,
                probe_values: opts.probes.iter().map(|&p| avg.values()[p]).collect(),
                l1_norm: l1_norm(&avg),
                linf_norm: linf_norm(&avg),
                majorized,
                average: opts.retain_full.then_some(avg),
            });
        }
        if n < n_max {
            op.apply_into(&power, &mut scratch);
            std::mem::swap(&mut power, &mut scratch);
        }
    }

    Ok(AveragingReport {
        checkpoints: cps.clone(),
        probes: opts.probes.clone(),
        records,
        weight_normalizer: normalizer,
        full: opts.retain_full,
    })
}

/// `max − min` of the recorded probe values over checkpoints `n ∈ window`,
/// taken separately for real and imaginary parts and reported as their max.
pub fn oscillation(
    report: &AveragingReport,
    probe: usize,
    window: RangeInclusive<u64>,
) -> Result<f64> {
    let values: Vec<C64> = report
        .records
        .iter()
        .filter(|r| window.contains(&r.n))
        .map(|r| report.value_at(r, probe))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Input(format!(
            "no recorded checkpoints in {}..={}",
            window.start(),
            window.end()
        )));
    }
    Ok(spread(values.iter().map(|v| v.re)).max(spread(values.iter().map(|v| v.im))))
}

pub(crate) fn spread(xs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

fn trace_with(
    report: &AveragingReport,
    f: &MeasurableFunction,
    normalize: bool,
) -> Result<Vec<bool>> {
    if !report.full {
        return Err(Error::Capability(
            "majorization trace needs a report that retained full averages".into(),
        ));
    }
    let src = rearrangement(f);
    let scale = match (normalize, report.weight_normalizer) {
        (true, Some(m)) => 1.0 / m,
        _ => 1.0,
    };
    report
        .records
        .iter()
        .map(|r| {
            let avg = r.average.as_ref().expect("full report");
            if !same_space(avg.space(), f.space()) {
                return Err(Error::input("report and function live on different spaces"));
            }
            let scaled = avg.scale(C64::new(scale, 0.0));
            Ok(majorizes_rearranged(&src, &rearrangement(&scaled), MAJORIZATION_TOL).holds)
        })
        .collect()
}

/// `a_n ≺≺ f` per checkpoint; weighted runs test `(1/M(β)) a_n(β, f) ≺≺ f`.
pub fn majorization_trace(report: &AveragingReport, f: &MeasurableFunction) -> Result<Vec<bool>> {
    trace_with(report, f, true)
}

/// `a_n ≺≺ f` per checkpoint without the `M(β)` normalization.
pub fn raw_majorization_trace(
    report: &AveragingReport,
    f: &MeasurableFunction,
) -> Result<Vec<bool>> {
    trace_with(report, f, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::{decompose, AtomicMeasureSpace};
    use crate::operators::{CompositionOperator, KernelOperator};
    use crate::weights::{Constant, Periodic};

    fn unit(n: usize) -> Arc<AtomicMeasureSpace> {
        Arc::new(AtomicMeasureSpace::uniform(n, 1.0, false).unwrap())
    }

    #[test]
    fn checkpoints_validation() {
        assert!(Checkpoints::new(vec![5, 5]).is_err());
        assert!(Checkpoints::new(vec![0, 1]).is_err());
        assert!(Checkpoints::new(vec![]).is_err());
        assert_eq!(Checkpoints::geometric(10).unwrap().as_slice(), &[1, 2, 4, 8, 10]);
        assert_eq!(Checkpoints::geometric(8).unwrap().as_slice(), &[1, 2, 4, 8]);
    }

    #[test]
    fn identity_fixes_every_average() {
        let sp = unit(4);
        let f = MeasurableFunction::from_real(Arc::clone(&sp), &[1.0, -2.0, 0.5, 3.0]).unwrap();
        let id = KernelOperator::identity(sp);
        let rep = cesaro(&id, &f, &Checkpoints::geometric(64).unwrap(), &AveragingOptions::full())
            .unwrap();
        for r in &rep.records {
            assert_eq!(r.average.as_ref().unwrap(), &f);
        }
        assert!(majorization_trace(&rep, &f).unwrap().iter().all(|&b| b));
    }

    #[test]
    fn full_cycle_gives_the_mean() {
        let n = 7;
        let sp = unit(n);
        let vals: Vec<f64> = (0..n).map(|i| (i * i) as f64 - 3.0).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let f = MeasurableFunction::from_real(Arc::clone(&sp), &vals).unwrap();
        let shift = CompositionOperator::cyclic_shift(sp, 1).unwrap();
        let rep = cesaro(&shift, &f, &Checkpoints::new(vec![7, 14]).unwrap(), &AveragingOptions::full())
            .unwrap();
        for r in &rep.records {
            for v in r.average.as_ref().unwrap().values() {
                assert!((v.re - mean).abs() < 1e-12 && v.im == 0.0);
            }
        }
    }

    #[test]
    fn constant_one_weight_matches_cesaro_bitwise() {
        let sp = unit(3);
        let k = KernelOperator::from_real(
            Arc::clone(&sp),
            &[vec![0.1, 0.5, 0.2], vec![0.3, 0.3, 0.1], vec![0.0, 0.2, 0.7]],
        )
        .unwrap();
        let f = MeasurableFunction::from_real(sp, &[1.0, -0.25, 2.0]).unwrap();
        let cps = Checkpoints::geometric(100).unwrap();
        let plain = cesaro(&k, &f, &cps, &AveragingOptions::full()).unwrap();
        let w = weighted(&k, &f, &Constant(C64::new(1.0, 0.0)), &cps, &AveragingOptions::full())
            .unwrap();
        for (a, b) in plain.records.iter().zip(&w.records) {
            assert_eq!(a.average, b.average);
        }
        assert_eq!(w.weight_normalizer, Some(1.0));
    }

    #[test]
    fn alternating_weight_on_identity() {
        let sp = unit(2);
        let f = MeasurableFunction::from_real(Arc::clone(&sp), &[2.0, -6.0]).unwrap();
        let id = KernelOperator::identity(sp);
        let alt = Periodic::new(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]).unwrap();
        let rep = weighted(&id, &f, &alt, &Checkpoints::every(9).unwrap(), &AveragingOptions::full())
            .unwrap();
        for r in &rep.records {
            let avg = r.average.as_ref().unwrap();
            let expect = if r.n % 2 == 0 {
                f.scale(C64::new(0.0, 0.0))
            } else {
                f.scale(C64::new(1.0 / r.n as f64, 0.0))
            };
            for (a, b) in avg.values().iter().zip(expect.values()) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn lambda_i_on_order_four_shift() {
        use crate::weights::LambdaPower;
        let sp = unit(4);
        let f = MeasurableFunction::indicator(Arc::clone(&sp), &[0]).unwrap();
        let shift = CompositionOperator::cyclic_shift(sp, 1).unwrap();
        let beta = LambdaPower::new(C64::new(0.0, 1.0)).unwrap();
        let cps = Checkpoints::new(vec![4, 8, 12]).unwrap();
        let rep = weighted(&shift, &f, &beta, &cps, &AveragingOptions::full()).unwrap();
        // direct summation: (T^k e_0)_i = [i + k ≡ 0 mod 4], weight i^k
        for r in &rep.records {
            let avg = r.average.as_ref().unwrap();
            for atom in 0..4usize {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..r.n {
                    if (atom as u64 + k).is_multiple_of(4) {
                        s += C64::new(0.0, 1.0).powu(k as u32);
                    }
                }
                let expect = s / r.n as f64;
                assert!((avg.values()[atom] - expect).norm() < 1e-14);
            }
        }
        // a_{4m} at atom i is i^{(4 − i) mod 4}/4
        let a4 = rep.record(4).unwrap().average.as_ref().unwrap();
        assert!((a4.values()[1] - C64::new(0.0, -0.25)).norm() < 1e-15);
        assert!((a4.values()[2] - C64::new(-0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn budget_and_probe_errors() {
        let sp = unit(2);
        let f = MeasurableFunction::one(Arc::clone(&sp));
        let id = KernelOperator::identity(sp);
        let cps = Checkpoints::new(vec![10]).unwrap();
        let opts = AveragingOptions::full().with_budget(5);
        assert!(matches!(cesaro(&id, &f, &cps, &opts), Err(Error::Budget(_))));
        let opts = AveragingOptions::probes_only(vec![7]);
        assert!(matches!(cesaro(&id, &f, &cps, &opts), Err(Error::Input(_))));
    }

    #[test]
    fn oscillation_examples() {
        let sp = unit(1);
        let f = MeasurableFunction::from_real(Arc::clone(&sp), &[0.5]).unwrap();
        let id = KernelOperator::identity(sp);
        let cps = Checkpoints::new(vec![1, 2, 3]).unwrap();
        let rep = cesaro(&id, &f, &cps, &AveragingOptions::probes_only(vec![0])).unwrap();
        assert_eq!(oscillation(&rep, 0, 1..=3).unwrap(), 0.0);
        assert!(oscillation(&rep, 0, 10..=20).is_err());
        assert!(majorization_trace(&rep, &f).is_err());

        let mut rep = rep;
        for (r, v) in rep.records.iter_mut().zip([0.50, 0.49, 0.495]) {
            r.probe_values[0] = C64::new(v, 0.0);
        }
        assert!((oscillation(&rep, 0, 1..=3).unwrap() - 0.01).abs() < 1e-15);
        assert!(oscillation(&rep, 0, 1..=1).unwrap() <= oscillation(&rep, 0, 1..=2).unwrap());
    }

    #[test]
    fn normalized_majorization_for_large_weight() {
        let sp = unit(3);
        let f = MeasurableFunction::from_real(Arc::clone(&sp), &[1.0, 2.0, 0.5]).unwrap();
        let id = KernelOperator::identity(sp);
        let three = Constant(C64::new(3.0, 0.0));
        let rep = weighted(
            &id,
            &f,
            &three,
            &Checkpoints::geometric(16).unwrap(),
            &AveragingOptions::full().with_majorization(),
        )
        .unwrap();
        assert_eq!(rep.weight_normalizer, Some(3.0));
        assert!(raw_majorization_trace(&rep, &f).unwrap().iter().all(|&b| !b));
        assert!(majorization_trace(&rep, &f).unwrap().iter().all(|&b| b));
        assert!(rep.records.iter().all(|r| r.majorized == Some(true)));
    }

    #[test]
    fn decomposition_bounds_oscillation() {
        // f = g + h with ‖h‖∞ ≤ ε: averages of h stay within ε, so the
        // oscillation of a_n(f) is at most that of a_n(g) plus 2ε
        let sp = unit(5);
        let f = MeasurableFunction::from_real(Arc::clone(&sp), &[3.0, 0.05, -0.1, 1.0, 0.02])
            .unwrap();
        let k = KernelOperator::from_real(
            Arc::clone(&sp),
            &[
                vec![0.0, 0.5, 0.0, 0.0, 0.5],
                vec![0.0, 0.0, -1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0, 0.0, 0.0],
            ],
        )
        .unwrap();
        let eps = 0.2;
        let (g, _) = decompose(&f, eps).unwrap();
        let cps = Checkpoints::every(200).unwrap();
        let probes: Vec<usize> = (0..5).collect();
        let opts = AveragingOptions::probes_only(probes.clone());
        let rf = cesaro(&k, &f, &cps, &opts).unwrap();
        let rg = cesaro(&k, &g, &cps, &opts).unwrap();
        for p in probes {
            for lo in [1u64, 10, 50, 100] {
                let of = oscillation(&rf, p, lo..=200).unwrap();
                let og = oscillation(&rg, p, lo..=200).unwrap();
                assert!(of <= og + 2.0 * eps + 1e-12, "probe {p} window {lo}");
            }
        }
    }
}
