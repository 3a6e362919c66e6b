//! Divergent averages of a rearrangement that does not vanish at infinity.
//!
//! For `μ_t(f) ≥ 1` on `(0, ∞)` and the alternating-block operator
//! `T f(t) = φ(t) f(t + 1)` (see [`build_counterexample_operator`]),
//!
//! ```text
//! a_n(μ_t(f)) = (1/n) (μ_t(f) + Σ_{k=1}^{n-1} φ(t)φ(t+1)…φ(t+k−1) μ_{t+k}(f)).
//! ```
//!
//! Starting from `n_1 = 1`, [`construct_breakpoints`] picks each next
//! breakpoint as the smallest `n` for which `a_n` crosses `−1/2` (even stages)
//! or `+1/2` (odd stages) at every grid point `t ∈ (eps, 1)`.
//! [`verify_certificate`] re-derives the same averages through the operator
//! and the streaming averaging engine and checks both agree.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::averaging::{cesaro, AveragingOptions, AveragingReport, Checkpoints};
use crate::measure_space::{MeasurableFunction, Rearrangement};
use crate::operators::{block_sign, build_counterexample_operator, check_breakpoints, Operator};
use crate::{Error, Result, C64};

/// Amount by which a strict inequality must be cleared at margin 0.
pub const STRICT_SLACK: f64 = 1e-12;

/// Largest allowed disagreement between the sign-product formula and the
/// operator pipeline.
pub const PIPELINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    /// `φ` is constant on unit cells and `μ_t` is constant on the window, so
    /// one grid point in `(eps, 1)` stands for all of them.
    CellRepresentative,
    /// Every grid point in `(eps, 1)` is evaluated.
    FullGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    /// `a_{n_1} ≥ 1`
    AtLeastOne,
    /// `a_{n_j} > 1/2`
    AboveHalf,
    /// `a_{n_j} < −1/2`
    BelowMinusHalf,
}

impl Requirement {
    pub fn for_stage(stage: usize) -> Self {
        match stage {
            1 => Requirement::AtLeastOne,
            s if s % 2 == 0 => Requirement::BelowMinusHalf,
            _ => Requirement::AboveHalf,
        }
    }

    /// Worst value over the probes: the min for lower bounds, the max for
    /// the upper bound.
    fn extremal(self, values: &[f64]) -> f64 {
        match self {
            Requirement::BelowMinusHalf => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            _ => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Signed distance by which `extremal` clears the threshold.
    pub fn clearance(self, extremal: f64) -> f64 {
        match self {
            Requirement::AtLeastOne => extremal - 1.0,
            Requirement::AboveHalf => extremal - 0.5,
            Requirement::BelowMinusHalf => -0.5 - extremal,
        }
    }

    fn satisfied(self, clearance: f64, margin: f64) -> bool {
        match self {
            Requirement::AtLeastOne => clearance >= -STRICT_SLACK,
            _ => clearance > STRICT_SLACK && clearance >= margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub n: u64,
    pub requirement: Requirement,
    pub extremal_value: f64,
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleCertificate {
    pub eps: f64,
    pub grid: usize,
    pub window: usize,
    pub margin: f64,
    pub mode: EvaluationMode,
    pub breakpoints: Vec<u64>,
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleParams {
    pub eps: f64,
    /// Number of breakpoints `J`.
    pub stages: usize,
    pub margin: f64,
    /// Atoms per unit interval.
    pub grid: usize,
    /// Truncation window `N`; every breakpoint must satisfy `n_j ≤ N`.
    pub window: usize,
    /// Cap on the number of candidate `n` examined; `None` means the window.
    pub budget: Option<u64>,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self {
            eps: 0.1,
            stages: 3,
            margin: 0.0,
            grid: 1,
            window: 4096,
            budget: None,
        }
    }
}

/// Grid atoms whose midpoint `(i + ½)/grid` lies in `(eps, 1)`.
pub fn probe_atoms(eps: f64, grid: usize) -> Result<Vec<usize>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Input(format!("eps must lie in (0, 1), got {eps}")));
    }
    if grid == 0 {
        return Err(Error::input("grid must be positive"));
    }
    let probes: Vec<usize> = (0..grid)
        .filter(|&i| {
            let t = (i as f64 + 0.5) / grid as f64;
            t > eps && t < 1.0
        })
        .collect();
    if probes.is_empty() {
        return Err(Error::Input(format!(
            "no grid point of resolution 1/{grid} lies in ({eps}, 1)"
        )));
    }
    Ok(probes)
}

/// `μ` at the midpoint of atom `atom`.
fn sample(rearr: &Rearrangement, atom: usize, grid: usize) -> f64 {
    rearr.value_at((atom as f64 + 0.5) / grid as f64)
}

/// The rearrangement sampled on every atom of the window.
pub fn window_function(
    rearr: &Rearrangement,
    op: &dyn Operator,
    grid: usize,
) -> Result<MeasurableFunction> {
    let values = (0..op.space().len())
        .map(|i| C64::new(sample(rearr, i, grid), 0.0))
        .collect();
    MeasurableFunction::new(Arc::clone(op.space()), values)
}

fn check_params(rearr: &Rearrangement, params: &CounterexampleParams) -> Result<Vec<usize>> {
    let probes = probe_atoms(params.eps, params.grid)?;
    if params.stages < 2 {
        return Err(Error::input("at least two stages are required"));
    }
    if !(params.margin >= 0.0 && params.margin.is_finite()) {
        return Err(Error::Input(format!("margin must be ≥ 0, got {}", params.margin)));
    }
    if params.window == 0 {
        return Err(Error::input("window must be positive"));
    }
    let last_atom = params.window * params.grid - 1;
    let floor = sample(rearr, last_atom, params.grid);
    if floor < 1.0 - STRICT_SLACK {
        return Err(Error::Input(format!(
            "rearrangement drops to {floor} < 1 inside the window; normalize so μ_t ≥ 1"
        )));
    }
    Ok(probes)
}

/// Greedy construction of `n_1 = 1 < n_2 < … < n_J`.
pub fn construct_breakpoints(
    rearr: &Rearrangement,
    params: &CounterexampleParams,
) -> Result<CounterexampleCertificate> {
    let probes = check_params(rearr, params)?;
    let grid = params.grid;
    let window = params.window as u64;
    let budget = params.budget.unwrap_or(window);

    let constant = rearr.breakpoints().get(1).is_some_and(|&b| b >= params.window as f64);
    let (mode, eval_probes) = if constant {
        (EvaluationMode::CellRepresentative, vec![probes[0]])
    } else {
        (EvaluationMode::FullGrid, probes)
    };
    let mu = |p: usize, k: u64| sample(rearr, p + k as usize * grid, grid);

    // n_1 = 1: a_1 = μ_t
    let mut breakpoints = vec![1u64];
    let mut sums: Vec<f64> = eval_probes.iter().map(|&p| mu(p, 0)).collect();
    let first = Requirement::AtLeastOne;
    let ext = first.extremal(&sums);
    if !first.satisfied(first.clearance(ext), params.margin) {
        return Err(Error::Input(format!("a_1 = {ext} < 1")));
    }
    let mut stages = vec![StageRecord {
        stage: 1,
        n: 1,
        requirement: first,
        extremal_value: ext,
        clearance: first.clearance(ext),
    }];

    // sign product P_k = φ(0)…φ(k−1) of the term k added next
    let mut sign = 1.0;
    let mut next_term = 1u64;
    let mut examined = 0u64;
    for stage in 2..=params.stages {
        let req = Requirement::for_stage(stage);
        loop {
            let n = next_term + 1;
            if n > window {
                return Err(Error::Window(format!(
                    "stage {stage} needs n > {window}; enlarge the window"
                )));
            }
            examined += 1;
            if examined > budget {
                return Err(Error::Budget(format!(
                    "examined {budget} candidates without finishing stage {stage}"
                )));
            }
            let k = next_term;
            sign *= block_sign(&breakpoints, k - 1);
            for (s, &p) in sums.iter_mut().zip(&eval_probes) {
                *s += sign * mu(p, k);
            }
            next_term += 1;

            let averages: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
            let ext = req.extremal(&averages);
            let clearance = req.clearance(ext);
            if req.satisfied(clearance, params.margin) {
                breakpoints.push(n);
                stages.push(StageRecord {
                    stage,
                    n,
                    requirement: req,
                    extremal_value: ext,
                    clearance,
                });
                break;
            }
        }
    }

    Ok(CounterexampleCertificate {
        eps: params.eps,
        grid,
        window: params.window,
        margin: params.margin,
        mode,
        breakpoints,
        stages,
    })
}

/// `a_{n_j}` at each probe straight from the sign-product formula, with
/// `φ` rebuilt from `breakpoints`. Indexed `[stage][probe]`.
pub fn block_averages(
    rearr: &Rearrangement,
    breakpoints: &[u64],
    probes: &[usize],
    grid: usize,
) -> Vec<Vec<f64>> {
    let last = breakpoints.last().copied().unwrap_or(0);
    let signs: Vec<f64> = std::iter::once(1.0)
        .chain((0..last).scan(1.0, |p, cell| {
            *p *= block_sign(breakpoints, cell);
            Some(*p)
        }))
        .collect();
    let mut out = vec![Vec::with_capacity(probes.len()); breakpoints.len()];
    for &p in probes {
        let mut sum = 0.0;
        let mut j = 0;
        for k in 0..last {
            sum += signs[k as usize] * sample(rearr, p + k as usize * grid, grid);
            if k + 1 == breakpoints[j] {
                out[j].push(sum / breakpoints[j] as f64);
                j += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub verified: bool,
    /// First stage (1-based) whose inequality fails.
    pub failed_stage: Option<usize>,
    /// Clearance of the worst probe at each stage.
    pub stage_clearances: Vec<f64>,
    pub worst_clearance: f64,
    /// `max |formula − pipeline|` over probes and stages.
    pub pipeline_discrepancy: f64,
    /// Probe-only averaging report at the breakpoints.
    pub report: AveragingReport,
}

/// Rebuilds `φ` as a composition operator, streams `a_n` at the breakpoints
/// for every grid point in `(eps, 1)`, and checks each inequality.
///
/// Fails with [`Error::Consistency`] if the operator pipeline and the
/// sign-product formula disagree by more than [`PIPELINE_TOL`].
pub fn verify_certificate(
    cert: &CounterexampleCertificate,
    rearr: &Rearrangement,
) -> Result<Verification> {
    let probes = probe_atoms(cert.eps, cert.grid)?;
    check_breakpoints(&cert.breakpoints)?;
    let op = build_counterexample_operator(&cert.breakpoints, cert.grid, cert.window)?;
    let f = window_function(rearr, &op, cert.grid)?;
    let cps = Checkpoints::new(cert.breakpoints.clone())?;
    let report = cesaro(&op, &f, &cps, &AveragingOptions::probes_only(probes.clone()))?;

    let formula = block_averages(rearr, &cert.breakpoints, &probes, cert.grid);
    let mut discrepancy: f64 = 0.0;
    for (rec, expected) in report.records.iter().zip(&formula) {
        for (v, e) in rec.probe_values.iter().zip(expected) {
            discrepancy = discrepancy.max((v.re - e).abs()).max(v.im.abs());
        }
    }
    if discrepancy > PIPELINE_TOL {
        return Err(Error::Consistency(format!(
            "operator pipeline and sign-product formula differ by {discrepancy}"
        )));
    }

    let mut failed_stage = None;
    let mut stage_clearances = Vec::with_capacity(report.records.len());
    for (j, rec) in report.records.iter().enumerate() {
        let stage = j + 1;
        let req = Requirement::for_stage(stage);
        let values: Vec<f64> = rec.probe_values.iter().map(|v| v.re).collect();
        let clearance = req.clearance(req.extremal(&values));
        if failed_stage.is_none() && !req.satisfied(clearance, 0.0) {
            failed_stage = Some(stage);
        }
        stage_clearances.push(clearance);
    }
    let worst_clearance = stage_clearances.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Verification {
        verified: failed_stage.is_none(),
        failed_stage,
        stage_clearances,
        worst_clearance,
        pipeline_discrepancy: discrepancy,
        report,
    })
}

/// `μ_t ≡ c` on `[0, window)`.
pub fn constant_rearrangement(c: f64, window: usize) -> Result<Rearrangement> {
    Rearrangement::from_steps(vec![0.0, window as f64], vec![c])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force: for each candidate breakpoint list, evaluate
    /// `a_n = (1/n) Σ_{k<n} Π_{c<k} φ(c)` for `f ≡ 1` with φ written out
    /// cell by cell from the indicator formula.
    fn brute_force_breakpoints(stages: usize) -> Vec<u64> {
        let mut bps = vec![1u64];
        while bps.len() < stages {
            let want_negative = (bps.len() + 1) % 2 == 0;
            let mut n = *bps.last().unwrap() + 1;
            loop {
                let mut trial = bps.clone();
                trial.push(n);
                let phi = |cell: u64| {
                    let mut prev = 0u64;
                    for &b in &trial {
                        if cell >= prev && cell < b {
                            return if cell == b - 1 { -1.0 } else { 1.0 };
                        }
                        prev = b;
                    }
                    1.0
                };
                let a: f64 = (0..n)
                    .map(|k| (0..k).map(phi).product::<f64>())
                    .sum::<f64>()
                    / n as f64;
                let ok = if want_negative { a < -0.5 - 1e-12 } else { a > 0.5 + 1e-12 };
                if ok {
                    bps.push(n);
                    break;
                }
                n += 1;
            }
        }
        bps
    }

    #[test]
    fn brute_force_oracle_confirms_frozen_breakpoints() {
        assert_eq!(brute_force_breakpoints(6), vec![1, 5, 17, 53, 161, 485]);
    }

    #[test]
    fn constant_one_gives_1_5_17() {
        let rearr = constant_rearrangement(1.0, 64).unwrap();
        let params = CounterexampleParams {
            eps: 0.1,
            stages: 3,
            grid: 1,
            window: 64,
            ..Default::default()
        };
        let cert = construct_breakpoints(&rearr, &params).unwrap();
        assert_eq!(cert.breakpoints, vec![1, 5, 17]);
        assert_eq!(cert.mode, EvaluationMode::CellRepresentative);
        let vals: Vec<f64> = cert.stages.iter().map(|s| s.extremal_value).collect();
        assert_eq!(vals[0], 1.0);
        assert!((vals[1] + 3.0 / 5.0).abs() < 1e-15);
        assert!((vals[2] - 9.0 / 17.0).abs() < 1e-15);

        let v = verify_certificate(&cert, &rearr).unwrap();
        assert!(v.verified);
        assert!(v.pipeline_discrepancy <= PIPELINE_TOL);
        assert_eq!(v.stage_clearances[0], 0.0);
        assert!((v.stage_clearances[1] - 0.1).abs() < 1e-12);
        assert!((v.stage_clearances[2] - (9.0 / 17.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn tampered_certificate_fails_at_stage_two() {
        let rearr = constant_rearrangement(1.0, 64).unwrap();
        let params = CounterexampleParams {
            eps: 0.1,
            stages: 3,
            grid: 4,
            window: 64,
            ..Default::default()
        };
        let mut cert = construct_breakpoints(&rearr, &params).unwrap();
        cert.breakpoints = vec![1, 4, 17];
        let v = verify_certificate(&cert, &rearr).unwrap();
        assert!(!v.verified);
        assert_eq!(v.failed_stage, Some(2));
        assert!(v.stage_clearances[1].abs() < 1e-15);
    }

    #[test]
    fn empty_probe_set_is_an_input_error() {
        let rearr = constant_rearrangement(1.0, 64).unwrap();
        let mut cert = construct_breakpoints(
            &rearr,
            &CounterexampleParams {
                window: 64,
                ..Default::default()
            },
        )
        .unwrap();
        cert.eps = 1.0;
        assert!(matches!(verify_certificate(&cert, &rearr), Err(Error::Input(_))));
        // grid 1 has its only midpoint at 0.5
        assert!(probe_atoms(0.6, 1).is_err());
    }

    #[test]
    fn window_and_budget_errors() {
        let rearr = constant_rearrangement(1.0, 100).unwrap();
        let params = CounterexampleParams {
            stages: 5,
            window: 100,
            ..Default::default()
        };
        assert!(matches!(construct_breakpoints(&rearr, &params), Err(Error::Window(_))));
        let params = CounterexampleParams {
            stages: 4,
            window: 100,
            budget: Some(10),
            ..Default::default()
        };
        assert!(matches!(construct_breakpoints(&rearr, &params), Err(Error::Budget(_))));
    }

    #[test]
    fn rejects_rearrangement_below_one() {
        let r = Rearrangement::from_steps(vec![0.0, 10.0, 100.0], vec![2.0, 0.5]).unwrap();
        let params = CounterexampleParams {
            window: 100,
            ..Default::default()
        };
        assert!(matches!(construct_breakpoints(&r, &params), Err(Error::Input(_))));
    }

    fn decaying(window: usize, grid: usize) -> Rearrangement {
        // μ_t = 1 + 1/(1 + t), sampled at cell left ends
        let atoms = window * grid;
        let bps: Vec<f64> = (0..=atoms).map(|i| i as f64 / grid as f64).collect();
        let vals: Vec<f64> = (0..atoms)
            .map(|i| 1.0 + 1.0 / (1.0 + i as f64 / grid as f64))
            .collect();
        Rearrangement::from_steps(bps, vals).unwrap()
    }

    #[test]
    fn decaying_rearrangement_still_alternates() {
        let rearr = decaying(400, 8);
        let params = CounterexampleParams {
            eps: 0.1,
            stages: 5,
            grid: 8,
            window: 400,
            ..Default::default()
        };
        let cert = construct_breakpoints(&rearr, &params).unwrap();
        assert_eq!(cert.mode, EvaluationMode::FullGrid);
        let v = verify_certificate(&cert, &rearr).unwrap();
        assert!(v.verified, "{:?}", v.stage_clearances);
        // extremal values recorded by the constructor agree with the pipeline
        for (s, rec) in cert.stages.iter().zip(&v.report.records) {
            let vals: Vec<f64> = rec.probe_values.iter().map(|z| z.re).collect();
            assert!((s.requirement.extremal(&vals) - s.extremal_value).abs() < PIPELINE_TOL);
        }
    }

    #[test]
    fn greedy_choice_is_minimal() {
        for (rearr, grid, window) in [
            (constant_rearrangement(1.0, 600).unwrap(), 2, 600),
            (decaying(400, 8), 8, 400),
        ] {
            let params = CounterexampleParams {
                eps: 0.1,
                stages: 5,
                grid,
                window,
                margin: 0.01,
                ..Default::default()
            };
            let cert = construct_breakpoints(&rearr, &params).unwrap();
            let probes = probe_atoms(0.1, grid).unwrap();
            for j in 1..cert.breakpoints.len() {
                let shorter = cert.breakpoints[j] - 1;
                if shorter <= cert.breakpoints[j - 1] {
                    continue;
                }
                let mut trial = cert.breakpoints[..j].to_vec();
                trial.push(shorter);
                let vals = block_averages(&rearr, &trial, &probes, grid);
                let req = Requirement::for_stage(j + 1);
                let clearance = req.clearance(req.extremal(&vals[j]));
                assert!(!req.satisfied(clearance, params.margin), "stage {} not minimal", j + 1);
            }
        }
    }
}
