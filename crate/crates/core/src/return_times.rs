//! Wiener-Wintner sweeps `(1/n) Σ λ^k f(τ^k ω)` over a uniform grid of `λ`
//! on the unit circle, and return-times averages
//! `(1/n) Σ f(τ^k ω) g(φ^k y)` over two point systems.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;

use crate::averaging::{spread, Checkpoints};
use crate::measure_space::{same_space, AtomicMeasureSpace, MeasurableFunction};
use crate::operators::{check_measure_preserving, CompositionOperator};
use crate::weights::{LambdaPower, PowerAccumulator};
use crate::{Error, Result, C64};

/// `|1 − q|` below which a sweep entry is flagged as resonant.
pub const RESONANCE_FLAG: f64 = 1e-6;

/// A measure-preserving bijection of the atoms of a space.
#[derive(Debug, Clone)]
pub struct PointSystem {
    space: Arc<AtomicMeasureSpace>,
    map: Vec<usize>,
    label: String,
}

impl PointSystem {
    pub fn new(space: Arc<AtomicMeasureSpace>, map: Vec<usize>, label: impl Into<String>) -> Result<Self> {
        check_measure_preserving(&space, &map)?;
        Ok(Self {
            space,
            map,
            label: label.into(),
        })
    }

    /// `j ↦ j + step (mod order)` on `order` atoms of weight `1/order`,
    /// the cyclic model of rotation by `step/order`.
    pub fn rotation(order: usize, step: usize, label: impl Into<String>) -> Result<Self> {
        if order == 0 {
            return Err(Error::input("rotation needs at least one atom"));
        }
        let space = Arc::new(AtomicMeasureSpace::uniform(order, 1.0 / order as f64, false)?);
        let map = (0..order).map(|j| (j + step) % order).collect();
        Self::new(space, map, label)
    }

    pub fn space(&self) -> &Arc<AtomicMeasureSpace> {
        &self.space
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `ω, τω, …, τ^{len−1} ω`.
    pub fn orbit(&self, start: usize, len: usize) -> Vec<usize> {
        std::iter::successors(Some(start), |&i| Some(self.map[i]))
            .take(len)
            .collect()
    }

    /// `f ↦ f∘τ` as a composition operator.
    pub fn koopman(&self) -> CompositionOperator {
        let n = self.map.len();
        CompositionOperator::new(
            Arc::clone(&self.space),
            self.map.clone(),
            vec![C64::new(1.0, 0.0); n],
        )
        .expect("validated bijection")
    }
}

#[derive(Debug, Clone)]
pub struct ProductAverageReport {
    pub checkpoints: Checkpoints,
    pub probes: Vec<(usize, usize)>,
    /// `values[probe][checkpoint]`.
    pub values: Vec<Vec<C64>>,
}

/// `a_n(f, g)(ω, y) = (1/n) Σ_{k<n} f(τ^k ω) g(φ^k y)` at each probe pair.
pub fn product_average(
    sys1: &PointSystem,
    f: &MeasurableFunction,
    sys2: &PointSystem,
    g: &MeasurableFunction,
    probes: &[(usize, usize)],
    cps: &Checkpoints,
) -> Result<ProductAverageReport> {
    if !same_space(sys1.space(), f.space()) || !same_space(sys2.space(), g.space()) {
        return Err(Error::input("functions must live on their systems' spaces"));
    }
    if let Some(&(w, y)) = probes
        .iter()
        .find(|&&(w, y)| w >= sys1.map.len() || y >= sys2.map.len())
    {
        return Err(Error::Input(format!("probe ({w}, {y}) out of range")));
    }
    let values = probes
        .par_iter()
        .map(|&(omega, y)| {
            let mut a = omega;
            let mut b = y;
            let mut sum = C64::new(0.0, 0.0);
            let mut out = Vec::with_capacity(cps.len());
            let mut next = cps.as_slice().iter().peekable();
            for k in 0..cps.max() {
                sum += f.values()[a] * g.values()[b];
                let n = k + 1;
                if next.peek() == Some(&&n) {
                    next.next();
                    out.push(sum / n as f64);
                }
                a = sys1.map[a];
                b = sys2.map[b];
            }
            out
        })
        .collect();
    Ok(ProductAverageReport {
        checkpoints: cps.clone(),
        probes: probes.to_vec(),
        values,
    })
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// `λ_j = e^{2πij/G}`.
    pub lambdas: Vec<C64>,
    pub probes: Vec<usize>,
    pub checkpoints: Checkpoints,
    /// `averages[λ][probe][checkpoint]`.
    pub averages: Vec<Vec<Vec<C64>>>,
    /// Max of real and imaginary spreads over all checkpoints, `[λ][probe]`.
    pub oscillations: Vec<Vec<f64>>,
}

/// `λ_j = e^{2πij/G}`, `j < G`.
pub fn lambda_grid(size: usize) -> Vec<C64> {
    (0..size)
        .map(|j| C64::from_polar(1.0, TAU * j as f64 / size as f64))
        .collect()
}

/// Runs the Wiener-Wintner averages for every grid `λ` along the orbit of
/// each probe. The orbit is traversed once per probe and shared by all `λ`
/// accumulators.
pub fn wiener_wintner_sweep(
    sys: &PointSystem,
    f: &MeasurableFunction,
    probes: &[usize],
    lambda_grid_size: usize,
    cps: &Checkpoints,
    budget: u64,
) -> Result<SweepResult> {
    if lambda_grid_size == 0 {
        return Err(Error::input("λ grid needs at least one point"));
    }
    if !same_space(sys.space(), f.space()) {
        return Err(Error::input("function must live on the system's space"));
    }
    if let Some(&p) = probes.iter().find(|&&p| p >= sys.map.len()) {
        return Err(Error::Input(format!("probe atom {p} out of range")));
    }
    let n_max = cps.max();
    if n_max > budget {
        return Err(Error::Budget(format!(
            "{n_max} orbit steps requested, budget is {budget}"
        )));
    }
    let lambdas = lambda_grid(lambda_grid_size);
    for &l in &lambdas {
        LambdaPower::new(l)?;
    }

    // per_probe[probe][λ][checkpoint]
    let per_probe: Vec<Vec<Vec<C64>>> = probes
        .par_iter()
        .map(|&omega| {
            let orbit_values: Vec<C64> = sys
                .orbit(omega, n_max as usize)
                .into_iter()
                .map(|i| f.values()[i])
                .collect();
            lambdas
                .iter()
                .map(|&l| sweep_one(l, &orbit_values, cps))
                .collect()
        })
        .collect();

    let mut averages = vec![Vec::with_capacity(probes.len()); lambdas.len()];
    for probe_rows in per_probe {
        for (j, row) in probe_rows.into_iter().enumerate() {
            averages[j].push(row);
        }
    }
    let oscillations = averages
        .iter()
        .map(|per_l| {
            per_l
                .iter()
                .map(|row| {
                    spread(row.iter().map(|v| v.re)).max(spread(row.iter().map(|v| v.im)))
                })
                .collect()
        })
        .collect();
    Ok(SweepResult {
        lambdas,
        probes: probes.to_vec(),
        checkpoints: cps.clone(),
        averages,
        oscillations,
    })
}

/// Same accumulation order as the weighted averaging engine.
fn sweep_one(lambda: C64, orbit_values: &[C64], cps: &Checkpoints) -> Vec<C64> {
    let mut powers = PowerAccumulator::new(lambda);
    let mut sum = C64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(cps.len());
    let mut next = cps.as_slice().iter().peekable();
    for (k, &v) in orbit_values.iter().enumerate() {
        sum += powers.next_power() * v;
        let n = k as u64 + 1;
        if next.peek() == Some(&&n) {
            next.next();
            out.push(sum / n as f64);
        }
    }
    out
}

/// Phase `θ` of `q = λ e^{2πiρ}` reduced to `(−π, π]`, with `ρ = a/order`.
pub fn resonance_phase(rotation_num: i64, order: u64, lambda: C64) -> f64 {
    let rho = rotation_num.rem_euclid(order as i64) as f64 / order as f64;
    let mut theta = lambda.arg() + TAU * rho;
    while theta > PI {
        theta -= TAU;
    }
    while theta <= -PI {
        theta += TAU;
    }
    theta
}

/// Whether `|1 − q| < RESONANCE_FLAG`.
pub fn is_resonant(rotation_num: i64, order: u64, lambda: C64) -> bool {
    2.0 * (resonance_phase(rotation_num, order, lambda) / 2.0).sin().abs() < RESONANCE_FLAG
}

/// `(1/n) Σ_{k<n} λ^k e^{2πi(ω + kρ)}` with `ρ = rotation_num/order`, in
/// closed form: `e^{2πiω}` when `q = 1`, otherwise
/// `e^{2πiω} (1 − qⁿ)/(n(1 − q))`, evaluated as the Dirichlet kernel
/// `e^{iθ(n−1)/2} sin(nθ/2) / (n sin(θ/2))` for `q = e^{iθ}`.
pub fn rotation_closed_form(
    rotation_num: i64,
    order: u64,
    lambda: C64,
    omega_phase: f64,
    n: u64,
) -> Result<C64> {
    if order == 0 || n == 0 {
        return Err(Error::Domain("rotation order and n must be positive".into()));
    }
    if (lambda.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("|λ| = {} is not 1", lambda.norm())));
    }
    let base = C64::from_polar(1.0, TAU * omega_phase);
    let theta = resonance_phase(rotation_num, order, lambda);
    // phases of grid λ are only known to ~1e-16; anything this small is q = 1
    if theta.abs() < 1e-13 {
        return Ok(base);
    }
    let n_f = n as f64;
    let ratio = (n_f * theta / 2.0).sin() / (n_f * (theta / 2.0).sin());
    Ok(base * C64::from_polar(ratio, theta * (n_f - 1.0) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_system_validation() {
        let sp = Arc::new(AtomicMeasureSpace::new(vec![1.0, 2.0], false).unwrap());
        assert!(PointSystem::new(Arc::clone(&sp), vec![1, 0], "swap").is_err());
        assert!(PointSystem::new(Arc::clone(&sp), vec![0, 0], "collapse").is_err());
        assert!(PointSystem::new(sp, vec![0, 1], "id").is_ok());
        let r = PointSystem::rotation(5, 2, "r").unwrap();
        assert_eq!(r.orbit(0, 6), vec![0, 2, 4, 1, 3, 0]);
    }

    #[test]
    fn unit_second_factor_is_birkhoff() {
        let s1 = PointSystem::rotation(6, 1, "a").unwrap();
        let s2 = PointSystem::rotation(4, 1, "b").unwrap();
        let f = MeasurableFunction::from_real(
            Arc::clone(s1.space()),
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        )
        .unwrap();
        let g = MeasurableFunction::one(Arc::clone(s2.space()));
        let cps = Checkpoints::new(vec![1, 3, 6]).unwrap();
        let rep = product_average(&s1, &f, &s2, &g, &[(2, 1)], &cps).unwrap();
        assert_eq!(rep.values[0], vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0), C64::new(3.5, 0.0)]);

        let zero = MeasurableFunction::zero(Arc::clone(s1.space()));
        let rep = product_average(&s1, &zero, &s2, &g, &[(0, 0), (5, 3)], &cps).unwrap();
        assert!(rep.values.iter().flatten().all(|v| *v == C64::new(0.0, 0.0)));
        assert!(product_average(&s1, &f, &s2, &g, &[(6, 0)], &cps).is_err());
    }

    #[test]
    fn coprime_cycles_full_period_count() {
        let (p, q) = (5usize, 3usize);
        let s1 = PointSystem::rotation(p, 1, "p").unwrap();
        let s2 = PointSystem::rotation(q, 1, "q").unwrap();
        let f = MeasurableFunction::indicator(Arc::clone(s1.space()), &[3]).unwrap();
        let g = MeasurableFunction::indicator(Arc::clone(s2.space()), &[2]).unwrap();
        let pq = (p * q) as u64;
        let cps = Checkpoints::new(vec![pq, 2 * pq, 3 * pq]).unwrap();
        let probes = [(0usize, 0usize), (1, 2), (4, 1)];
        let rep = product_average(&s1, &f, &s2, &g, &probes, &cps).unwrap();
        for (pi, &(w, y)) in probes.iter().enumerate() {
            let count = (0..pq as usize)
                .filter(|k| (w + k) % p == 3 && (y + k) % q == 2)
                .count();
            for v in &rep.values[pi] {
                assert!((v.re - count as f64 / pq as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identity_system_geometric_series() {
        let sys = PointSystem::rotation(3, 0, "id").unwrap();
        let f = MeasurableFunction::one(Arc::clone(sys.space()));
        let cps = Checkpoints::new(vec![1, 5, 17, 100]).unwrap();
        let res = wiener_wintner_sweep(&sys, &f, &[0, 2], 8, &cps, 1_000).unwrap();
        for (j, l) in res.lambdas.iter().enumerate() {
            for row in &res.averages[j] {
                for (v, &n) in row.iter().zip(cps.as_slice()) {
                    let expect = if j == 0 {
                        C64::new(1.0, 0.0)
                    } else {
                        (C64::new(1.0, 0.0) - l.powu(n as u32)) / ((C64::new(1.0, 0.0) - l) * n as f64)
                    };
                    assert!((v - expect).norm() < 1e-13, "λ index {j}, n {n}");
                }
            }
        }
        let zero = MeasurableFunction::zero(Arc::clone(sys.space()));
        let res = wiener_wintner_sweep(&sys, &zero, &[1], 4, &cps, 1_000).unwrap();
        assert!(res.averages.iter().flatten().flatten().all(|v| v.norm() == 0.0));
        assert!(matches!(
            wiener_wintner_sweep(&sys, &f, &[0], 4, &cps, 10),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn closed_form_examples() {
        let rho_num = 3;
        let order = 10;
        let lambda = C64::from_polar(1.0, -TAU * 0.3);
        for n in [1u64, 2, 50, 1000] {
            let v = rotation_closed_form(rho_num, order, lambda, 0.17, n).unwrap();
            assert!((v - C64::from_polar(1.0, TAU * 0.17)).norm() < 1e-15);
        }
        let one = C64::new(1.0, 0.0);
        assert!(rotation_closed_form(1, 2, one, 0.0, 2).unwrap().norm() < 1e-15);
        assert!(rotation_closed_form(1, 4, one, 0.0, 8).unwrap().norm() < 1e-15);
        // direct summation
        let lambda = C64::from_polar(1.0, 0.4);
        let direct: C64 = (0..37)
            .map(|k| lambda.powu(k) * C64::from_polar(1.0, TAU * (0.25 + k as f64 * 2.0 / 7.0)))
            .sum::<C64>()
            / 37.0;
        let closed = rotation_closed_form(2, 7, lambda, 0.25, 37).unwrap();
        assert!((direct - closed).norm() < 1e-14);
    }

    #[test]
    fn resonance_flagging() {
        let grid = lambda_grid(8);
        // ρ = 1/8 resonates with λ = e^{-2πi/8} = grid[7]
        assert!(is_resonant(1, 8, grid[7]));
        assert!(!is_resonant(1, 8, grid[6]));
    }
}
