//! Dunford-Schwartz operators on atomic spaces.
//!
//! Two representations share the [`Operator`] trait: a dense complex
//! [`KernelOperator`] and a sparse [`CompositionOperator`] `(Tf)_i = m_i
//! f_{σ(i)}`. On an atomic space the L¹ and L∞ contraction properties reduce
//! to weighted column sums and plain row sums of the kernel, which is what
//! [`DsReport`] records.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::measure_space::{same_space, AtomicMeasureSpace, MeasurableFunction};
use crate::{Error, Result, C64};

/// Slack allowed on the DS row/column conditions.
pub const DS_TOL: f64 = 1e-12;

/// Kernel sizes at or above this many rows apply in parallel.
const PARALLEL_ROWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DsReport {
    pub l1_ok: bool,
    pub linf_ok: bool,
    /// `max_j Σ_i w_i |K_ij| / w_j`, the L¹ operator norm.
    pub worst_column_sum: f64,
    /// `max_i Σ_j |K_ij|`, the L∞ operator norm.
    pub worst_row_sum: f64,
    pub worst_column: usize,
    pub worst_row: usize,
}

impl DsReport {
    fn from_sums(columns: &[f64], rows: &[f64]) -> Self {
        let (worst_column, worst_column_sum) = argmax(columns);
        let (worst_row, worst_row_sum) = argmax(rows);
        Self {
            l1_ok: worst_column_sum <= 1.0 + DS_TOL,
            linf_ok: worst_row_sum <= 1.0 + DS_TOL,
            worst_column_sum,
            worst_row_sum,
            worst_column,
            worst_row,
        }
    }

    pub fn is_ds(&self) -> bool {
        self.l1_ok && self.linf_ok
    }
}

fn argmax(xs: &[f64]) -> (usize, f64) {
    xs.iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, x)| if x > best.1 { (i, x) } else { best })
}

/// A linear operator bound to an atomic measure space.
pub trait Operator: Send + Sync + fmt::Debug {
    /// Registry name of the representation.
    fn kind(&self) -> &'static str;

    fn space(&self) -> &Arc<AtomicMeasureSpace>;

    /// `dst = T src`. Both slices have the length of the space.
    fn apply_into(&self, src: &[C64], dst: &mut [C64]);

    fn ds_certificate(&self) -> DsReport;

    /// Dense kernel of the same operator.
    fn to_kernel(&self) -> KernelOperator;

    fn apply(&self, f: &MeasurableFunction) -> Result<MeasurableFunction> {
        if !same_space(self.space(), f.space()) {
            return Err(Error::input("operator and function live on different spaces"));
        }
        let mut out = vec![C64::new(0.0, 0.0); f.len()];
        self.apply_into(f.values(), &mut out);
        MeasurableFunction::new(Arc::clone(f.space()), out)
    }
}

/// `(Tf)_i = Σ_j K[i][j] f_j`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    n: usize,
    entries: Vec<C64>,
    space: Arc<AtomicMeasureSpace>,
}

impl KernelOperator {
    pub fn new(space: Arc<AtomicMeasureSpace>, matrix: Vec<Vec<C64>>) -> Result<Self> {
        let n = space.len();
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Input(format!(
                "kernel must be {n}×{n} to match the space"
            )));
        }
        let entries: Vec<C64> = matrix.into_iter().flatten().collect();
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(Error::input("kernel entries must be finite"));
        }
        Ok(Self { n, entries, space })
    }

    pub fn from_real(space: Arc<AtomicMeasureSpace>, matrix: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            space,
            matrix
                .iter()
                .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn identity(space: Arc<AtomicMeasureSpace>) -> Self {
        let n = space.len();
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = C64::new(1.0, 0.0);
        }
        Self { n, entries, space }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.entries.chunks(self.n).map(<[C64]>::to_vec).collect()
    }

    fn map_entries(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|&z| f(z)).collect(),
            space: Arc::clone(&self.space),
        }
    }

    /// `|T|`: the entrywise modulus, which is the lattice supremum
    /// `|T|f = sup{|Tg| : |g| ≤ f}` for kernel operators.
    pub fn linear_modulus(&self) -> Self {
        self.map_entries(|z| C64::new(z.norm(), 0.0))
    }

    /// `K*[j][i] = conj(K[i][j]) w_i / w_j`, the adjoint for the pairing
    /// `⟨u, v⟩ = Σ w_i u_i conj(v_i)`.
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let w = self.space.weights();
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.get(i, j).conj() * (w[i] / w[j]);
            }
        }
        Self {
            n,
            entries,
            space: Arc::clone(&self.space),
        }
    }

    /// Largest entrywise difference `| |K*| − |K|* |`, and whether it is
    /// within `1e-12`.
    pub fn adjoint_modulus_commutation(&self) -> (bool, f64) {
        let lhs = self.adjoint().linear_modulus();
        let rhs = self.linear_modulus().adjoint();
        let diff = lhs
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        (diff <= 1e-12, diff)
    }

    /// Checks `|T^k f| ≤ |T|^k |f|` componentwise for `k = 1..=kmax`.
    pub fn modulus_domination_check(
        &self,
        f: &MeasurableFunction,
        kmax: usize,
    ) -> Result<DominationReport> {
        if kmax == 0 {
            return Err(Error::Domain("kmax must be at least 1".into()));
        }
        if !same_space(&self.space, f.space()) {
            return Err(Error::input("operator and function live on different spaces"));
        }
        let modulus = self.linear_modulus();
        let n = self.n;
        let mut signed = f.values().to_vec();
        let mut positive: Vec<C64> = f.values().iter().map(|v| C64::new(v.norm(), 0.0)).collect();
        let mut scratch = vec![C64::new(0.0, 0.0); n];
        let mut min_slack_per_k = Vec::with_capacity(kmax);
        let mut worst = (f64::INFINITY, 1, 0);
        for k in 1..=kmax {
            self.apply_into(&signed, &mut scratch);
            std::mem::swap(&mut signed, &mut scratch);
            modulus.apply_into(&positive, &mut scratch);
            std::mem::swap(&mut positive, &mut scratch);
            let mut min_k = f64::INFINITY;
            for i in 0..n {
                let slack = positive[i].re - signed[i].norm();
                if slack < min_k {
                    min_k = slack;
                }
                if slack < worst.0 {
                    worst = (slack, k, i);
                }
            }
            min_slack_per_k.push(min_k);
        }
        Ok(DominationReport {
            holds: worst.0 >= -1e-9,
            min_slack: worst.0,
            worst_location: (worst.1, worst.2),
            min_slack_per_k,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub holds: bool,
    /// `min_{k,i} (|T|^k|f| − |T^k f|)_i`.
    pub min_slack: f64,
    /// `(k, atom)` where the minimum is attained.
    pub worst_location: (usize, usize),
    pub min_slack_per_k: Vec<f64>,
}

impl Operator for KernelOperator {
    fn kind(&self) -> &'static str {
        "kernel"
    }

    fn space(&self) -> &Arc<AtomicMeasureSpace> {
        &self.space
    }

    fn apply_into(&self, src: &[C64], dst: &mut [C64]) {
        let n = self.n;
        let row_dot = |(i, out): (usize, &mut C64)| {
            let row = &self.entries[i * n..(i + 1) * n];
            *out = row.iter().zip(src).map(|(k, v)| k * v).sum();
        };
        if n >= PARALLEL_ROWS {
            dst.par_iter_mut().enumerate().for_each(row_dot);
        } else {
            dst.iter_mut().enumerate().for_each(row_dot);
        }
    }

    fn ds_certificate(&self) -> DsReport {
        let n = self.n;
        let w = self.space.weights();
        let mut columns = vec![0.0; n];
        let mut rows = vec![0.0; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, col) in columns.iter_mut().enumerate() {
                let a = self.get(i, j).norm();
                *col += w[i] * a;
                *row += a;
            }
        }
        for (c, wj) in columns.iter_mut().zip(w) {
            *c /= wj;
        }
        DsReport::from_sums(&columns, &rows)
    }

    fn to_kernel(&self) -> KernelOperator {
        self.clone()
    }
}

/// `(Tf)_i = m_i · f_{σ(i)}` with `|m_i| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionOperator {
    map: Vec<usize>,
    multipliers: Vec<C64>,
    space: Arc<AtomicMeasureSpace>,
}

impl CompositionOperator {
    pub fn new(
        space: Arc<AtomicMeasureSpace>,
        map: Vec<usize>,
        multipliers: Vec<C64>,
    ) -> Result<Self> {
        let n = space.len();
        if map.len() != n || multipliers.len() != n {
            return Err(Error::Input(format!(
                "composition operator needs {n} map entries and {n} multipliers"
            )));
        }
        if let Some(i) = map.iter().position(|&j| j >= n) {
            return Err(Error::Input(format!("map sends atom {i} outside the space")));
        }
        if let Some(i) = multipliers
            .iter()
            .position(|m| !m.is_finite() || m.norm() > 1.0 + DS_TOL)
        {
            return Err(Error::Input(format!("|multiplier| at atom {i} exceeds 1")));
        }
        Ok(Self {
            map,
            multipliers,
            space,
        })
    }

    /// Composition with a measure-preserving bijection.
    pub fn measure_preserving(
        space: Arc<AtomicMeasureSpace>,
        map: Vec<usize>,
        multipliers: Vec<C64>,
    ) -> Result<Self> {
        check_measure_preserving(&space, &map)?;
        Self::new(space, map, multipliers)
    }

    /// `(Tf)_i = f_{(i + step) mod n}`.
    pub fn cyclic_shift(space: Arc<AtomicMeasureSpace>, step: usize) -> Result<Self> {
        let n = space.len();
        let map = (0..n).map(|i| (i + step) % n).collect();
        Self::measure_preserving(space, map, vec![C64::new(1.0, 0.0); n])
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn multipliers(&self) -> &[C64] {
        &self.multipliers
    }
}

/// `σ` is a bijection with `w_{σ(i)} = w_i` (relative `1e-12`).
pub fn check_measure_preserving(space: &AtomicMeasureSpace, map: &[usize]) -> Result<()> {
    let n = space.len();
    if map.len() != n {
        return Err(Error::Input(format!("map has {} entries for {n} atoms", map.len())));
    }
    let mut hit = vec![false; n];
    for (i, &j) in map.iter().enumerate() {
        if j >= n || std::mem::replace(&mut hit[j], true) {
            return Err(Error::Input(format!("map is not a bijection (atom {i} → {j})")));
        }
        let (wi, wj) = (space.weight(i), space.weight(j));
        if (wi - wj).abs() > 1e-12 * wi.max(wj) {
            return Err(Error::Input(format!(
                "map does not preserve measure: w[{i}] = {wi}, w[{j}] = {wj}"
            )));
        }
    }
    Ok(())
}

impl Operator for CompositionOperator {
    fn kind(&self) -> &'static str {
        "composition"
    }

    fn space(&self) -> &Arc<AtomicMeasureSpace> {
        &self.space
    }

    fn apply_into(&self, src: &[C64], dst: &mut [C64]) {
        for ((out, &j), m) in dst.iter_mut().zip(&self.map).zip(&self.multipliers) {
            *out = m * src[j];
        }
    }

    fn ds_certificate(&self) -> DsReport {
        let w = self.space.weights();
        let mut columns = vec![0.0; self.map.len()];
        for (i, (&j, m)) in self.map.iter().zip(&self.multipliers).enumerate() {
            columns[j] += w[i] * m.norm();
        }
        for (c, wj) in columns.iter_mut().zip(w) {
            *c /= wj;
        }
        let rows: Vec<f64> = self.multipliers.iter().map(|m| m.norm()).collect();
        DsReport::from_sums(&columns, &rows)
    }

    fn to_kernel(&self) -> KernelOperator {
        let n = self.map.len();
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for (i, (&j, &m)) in self.map.iter().zip(&self.multipliers).enumerate() {
            entries[i * n + j] += m;
        }
        KernelOperator {
            n,
            entries,
            space: Arc::clone(&self.space),
        }
    }
}

/// Weighted pairing `⟨u, v⟩ = Σ w_i u_i conj(v_i)`.
pub fn pairing(u: &MeasurableFunction, v: &MeasurableFunction) -> Result<C64> {
    u.check_same_space(v)?;
    Ok(u.values()
        .iter()
        .zip(v.values())
        .zip(u.space().weights())
        .map(|((a, b), w)| a * b.conj() * *w)
        .sum())
}

/// Sign of the alternating-block function on the unit cell `[cell, cell+1)`.
///
/// With `n_0 = 0 < n_1 < … < n_J`, the function is `+1` on
/// `[n_k, n_{k+1} − 1)` and `−1` on `[n_{k+1} − 1, n_{k+1})`; past `n_J` it
/// continues as the `+1` start of an unfinished block.
pub fn block_sign(breakpoints: &[u64], cell: u64) -> f64 {
    // first breakpoint strictly greater than `cell`
    let idx = breakpoints.partition_point(|&b| b <= cell);
    match breakpoints.get(idx) {
        Some(&end) if cell == end - 1 => -1.0,
        _ => 1.0,
    }
}

/// Validates a breakpoint list `n_1 < … < n_J` with `n_1 ≥ 1`.
pub fn check_breakpoints(breakpoints: &[u64]) -> Result<()> {
    if breakpoints.is_empty() {
        return Err(Error::input("need at least one breakpoint"));
    }
    if breakpoints[0] == 0 || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input(
            "breakpoints must be positive and strictly increasing",
        ));
    }
    Ok(())
}

/// Atomizes `(0, window)` into `window · grid` atoms of weight `1/grid` and
/// returns `T f(t) = φ(t) f(t + 1)` with `φ` the alternating-block sign.
/// Atoms whose unit shift leaves the window get multiplier 0.
pub fn build_counterexample_operator(
    breakpoints: &[u64],
    grid: usize,
    window: usize,
) -> Result<CompositionOperator> {
    check_breakpoints(breakpoints)?;
    if grid == 0 {
        return Err(Error::input("grid must be a positive number of atoms per unit"));
    }
    let last = *breakpoints.last().expect("checked non-empty");
    if (window as u64) < last {
        return Err(Error::Input(format!(
            "window {window} is shorter than the last breakpoint {last}"
        )));
    }
    let atoms = window
        .checked_mul(grid)
        .ok_or_else(|| Error::input("window × grid overflows"))?;
    let space = Arc::new(AtomicMeasureSpace::uniform(atoms, 1.0 / grid as f64, true)?);
    let mut map = Vec::with_capacity(atoms);
    let mut multipliers = Vec::with_capacity(atoms);
    for i in 0..atoms {
        let target = i + grid;
        if target < atoms {
            map.push(target);
            let sign = block_sign(breakpoints, (i / grid) as u64);
            multipliers.push(C64::new(sign, 0.0));
        } else {
            map.push(i);
            multipliers.push(C64::new(0.0, 0.0));
        }
    }
    CompositionOperator::new(space, map, multipliers)
}
