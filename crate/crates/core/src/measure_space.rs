//! Atomic measure spaces, measurable functions and everything that is computed
//! from the non-increasing rearrangement: Hardy-Littlewood majorization, the
//! norms of `L¹+L∞` and `L¹∩L∞`, Luxemburg (Orlicz) and Lorentz norms.
//!
//! Every integral here is a closed-form sum over the plateaus of a step
//! function; there is no quadrature anywhere in the module.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::sync::Arc;

use crate::numeric::{compensated_sum, CompensatedSum};
use crate::{Error, Result, C64};

/// Absolute tolerance used by [`majorizes`].
pub const MAJORIZATION_TOL: f64 = 1e-9;

/// Relative tolerance for identities that hold exactly in exact arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

/// A finite collection of atoms with positive measure.
///
/// `truncated` marks a finite window cut out of an infinite space; statements
/// about behaviour "at infinity" are then only certificates relative to the
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasureSpace {
    weights: Vec<f64>,
    truncated: bool,
    total: f64,
}

impl AtomicMeasureSpace {
    pub fn new(weights: Vec<f64>, truncated: bool) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("measure space needs at least one atom"));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::Input(format!(
                "atom {i} has weight {w}; weights must be positive and finite"
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        Ok(Self {
            weights,
            truncated,
            total,
        })
    }

    /// `n` atoms of equal weight `w`.
    pub fn uniform(n: usize, w: f64, truncated: bool) -> Result<Self> {
        Self::new(vec![w; n], truncated)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, atom: usize) -> f64 {
        self.weights[atom]
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn total_measure(&self) -> f64 {
        self.total
    }

    /// Whether rearrangements over `self` and `other` may be compared:
    /// equal total measure, or both are windows of an infinite space.
    pub fn compatible_with(&self, other: &Self) -> bool {
        if self.truncated && other.truncated {
            return true;
        }
        let scale = self.total.abs().max(other.total.abs()).max(1.0);
        (self.total - other.total).abs() <= EXACT_TOL * scale
    }
}

/// A complex-valued function on the atoms of a space.
#[derive(Debug, Clone)]
pub struct MeasurableFunction {
    values: Vec<C64>,
    space: Arc<AtomicMeasureSpace>,
}

impl PartialEq for MeasurableFunction {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && same_space(&self.space, &other.space)
    }
}

pub(crate) fn same_space(a: &Arc<AtomicMeasureSpace>, b: &Arc<AtomicMeasureSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl MeasurableFunction {
    pub fn new(space: Arc<AtomicMeasureSpace>, values: Vec<C64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Input(format!(
                "function has {} values but the space has {} atoms",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("value at atom {i} is not finite")));
        }
        Ok(Self { values, space })
    }

    pub fn from_real(space: Arc<AtomicMeasureSpace>, values: &[f64]) -> Result<Self> {
        Self::new(space, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn constant(space: Arc<AtomicMeasureSpace>, c: C64) -> Result<Self> {
        let n = space.len();
        Self::new(space, vec![c; n])
    }

    /// The constant function `𝟏`.
    pub fn one(space: Arc<AtomicMeasureSpace>) -> Self {
        let n = space.len();
        Self {
            values: vec![C64::new(1.0, 0.0); n],
            space,
        }
    }

    pub fn zero(space: Arc<AtomicMeasureSpace>) -> Self {
        let n = space.len();
        Self {
            values: vec![C64::new(0.0, 0.0); n],
            space,
        }
    }

    /// Indicator of the given set of atoms.
    pub fn indicator(space: Arc<AtomicMeasureSpace>, atoms: &[usize]) -> Result<Self> {
        let mut values = vec![C64::new(0.0, 0.0); space.len()];
        for &a in atoms {
            *values
                .get_mut(a)
                .ok_or_else(|| Error::Input(format!("atom {a} out of range")))? =
                C64::new(1.0, 0.0);
        }
        Self::new(space, values)
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn space(&self) -> &Arc<AtomicMeasureSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            space: Arc::clone(&self.space),
        }
    }

    /// `μ{|f| > λ}` computed directly from the atoms.
    pub fn distribution(&self, lambda: f64) -> f64 {
        compensated_sum(
            self.values
                .iter()
                .zip(self.space.weights())
                .filter(|(v, _)| v.norm() > lambda)
                .map(|(_, w)| *w),
        )
    }

    pub(crate) fn check_same_space(&self, other: &Self) -> Result<()> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::input("functions live on different spaces"))
        }
    }
}

/// Non-increasing rearrangement `μ_t(f)` of an atomic function.
///
/// The step function takes the value `plateau_values[i]` on
/// `[breakpoints[i], breakpoints[i + 1])` and vanishes past the last
/// breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Rearrangement {
    breakpoints: Vec<f64>,
    plateau_values: Vec<f64>,
}

impl Rearrangement {
    /// Builds a rearrangement from explicit steps, validating monotonicity.
    pub fn from_steps(breakpoints: Vec<f64>, plateau_values: Vec<f64>) -> Result<Self> {
        if breakpoints.first() != Some(&0.0) {
            return Err(Error::input("rearrangement breakpoints must start at 0"));
        }
        if breakpoints.len() != plateau_values.len() + 1 {
            return Err(Error::input(
                "need exactly one more breakpoint than plateau values",
            ));
        }
        if breakpoints
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::input(
                "breakpoints must be finite and strictly increasing",
            ));
        }
        if plateau_values.iter().any(|v| !(v.is_finite() && *v >= 0.0))
            || plateau_values.windows(2).any(|w| w[1] > w[0])
        {
            return Err(Error::input(
                "plateau values must be finite, nonnegative and non-increasing",
            ));
        }
        Ok(Self {
            breakpoints,
            plateau_values,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn plateau_values(&self) -> &[f64] {
        &self.plateau_values
    }

    /// Measure of the support of the source function, `t_m`.
    pub fn support_measure(&self) -> f64 {
        *self.breakpoints.last().expect("breakpoints never empty")
    }

    /// Plateaus as `(t_left, t_right, value)`.
    pub fn plateaus(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.plateau_values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    /// `μ_t` for `t ≥ 0`; right-continuous.
    pub fn value_at(&self, t: f64) -> f64 {
        // index of the first breakpoint strictly greater than t
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        if idx == 0 || idx > self.plateau_values.len() {
            if t < 0.0 {
                return self.plateau_values.first().copied().unwrap_or(0.0);
            }
            return 0.0;
        }
        self.plateau_values[idx - 1]
    }

    /// `∫_0^s μ_t dt`, exact.
    pub fn hl_integral(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Domain(format!(
                "integration limit must be positive, got {s}"
            )));
        }
        let mut acc = CompensatedSum::default();
        for (a, b, v) in self.plateaus() {
            if a >= s {
                break;
            }
            acc.add(v * (b.min(s) - a));
        }
        Ok(acc.value())
    }

    /// Total area, which equals `‖f‖₁`.
    pub fn total_integral(&self) -> f64 {
        compensated_sum(self.plateaus().map(|(a, b, v)| v * (b - a)))
    }

    /// Lebesgue measure of `{t : μ_t > λ}`.
    pub fn level_measure(&self, lambda: f64) -> f64 {
        let count = self.plateau_values.partition_point(|&v| v > lambda);
        self.breakpoints[count]
    }
}

/// Sorts atom magnitudes in non-increasing order and lays them out over
/// intervals of length equal to the atom weights. Equal magnitudes share one
/// plateau, so the result does not depend on atom order.
pub fn rearrangement(f: &MeasurableFunction) -> Rearrangement {
    let mut atoms: Vec<(f64, f64)> = f
        .values()
        .iter()
        .zip(f.space().weights())
        .map(|(v, &w)| (v.norm(), w))
        .filter(|(m, _)| *m > 0.0)
        .collect();
    atoms.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut breakpoints = vec![0.0];
    let mut plateau_values = Vec::new();
    let mut length = CompensatedSum::default();
    let mut i = 0;
    while i < atoms.len() {
        let magnitude = atoms[i].0;
        while i < atoms.len() && atoms[i].0 == magnitude {
            length.add(atoms[i].1);
            i += 1;
        }
        breakpoints.push(length.value());
        plateau_values.push(magnitude);
    }
    Rearrangement {
        breakpoints,
        plateau_values,
    }
}

/// `∫_0^s μ_t dt` for a rearrangement (free-function form).
pub fn hl_integral(r: &Rearrangement, s: f64) -> Result<f64> {
    r.hl_integral(s)
}

/// Where `g ≺≺ f` fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorizationViolation {
    pub s: f64,
    /// `∫_0^s μ_t(g) dt`
    pub dominated: f64,
    /// `∫_0^s μ_t(f) dt`
    pub dominating: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Majorization {
    pub holds: bool,
    pub violation: Option<MajorizationViolation>,
}

/// Tests `g ≺≺ f` with the default absolute tolerance.
pub fn majorizes(f: &MeasurableFunction, g: &MeasurableFunction) -> Result<Majorization> {
    if !f.space().compatible_with(g.space()) {
        return Err(Error::input(
            "majorization needs spaces of equal total measure or two truncated windows",
        ));
    }
    Ok(majorizes_rearranged(
        &rearrangement(f),
        &rearrangement(g),
        MAJORIZATION_TOL,
    ))
}

/// `g ≺≺ f` on rearrangements. Both integrals are piecewise linear in `s`
/// with kinks only at breakpoints, so checking the union of breakpoints is
/// exact.
pub fn majorizes_rearranged(f: &Rearrangement, g: &Rearrangement, tol: f64) -> Majorization {
    let mut points: Vec<f64> = f
        .breakpoints()
        .iter()
        .chain(g.breakpoints())
        .copied()
        .filter(|&s| s > 0.0)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    // running integrals, advanced plateau by plateau
    let mut fi = PrefixIntegral::new(f);
    let mut gi = PrefixIntegral::new(g);
    for s in points {
        let dominating = fi.at(s);
        let dominated = gi.at(s);
        if dominated > dominating + tol {
            return Majorization {
                holds: false,
                violation: Some(MajorizationViolation {
                    s,
                    dominated,
                    dominating,
                }),
            };
        }
    }
    Majorization {
        holds: true,
        violation: None,
    }
}

/// Evaluates `∫_0^s μ_t dt` for a non-decreasing sequence of `s`.
struct PrefixIntegral<'a> {
    r: &'a Rearrangement,
    plateau: usize,
    done: CompensatedSum,
}

impl<'a> PrefixIntegral<'a> {
    fn new(r: &'a Rearrangement) -> Self {
        Self {
            r,
            plateau: 0,
            done: CompensatedSum::default(),
        }
    }

    fn at(&mut self, s: f64) -> f64 {
        let bp = &self.r.breakpoints;
        let vals = &self.r.plateau_values;
        while self.plateau < vals.len() && bp[self.plateau + 1] <= s {
            self.done
                .add(vals[self.plateau] * (bp[self.plateau + 1] - bp[self.plateau]));
            self.plateau += 1;
        }
        let partial = if self.plateau < vals.len() && s > bp[self.plateau] {
            vals[self.plateau] * (s - bp[self.plateau])
        } else {
            0.0
        };
        self.done.value() + partial
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L1,
    Linf,
    L1PlusLinf,
    L1CapLinf,
}

impl NormKind {
    pub const ALL: [NormKind; 4] = [
        NormKind::L1,
        NormKind::Linf,
        NormKind::L1PlusLinf,
        NormKind::L1CapLinf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::L1 => "L1",
            NormKind::Linf => "Linf",
            NormKind::L1PlusLinf => "L1plusLinf",
            NormKind::L1CapLinf => "L1capLinf",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

pub fn l1_norm(f: &MeasurableFunction) -> f64 {
    compensated_sum(
        f.values()
            .iter()
            .zip(f.space().weights())
            .map(|(v, w)| w * v.norm()),
    )
}

pub fn linf_norm(f: &MeasurableFunction) -> f64 {
    f.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn norm(f: &MeasurableFunction, which: NormKind) -> f64 {
    match which {
        NormKind::L1 => l1_norm(f),
        NormKind::Linf => linf_norm(f),
        NormKind::L1PlusLinf => rearrangement(f)
            .hl_integral(1.0)
            .expect("limit 1 is positive"),
        NormKind::L1CapLinf => l1_norm(f).max(linf_norm(f)),
    }
}

/// A norm that depends on `f` only through its rearrangement.
pub trait SymmetricNorm: Send + Sync {
    fn name(&self) -> String;
    fn evaluate(&self, f: &MeasurableFunction) -> Result<f64>;
}

impl SymmetricNorm for NormKind {
    fn name(&self) -> String {
        NormKind::name(*self).to_string()
    }

    fn evaluate(&self, f: &MeasurableFunction) -> Result<f64> {
        Ok(norm(f, *self))
    }
}

type PhiFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A convex `Φ: [0,∞) → [0,∞)` with `Φ(0) = 0`.
#[derive(Clone)]
pub struct OrliczFunction {
    label: String,
    phi: Arc<PhiFn>,
}

impl fmt::Debug for OrliczFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrliczFunction")
            .field("label", &self.label)
            .finish()
    }
}

impl OrliczFunction {
    /// Wraps `phi` after spot checks: `Φ(0) = 0`, `Φ > 0` on
    /// `(positive_from, ∞)` and midpoint convexity on a dyadic grid.
    pub fn new(
        label: impl Into<String>,
        positive_from: f64,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let label = label.into();
        if phi(0.0) != 0.0 {
            return Err(Error::Input(format!("{label}: Φ(0) must be 0")));
        }
        let grid: Vec<f64> = (-12..=12)
            .flat_map(|k| {
                let base = 2f64.powi(k);
                [base, 1.5 * base]
            })
            .collect();
        for &u in &grid {
            let v = phi(u);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Input(format!("{label}: Φ({u}) = {v} is not in [0,∞)")));
            }
            if u > positive_from && v <= 0.0 {
                return Err(Error::Input(format!(
                    "{label}: Φ({u}) must be positive past {positive_from}"
                )));
            }
        }
        for (i, &a) in grid.iter().enumerate() {
            for &b in &grid[i + 1..] {
                let mid = phi(0.5 * (a + b));
                let chord = 0.5 * (phi(a) + phi(b));
                if mid > chord + EXACT_TOL * chord.max(1.0) {
                    return Err(Error::Input(format!(
                        "{label}: midpoint convexity fails between {a} and {b}"
                    )));
                }
            }
        }
        Ok(Self {
            label,
            phi: Arc::new(phi),
        })
    }

    /// `Φ(u) = u^p`, `p ≥ 1`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Input(format!("power Orlicz function needs p ≥ 1, got {p}")));
        }
        Self::new(format!("u^{p}"), 0.0, move |u: f64| u.powf(p))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.phi)(u)
    }
}

const MAX_BRACKET_DOUBLINGS: usize = 200;

/// `inf{a > 0 : Σ w_i Φ(|v_i|/a) ≤ 1}` by bracketing and bisection.
pub fn luxemburg_norm(f: &MeasurableFunction, phi: &OrliczFunction, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let atoms: Vec<(f64, f64)> = f
        .values()
        .iter()
        .zip(f.space().weights())
        .map(|(v, &w)| (v.norm(), w))
        .filter(|(m, _)| *m > 0.0)
        .collect();
    let modular = |a: f64| compensated_sum(atoms.iter().map(|&(m, w)| w * phi.eval(m / a)));

    let start = linf_norm(f);
    let mut hi = start;
    let mut doublings = 0;
    while modular(hi) > 1.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || !hi.is_finite() {
            return Err(Error::Numeric(format!(
                "modular of {} stays above 1 after {MAX_BRACKET_DOUBLINGS} doublings",
                phi.label()
            )));
        }
    }
    let mut lo = hi;
    doublings = 0;
    while modular(lo) <= 1.0 {
        lo *= 0.5;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || lo == 0.0 {
            return Err(Error::Numeric(format!(
                "modular of {} stays below 1 after {MAX_BRACKET_DOUBLINGS} halvings",
                phi.label()
            )));
        }
    }
    // invariant: modular(lo) > 1 >= modular(hi)
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone)]
pub struct LuxemburgNorm {
    pub phi: OrliczFunction,
    pub tol: f64,
}

impl SymmetricNorm for LuxemburgNorm {
    fn name(&self) -> String {
        format!("luxemburg[{}]", self.phi.label())
    }

    fn evaluate(&self, f: &MeasurableFunction) -> Result<f64> {
        luxemburg_norm(f, &self.phi, self.tol)
    }
}

/// Increasing concave piecewise-linear `φ` with `φ(0) = 0`.
///
/// Slope `slopes[i]` applies on `[knots[i], knots[i + 1])`; the last slope
/// extends to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzWeight {
    knots: Vec<f64>,
    slopes: Vec<f64>,
}

impl LorentzWeight {
    pub fn new(knots: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if knots.first() != Some(&0.0) || knots.len() != slopes.len() {
            return Err(Error::input(
                "Lorentz weight needs knots starting at 0 and one slope per knot",
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::input("Lorentz knots must be strictly increasing"));
        }
        if slopes.iter().any(|s| !(s.is_finite() && *s >= 0.0))
            || slopes.windows(2).any(|w| w[1] > w[0])
        {
            return Err(Error::input(
                "Lorentz slopes must be nonnegative and non-increasing (concavity)",
            ));
        }
        Ok(Self { knots, slopes })
    }

    /// `φ(t) = t`.
    pub fn identity() -> Self {
        Self {
            knots: vec![0.0],
            slopes: vec![1.0],
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &s) in self.slopes.iter().enumerate() {
            let a = self.knots[i];
            if t <= a {
                break;
            }
            let b = self.knots.get(i + 1).copied().unwrap_or(f64::INFINITY);
            acc += s * (t.min(b) - a);
        }
        acc
    }

    fn segment(&self, i: usize) -> (f64, f64, f64) {
        let b = self.knots.get(i + 1).copied().unwrap_or(f64::INFINITY);
        (self.knots[i], b, self.slopes[i])
    }
}

/// `∫_0^∞ μ_t(f) dφ(t)`: plateau × slope over every overlapping segment.
pub fn lorentz_norm(f: &MeasurableFunction, w: &LorentzWeight) -> f64 {
    let r = rearrangement(f);
    let mut acc = CompensatedSum::default();
    let mut seg = 0;
    for (a, b, v) in r.plateaus() {
        loop {
            let (sa, sb, slope) = w.segment(seg);
            let lo = a.max(sa);
            let hi = b.min(sb);
            if hi > lo {
                acc.add(v * slope * (hi - lo));
            }
            if sb < b && seg + 1 < w.slopes.len() {
                seg += 1;
            } else {
                break;
            }
        }
    }
    acc.value()
}

#[derive(Debug, Clone)]
pub struct LorentzNorm(pub LorentzWeight);

impl SymmetricNorm for LorentzNorm {
    fn name(&self) -> String {
        "lorentz".to_string()
    }

    fn evaluate(&self, f: &MeasurableFunction) -> Result<f64> {
        Ok(lorentz_norm(f, &self.0))
    }
}

/// `sup_{t ≥ t0} μ_t(f)` relative to the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCertificate {
    pub value: f64,
    /// `t0` reached or passed the end of the window.
    pub truncation_warning: bool,
}

pub fn r_mu_tail(f: &MeasurableFunction, t0: f64) -> Result<TailCertificate> {
    if !(t0 > 0.0) {
        return Err(Error::Domain(format!("tail start must be positive, got {t0}")));
    }
    if t0 >= f.space().total_measure() {
        return Ok(TailCertificate {
            value: 0.0,
            truncation_warning: true,
        });
    }
    Ok(TailCertificate {
        value: rearrangement(f).value_at(t0),
        truncation_warning: false,
    })
}

/// Splits `f = g + h` with `g = f·χ{|f| > eps}` and `h = f·χ{|f| ≤ eps}`.
pub fn decompose(
    f: &MeasurableFunction,
    eps: f64,
) -> Result<(MeasurableFunction, MeasurableFunction)> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let zero = C64::new(0.0, 0.0);
    let (g, h): (Vec<C64>, Vec<C64>) = f
        .values()
        .iter()
        .map(|&v| if v.norm() > eps { (v, zero) } else { (zero, v) })
        .unzip();
    let space = Arc::clone(f.space());
    Ok((
        MeasurableFunction {
            values: g,
            space: Arc::clone(&space),
        },
        MeasurableFunction { values: h, space },
    ))
}
