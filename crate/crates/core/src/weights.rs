//! Bounded weight sequences `β_k` and the trigonometric polynomials used to
//! approximate them in Cesàro mean.

use std::f64::consts::TAU;
use std::fmt;

use crate::numeric::CompensatedSum;
use crate::{Error, Result, C64};

/// Number of multiplications between magnitude resets in `λ^k` streams.
pub const RENORMALIZE_EVERY: u64 = 1024;

/// Tolerance on `|λ| = 1`.
pub const UNIMODULAR_TOL: f64 = 1e-12;

/// Frequency of a trigonometric term. Roots of unity are kept as exact
/// fractions so that `λ^k` can be reduced modulo the order before any
/// floating-point work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    Unimodular(C64),
    RootOfUnity { index: u64, order: u64 },
}

impl Frequency {
    pub fn lambda(&self) -> C64 {
        match *self {
            Frequency::Unimodular(l) => l,
            Frequency::RootOfUnity { index, order } => {
                C64::from_polar(1.0, TAU * (index % order) as f64 / order as f64)
            }
        }
    }

    pub fn pow(&self, k: u64) -> C64 {
        match *self {
            Frequency::Unimodular(l) => {
                let (r, theta) = l.to_polar();
                C64::from_polar(r.powf(k as f64), theta * k as f64)
            }
            Frequency::RootOfUnity { index, order } => {
                let e = ((index as u128 * k as u128) % order as u128) as f64;
                C64::from_polar(1.0, TAU * e / order as f64)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub coeff: C64,
    pub freq: Frequency,
}

/// `P(k) = Σ_j z_j λ_j^k` with `|λ_j| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(terms: Vec<TrigTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::input("trigonometric polynomial needs at least one term"));
        }
        for (j, t) in terms.iter().enumerate() {
            if !t.coeff.is_finite() {
                return Err(Error::Input(format!("term {j} has a non-finite coefficient")));
            }
            match t.freq {
                Frequency::Unimodular(l) => {
                    if (l.norm() - 1.0).abs() > UNIMODULAR_TOL {
                        return Err(Error::Input(format!(
                            "term {j}: |λ| = {} is not 1",
                            l.norm()
                        )));
                    }
                }
                Frequency::RootOfUnity { order, .. } => {
                    if order == 0 {
                        return Err(Error::Input(format!("term {j}: root of unity of order 0")));
                    }
                }
            }
        }
        Ok(Self { terms })
    }

    /// Builds from `(z_j, λ_j)` pairs.
    pub fn from_pairs(pairs: &[(C64, C64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(coeff, l)| TrigTerm {
                    coeff,
                    freq: Frequency::Unimodular(l),
                })
                .collect(),
        )
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn eval(&self, k: u64) -> C64 {
        self.terms.iter().map(|t| t.coeff * t.freq.pow(k)).sum()
    }

    /// `Σ |z_j|`, an upper bound for `sup_k |P(k)|`.
    pub fn coefficient_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    /// Termwise sum.
    pub fn plus(&self, other: &TrigPolynomial) -> TrigPolynomial {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        TrigPolynomial { terms }
    }
}

/// Interpolates a `p`-periodic sequence exactly by its discrete Fourier
/// series: `λ_j = e^{2πij/p}`, `z_j = (1/p) Σ_k β_k e^{−2πijk/p}`.
pub fn dft_interpolant(periodic_values: &[C64]) -> Result<TrigPolynomial> {
    let p = periodic_values.len();
    if p == 0 {
        return Err(Error::input("periodic sequence must have at least one value"));
    }
    let order = p as u64;
    let terms = (0..order)
        .map(|j| {
            let coeff = periodic_values
                .iter()
                .enumerate()
                .map(|(k, &b)| {
                    let e = (j * k as u64) % order;
                    b * C64::from_polar(1.0, -TAU * e as f64 / p as f64)
                })
                .sum::<C64>()
                / p as f64;
            TrigTerm {
                coeff,
                freq: Frequency::RootOfUnity { index: j, order },
            }
        })
        .collect();
    TrigPolynomial::new(terms)
}

/// A bounded sequence `β_0, β_1, …` with a declared bound `C ≥ sup |β_k|`.
pub trait WeightSequence: Send + Sync + fmt::Debug {
    /// Registry name of the sequence family.
    fn kind(&self) -> &'static str;

    fn eval(&self, k: u64) -> Result<C64>;

    /// Declared `C`.
    fn bound(&self) -> f64;

    /// `β_0, β_1, …` in order. The default walks [`WeightSequence::eval`].
    fn stream(&self) -> Box<dyn Iterator<Item = Result<C64>> + Send + '_> {
        Box::new((0u64..).map(move |k| self.eval(k)))
    }
}

/// `eval_weight` in free-function form.
pub fn eval_weight(w: &dyn WeightSequence, k: u64) -> Result<C64> {
    w.eval(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub C64);

impl WeightSequence for Constant {
    fn kind(&self) -> &'static str {
        "constant"
    }

    fn eval(&self, _k: u64) -> Result<C64> {
        Ok(self.0)
    }

    fn bound(&self) -> f64 {
        self.0.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Periodic {
    values: Vec<C64>,
}

impl Periodic {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("periodic weight needs a non-empty period"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("periodic weight values must be finite"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }
}

impl WeightSequence for Periodic {
    fn kind(&self) -> &'static str {
        "periodic"
    }

    fn eval(&self, k: u64) -> Result<C64> {
        Ok(self.values[(k % self.values.len() as u64) as usize])
    }

    fn bound(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly(pub TrigPolynomial);

impl WeightSequence for TrigPoly {
    fn kind(&self) -> &'static str {
        "trig_poly"
    }

    fn eval(&self, k: u64) -> Result<C64> {
        Ok(self.0.eval(k))
    }

    fn bound(&self) -> f64 {
        self.0.coefficient_bound()
    }
}

/// `β_k = λ^k` for unimodular `λ`, the Wiener-Wintner weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPower {
    lambda: C64,
}

impl LambdaPower {
    pub fn new(lambda: C64) -> Result<Self> {
        if !lambda.is_finite() || (lambda.norm() - 1.0).abs() > UNIMODULAR_TOL {
            return Err(Error::Input(format!("|λ| = {} is not 1", lambda.norm())));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }
}

/// Multiplicative `λ^k` accumulator, magnitude reset every
/// [`RENORMALIZE_EVERY`] steps.
#[derive(Debug, Clone, Copy)]
pub struct PowerAccumulator {
    lambda: C64,
    current: C64,
    k: u64,
}

impl PowerAccumulator {
    pub fn new(lambda: C64) -> Self {
        Self {
            lambda,
            current: C64::new(1.0, 0.0),
            k: 0,
        }
    }

    /// Returns `λ^k` and advances to `k + 1`.
    #[inline]
    pub fn next_power(&mut self) -> C64 {
        let out = self.current;
        self.current *= self.lambda;
        self.k += 1;
        if self.k.is_multiple_of(RENORMALIZE_EVERY) {
            self.current /= self.current.norm();
        }
        out
    }
}

impl Iterator for PowerAccumulator {
    type Item = C64;

    fn next(&mut self) -> Option<C64> {
        Some(self.next_power())
    }
}

impl WeightSequence for LambdaPower {
    fn kind(&self) -> &'static str {
        "lambda_power"
    }

    /// Walks the same accumulator as [`WeightSequence::stream`], so random
    /// access and streaming agree bit for bit.
    fn eval(&self, k: u64) -> Result<C64> {
        let mut acc = PowerAccumulator::new(self.lambda);
        for _ in 0..k {
            acc.next_power();
        }
        Ok(acc.next_power())
    }

    fn bound(&self) -> f64 {
        1.0
    }

    fn stream(&self) -> Box<dyn Iterator<Item = Result<C64>> + Send + '_> {
        Box::new(PowerAccumulator::new(self.lambda).map(Ok))
    }
}

/// A finite list of weights with a declared bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Explicit {
    values: Vec<C64>,
    declared_bound: f64,
}

impl Explicit {
    /// `declared_bound = None` uses `max |β_k|`.
    pub fn new(values: Vec<C64>, declared_bound: Option<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("explicit weights must be finite"));
        }
        let declared_bound = match declared_bound {
            Some(c) if c.is_finite() && c >= 0.0 => c,
            Some(c) => return Err(Error::Input(format!("declared bound {c} is not finite"))),
            None => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        };
        Ok(Self {
            values,
            declared_bound,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl WeightSequence for Explicit {
    fn kind(&self) -> &'static str {
        "explicit"
    }

    fn eval(&self, k: u64) -> Result<C64> {
        self.values.get(k as usize).copied().ok_or_else(|| {
            Error::Range(format!(
                "explicit weight list has {} entries, asked for index {k}",
                self.values.len()
            ))
        })
    }

    fn bound(&self) -> f64 {
        self.declared_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub ok: bool,
    /// First `(k, |β_k|)` above the declared bound.
    pub violation: Option<(u64, f64)>,
    /// Number of terms actually checked.
    pub checked: u64,
}

/// Checks `|β_k| ≤ C + 1e-12` for `k < n`; finite lists are checked up to
/// their length.
pub fn validate_bound(w: &dyn WeightSequence, n: u64) -> Result<BoundCheck> {
    if n == 0 {
        return Err(Error::Domain("validate_bound needs n ≥ 1".into()));
    }
    let c = w.bound();
    let mut checked = 0;
    for (k, beta) in w.stream().take(n as usize).enumerate() {
        let beta = match beta {
            Ok(b) => b,
            Err(Error::Range(_)) => break,
            Err(e) => return Err(e),
        };
        checked += 1;
        if beta.norm() > c + 1e-12 {
            return Ok(BoundCheck {
                ok: false,
                violation: Some((k as u64, beta.norm())),
                checked,
            });
        }
    }
    Ok(BoundCheck {
        ok: true,
        violation: None,
        checked,
    })
}

/// `(1/n) Σ_{k<n} |β_k − P(k)|`.
pub fn besicovitch_deviation(w: &dyn WeightSequence, p: &TrigPolynomial, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("deviation needs n ≥ 1".into()));
    }
    let mut acc = CompensatedSum::default();
    for (k, beta) in w.stream().take(n as usize).enumerate() {
        acc.add((beta? - p.eval(k as u64)).norm());
    }
    Ok(acc.value() / n as f64)
}

/// Estimate of `limsup_n (1/n) Σ_{k<n} |β_k − P(k)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimsupEstimate {
    /// `(n, deviation)` at `n = 1, 2, 4, …`.
    pub samples: Vec<(u64, f64)>,
    /// Running max over the later half of the samples.
    pub estimate: f64,
}

/// Samples the deviation along a geometric grid up to `n_max` in one pass
/// and takes the max over the tail half of the samples.
pub fn besicovitch_limsup(
    w: &dyn WeightSequence,
    p: &TrigPolynomial,
    n_max: u64,
) -> Result<LimsupEstimate> {
    if n_max == 0 {
        return Err(Error::Domain("limsup estimate needs n_max ≥ 1".into()));
    }
    let mut samples = Vec::new();
    let mut next_sample = 1u64;
    let mut acc = CompensatedSum::default();
    for (k, beta) in w.stream().take(n_max as usize).enumerate() {
        acc.add((beta? - p.eval(k as u64)).norm());
        let n = k as u64 + 1;
        if n == next_sample {
            samples.push((n, acc.value() / n as f64));
            next_sample *= 2;
        }
    }
    if samples.last().map(|s| s.0) != Some(n_max) {
        samples.push((n_max, acc.value() / n_max as f64));
    }
    let tail = &samples[samples.len() / 2..];
    let estimate = tail.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(LimsupEstimate { samples, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Constant(c(1.0, 0.0)).eval(12345).unwrap(), c(1.0, 0.0));
        let alt = Periodic::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(alt.eval(7).unwrap(), c(-1.0, 0.0));
        let p = TrigPoly(TrigPolynomial::from_pairs(&[(c(2.0, 0.0), c(0.0, 1.0))]).unwrap());
        let v = p.eval(3).unwrap();
        assert!((v - c(0.0, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn explicit_list_exhaustion_is_a_range_error() {
        let e = Explicit::new(vec![c(0.5, 0.0)], None).unwrap();
        assert!(matches!(e.eval(1), Err(Error::Range(_))));
    }

    #[test]
    fn lambda_power_eval_matches_stream() {
        let l = LambdaPower::new(C64::from_polar(1.0, 0.7)).unwrap();
        let streamed: Vec<C64> = l.stream().take(3000).map(|r| r.unwrap()).collect();
        for k in [0u64, 1, 2, 1023, 1024, 1025, 2999] {
            assert_eq!(l.eval(k).unwrap(), streamed[k as usize]);
        }
        assert!(LambdaPower::new(c(1.1, 0.0)).is_err());
    }

    #[test]
    fn lambda_power_drift_stays_small() {
        let l = LambdaPower::new(C64::from_polar(1.0, 2.0_f64.sqrt())).unwrap();
        let worst = l
            .stream()
            .take(1_000_000)
            .map(|b| (b.unwrap().norm() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-10, "drift {worst}");
    }

    #[test]
    fn deviation_examples() {
        let p = TrigPolynomial::from_pairs(&[(c(1.0, 0.5), C64::from_polar(1.0, 0.3))]).unwrap();
        let w = TrigPoly(p.clone());
        for n in [1, 7, 100] {
            assert_eq!(besicovitch_deviation(&w, &p, n).unwrap(), 0.0);
        }
        let alt = Periodic::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let zero = TrigPolynomial::from_pairs(&[(c(0.0, 0.0), c(1.0, 0.0))]).unwrap();
        for n in [1, 2, 3, 50] {
            assert_eq!(besicovitch_deviation(&alt, &zero, n).unwrap(), 1.0);
        }
        let spike = Periodic::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let interp = dft_interpolant(spike.values()).unwrap();
        for n in 1..=30 {
            assert!(besicovitch_deviation(&spike, &interp, n).unwrap() < 1e-15);
        }
    }

    #[test]
    fn dft_examples() {
        let p = dft_interpolant(&[c(2.5, -1.0)]).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].coeff, c(2.5, -1.0));
        assert_eq!(p.terms()[0].freq.lambda(), c(1.0, 0.0));

        let p = dft_interpolant(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let t = p.terms();
        assert!(t[0].coeff.norm() < 1e-15);
        assert!((t[0].freq.lambda() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((t[1].coeff - c(1.0, 0.0)).norm() < 1e-15);
        assert!((t[1].freq.lambda() - c(-1.0, 0.0)).norm() < 1e-15);

        let p = dft_interpolant(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]).unwrap();
        for (j, t) in p.terms().iter().enumerate() {
            if j == 1 {
                assert!((t.coeff - c(1.0, 0.0)).norm() < 1e-15);
                assert!((t.freq.lambda() - c(0.0, 1.0)).norm() < 1e-15);
            } else {
                assert!(t.coeff.norm() < 1e-15, "term {j}");
            }
        }
        assert!(dft_interpolant(&[]).is_err());
    }

    #[test]
    fn validate_bound_examples() {
        let l = LambdaPower::new(C64::from_polar(1.0, 1.234)).unwrap();
        assert!(validate_bound(&l, 10_000).unwrap().ok);

        let e = Explicit::new(vec![c(0.5, 0.0), c(2.0, 0.0)], Some(1.0)).unwrap();
        let chk = validate_bound(&e, 2).unwrap();
        assert!(!chk.ok);
        assert_eq!(chk.violation.unwrap().0, 1);

        let p = TrigPolynomial::from_pairs(&[
            (c(1.0, 0.0), C64::from_polar(1.0, 0.1)),
            (c(0.0, -2.0), C64::from_polar(1.0, -2.2)),
            (c(0.3, 0.4), C64::from_polar(1.0, 3.0)),
        ])
        .unwrap();
        let w = TrigPoly(p);
        assert!((w.bound() - 3.5).abs() < 1e-15);
        assert!(validate_bound(&w, 5000).unwrap().ok);
    }

    #[test]
    fn limsup_estimate_of_alternating_sequence() {
        let alt = Periodic::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let zero = TrigPolynomial::from_pairs(&[(c(0.0, 0.0), c(1.0, 0.0))]).unwrap();
        let est = besicovitch_limsup(&alt, &zero, 1000).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.samples.last().unwrap().0, 1000);
    }

    #[test]
    fn deviation_triangle_inequality() {
        let w = Periodic::new(vec![c(1.0, 0.0), c(0.2, -0.4), c(-0.7, 0.1)]).unwrap();
        let p1 = TrigPolynomial::from_pairs(&[(c(0.3, 0.0), C64::from_polar(1.0, 0.9))]).unwrap();
        let p2 = TrigPolynomial::from_pairs(&[(c(0.0, 0.2), C64::from_polar(1.0, -1.7))]).unwrap();
        let both = p1.plus(&p2);
        for n in [1u64, 5, 64, 333] {
            let sup2 = (0..n).map(|k| p2.eval(k).norm()).fold(0.0, f64::max);
            let lhs = besicovitch_deviation(&w, &both, n).unwrap();
            let rhs = besicovitch_deviation(&w, &p1, n).unwrap() + sup2;
            assert!(lhs <= rhs + 1e-12);
        }
    }
}
