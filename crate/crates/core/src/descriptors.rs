//! JSON descriptions of spaces, functions, operators, weights and norms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::measure_space::{
    AtomicMeasureSpace, LorentzNorm, LorentzWeight, LuxemburgNorm, MeasurableFunction,
    OrliczFunction,
};
use crate::operators::{build_counterexample_operator, CompositionOperator, KernelOperator};
use crate::weights::{
    Constant, Explicit, Frequency, LambdaPower, Periodic, TrigPolynomial, TrigTerm,
};
use crate::{Error, Result, C64};

/// `{"weights": [...], "truncated": bool}` or the shorthand
/// `{"atoms": n, "weight": w, "truncated": bool}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Weights {
        weights: Vec<f64>,
        #[serde(default)]
        truncated: bool,
    },
    Uniform {
        atoms: usize,
        #[serde(default = "one")]
        weight: f64,
        #[serde(default)]
        truncated: bool,
    },
}

fn one() -> f64 {
    1.0
}

impl SpaceSpec {
    pub fn build(&self) -> Result<AtomicMeasureSpace> {
        match self {
            SpaceSpec::Weights { weights, truncated } => {
                AtomicMeasureSpace::new(weights.clone(), *truncated)
            }
            SpaceSpec::Uniform {
                atoms,
                weight,
                truncated,
            } => AtomicMeasureSpace::uniform(*atoms, *weight, *truncated),
        }
    }

    pub fn atoms(&self) -> usize {
        match self {
            SpaceSpec::Weights { weights, .. } => weights.len(),
            SpaceSpec::Uniform { atoms, .. } => *atoms,
        }
    }
}

fn zip_complex(what: &str, re: &[f64], im: Option<&[f64]>) -> Result<Vec<C64>> {
    match im {
        None => Ok(re.iter().map(|&x| C64::new(x, 0.0)).collect()),
        Some(im) if im.len() == re.len() => {
            Ok(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect())
        }
        Some(im) => Err(Error::Input(format!(
            "{what}: re has {} entries, im has {}",
            re.len(),
            im.len()
        ))),
    }
}

/// `{"re": [...], "im": [...]}`; `im` defaults to zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionValues {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl FunctionValues {
    pub fn values(&self) -> Result<Vec<C64>> {
        zip_complex("function", &self.re, self.im.as_deref())
    }

    pub fn build(&self, space: Arc<AtomicMeasureSpace>) -> Result<MeasurableFunction> {
        MeasurableFunction::new(space, self.values()?)
    }

    pub fn from_function(f: &MeasurableFunction) -> Self {
        let re = f.values().iter().map(|v| v.re).collect();
        let im: Vec<f64> = f.values().iter().map(|v| v.im).collect();
        Self {
            re,
            im: im.iter().any(|&x| x != 0.0).then_some(im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub matrix_re: Vec<Vec<f64>>,
    #[serde(default)]
    pub matrix_im: Option<Vec<Vec<f64>>>,
}

impl KernelSpec {
    pub fn dim(&self) -> usize {
        self.matrix_re.len()
    }

    pub fn build(&self, space: Arc<AtomicMeasureSpace>) -> Result<KernelOperator> {
        let rows = match &self.matrix_im {
            None => self
                .matrix_re
                .iter()
                .map(|r| zip_complex("kernel row", r, None))
                .collect::<Result<Vec<_>>>()?,
            Some(im) => {
                if im.len() != self.matrix_re.len() {
                    return Err(Error::input("matrix_re and matrix_im differ in row count"));
                }
                self.matrix_re
                    .iter()
                    .zip(im)
                    .map(|(r, i)| zip_complex("kernel row", r, Some(i)))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        KernelOperator::new(space, rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionSpec {
    pub map: Vec<usize>,
    #[serde(default)]
    pub mult_re: Option<Vec<f64>>,
    #[serde(default)]
    pub mult_im: Option<Vec<f64>>,
    /// Validate that `map` is a measure-preserving bijection.
    #[serde(default)]
    pub measure_preserving: bool,
}

impl CompositionSpec {
    pub fn build(&self, space: Arc<AtomicMeasureSpace>) -> Result<CompositionOperator> {
        let n = self.map.len();
        let re = self.mult_re.clone().unwrap_or_else(|| vec![1.0; n]);
        let mult = zip_complex("multipliers", &re, self.mult_im.as_deref())?;
        if self.measure_preserving {
            CompositionOperator::measure_preserving(space, self.map.clone(), mult)
        } else {
            CompositionOperator::new(space, self.map.clone(), mult)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub breakpoints: Vec<u64>,
    pub grid: usize,
    pub window: usize,
}

impl CounterexampleSpec {
    pub fn build(&self) -> Result<CompositionOperator> {
        build_counterexample_operator(&self.breakpoints, self.grid, self.window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclicShiftSpec {
    #[serde(default = "one_usize")]
    pub step: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantWeightSpec {
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl ConstantWeightSpec {
    pub fn build(&self) -> Constant {
        Constant(C64::new(self.re, self.im))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicWeightSpec {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Option<Vec<f64>>,
}

impl PeriodicWeightSpec {
    pub fn build(&self) -> Result<Periodic> {
        Periodic::new(zip_complex("periodic weight", &self.re, self.im.as_deref())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTermSpec {
    pub z_re: f64,
    #[serde(default)]
    pub z_im: f64,
    pub lam_re: f64,
    #[serde(default)]
    pub lam_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolySpec {
    pub terms: Vec<TrigTermSpec>,
}

impl TrigPolySpec {
    pub fn build(&self) -> Result<TrigPolynomial> {
        TrigPolynomial::new(
            self.terms
                .iter()
                .map(|t| TrigTerm {
                    coeff: C64::new(t.z_re, t.z_im),
                    freq: Frequency::Unimodular(C64::new(t.lam_re, t.lam_im)),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPowerSpec {
    pub lambda_re: f64,
    #[serde(default)]
    pub lambda_im: f64,
}

impl LambdaPowerSpec {
    pub fn build(&self) -> Result<LambdaPower> {
        LambdaPower::new(C64::new(self.lambda_re, self.lambda_im))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitWeightSpec {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Option<Vec<f64>>,
    #[serde(default)]
    pub bound: Option<f64>,
}

impl ExplicitWeightSpec {
    pub fn build(&self) -> Result<Explicit> {
        Explicit::new(
            zip_complex("explicit weight", &self.re, self.im.as_deref())?,
            self.bound,
        )
    }
}

/// Luxemburg norm for `Φ(u) = u^power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuxemburgSpec {
    pub power: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-12
}

impl LuxemburgSpec {
    pub fn build(&self) -> Result<LuxemburgNorm> {
        Ok(LuxemburgNorm {
            phi: OrliczFunction::power(self.power)?,
            tol: self.tol,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzSpec {
    pub knots: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl LorentzSpec {
    pub fn build(&self) -> Result<LorentzNorm> {
        Ok(LorentzNorm(LorentzWeight::new(
            self.knots.clone(),
            self.slopes.clone(),
        )?))
    }
}

pub(crate) fn parse<T: serde::de::DeserializeOwned>(what: &str, value: &serde_json::Value) -> Result<T> {
    serde_json::from_value(value.clone()).map_err(|e| Error::Input(format!("{what}: {e}")))
}
