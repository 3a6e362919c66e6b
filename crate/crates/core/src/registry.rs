//! Name-keyed factories that turn JSON descriptions into trait objects.
//!
//! A description is either a bare string (`"L1"`) or an object whose `kind`
//! field names the factory (`{"kind": "lambda_power", "lambda_re": 0.0,
//! "lambda_im": 1.0}`). The built-in registries can be extended with
//! [`Registry::register`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use crate::descriptors::{
    parse, CompositionSpec, ConstantWeightSpec, CounterexampleSpec, CyclicShiftSpec,
    ExplicitWeightSpec, KernelSpec, LambdaPowerSpec, LorentzSpec, LuxemburgSpec,
    PeriodicWeightSpec, TrigPolySpec,
};
use crate::measure_space::{AtomicMeasureSpace, NormKind, SymmetricNorm};
use crate::operators::{CompositionOperator, KernelOperator, Operator};
use crate::weights::{TrigPoly, WeightSequence};
use crate::{Error, Result};

pub type Factory<T, Ctx> = fn(&Value, &Ctx) -> Result<Box<T>>;

pub struct Registry<T: ?Sized, Ctx: ?Sized> {
    what: &'static str,
    factories: BTreeMap<String, Factory<T, Ctx>>,
}

impl<T: ?Sized, Ctx: ?Sized> fmt::Debug for Registry<T, Ctx> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("what", &self.what)
            .field("names", &self.factories.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl<T: ?Sized, Ctx: ?Sized> Registry<T, Ctx> {
    pub fn empty(what: &'static str) -> Self {
        Self {
            what,
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: impl Into<String>, factory: Factory<T, Ctx>) -> &mut Self {
        self.factories.insert(name.into(), factory);
        self
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    /// The factory name a description refers to.
    pub fn kind_of(&self, value: &Value) -> Result<String> {
        match value {
            Value::String(s) => Ok(s.clone()),
            Value::Object(map) => match map.get("kind") {
                Some(Value::String(s)) => Ok(s.clone()),
                _ => Err(Error::Input(format!("{} description needs a \"kind\" string", self.what))),
            },
            _ => Err(Error::Input(format!(
                "{} description must be a string or an object",
                self.what
            ))),
        }
    }

    pub fn build(&self, value: &Value, ctx: &Ctx) -> Result<Box<T>> {
        let kind = self.kind_of(value)?;
        let factory = self.factories.get(&kind).ok_or_else(|| {
            Error::Input(format!(
                "unknown {} kind {kind:?}; known: {}",
                self.what,
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(value, ctx)
    }
}

/// Space an operator description is bound to, when the description does
/// not define its own.
#[derive(Debug, Clone, Default)]
pub struct OperatorContext {
    pub space: Option<Arc<AtomicMeasureSpace>>,
}

impl OperatorContext {
    pub fn new(space: Arc<AtomicMeasureSpace>) -> Self {
        Self { space: Some(space) }
    }

    fn require_space(&self, kind: &str) -> Result<Arc<AtomicMeasureSpace>> {
        self.space
            .clone()
            .ok_or_else(|| Error::Input(format!("operator kind {kind:?} needs a space")))
    }
}

pub type OperatorRegistry = Registry<dyn Operator, OperatorContext>;
pub type WeightRegistry = Registry<dyn WeightSequence, ()>;
pub type NormRegistry = Registry<dyn SymmetricNorm, ()>;

fn kernel(value: &Value, ctx: &OperatorContext) -> Result<Box<dyn Operator>> {
    let spec: KernelSpec = parse("kernel operator", value)?;
    Ok(Box::new(spec.build(ctx.require_space("kernel")?)?))
}

fn composition(value: &Value, ctx: &OperatorContext) -> Result<Box<dyn Operator>> {
    let spec: CompositionSpec = parse("composition operator", value)?;
    Ok(Box::new(spec.build(ctx.require_space("composition")?)?))
}

fn counterexample(value: &Value, ctx: &OperatorContext) -> Result<Box<dyn Operator>> {
    let spec: CounterexampleSpec = parse("counterexample operator", value)?;
    let op = spec.build()?;
    if let Some(space) = &ctx.space {
        if space.len() != op.space().len() {
            return Err(Error::Input(format!(
                "counterexample operator has {} atoms but the configured space has {}",
                op.space().len(),
                space.len()
            )));
        }
    }
    Ok(Box::new(op))
}

fn identity(_: &Value, ctx: &OperatorContext) -> Result<Box<dyn Operator>> {
    Ok(Box::new(KernelOperator::identity(ctx.require_space("identity")?)))
}

fn cyclic_shift(value: &Value, ctx: &OperatorContext) -> Result<Box<dyn Operator>> {
    let spec: CyclicShiftSpec = match value {
        Value::String(_) => CyclicShiftSpec { step: 1 },
        _ => parse("cyclic shift", value)?,
    };
    Ok(Box::new(CompositionOperator::cyclic_shift(
        ctx.require_space("cyclic_shift")?,
        spec.step,
    )?))
}

impl OperatorRegistry {
    /// `kernel`, `composition`, `counterexample`, `identity`, `cyclic_shift`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty("operator");
        r.register("kernel", kernel)
            .register("composition", composition)
            .register("counterexample", counterexample)
            .register("identity", identity)
            .register("cyclic_shift", cyclic_shift);
        r
    }
}

impl WeightRegistry {
    /// `constant`, `periodic`, `trig_poly`, `lambda_power`, `explicit`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty("weight");
        r.register("constant", |v, _| {
            let spec: ConstantWeightSpec = match v {
                Value::String(_) => ConstantWeightSpec { re: 1.0, im: 0.0 },
                _ => parse("constant weight", v)?,
            };
            Ok(Box::new(spec.build()))
        })
        .register("periodic", |v, _| {
            Ok(Box::new(parse::<PeriodicWeightSpec>("periodic weight", v)?.build()?))
        })
        .register("trig_poly", |v, _| {
            Ok(Box::new(TrigPoly(parse::<TrigPolySpec>("trig_poly weight", v)?.build()?)))
        })
        .register("lambda_power", |v, _| {
            Ok(Box::new(parse::<LambdaPowerSpec>("lambda_power weight", v)?.build()?))
        })
        .register("explicit", |v, _| {
            Ok(Box::new(parse::<ExplicitWeightSpec>("explicit weight", v)?.build()?))
        });
        r
    }
}

impl NormRegistry {
    /// The four rearrangement norms by name, plus `luxemburg` and `lorentz`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty("norm");
        r.register("L1", |_, _| Ok(Box::new(NormKind::L1)))
            .register("Linf", |_, _| Ok(Box::new(NormKind::Linf)))
            .register("L1plusLinf", |_, _| Ok(Box::new(NormKind::L1PlusLinf)))
            .register("L1capLinf", |_, _| Ok(Box::new(NormKind::L1CapLinf)))
            .register("luxemburg", |v, _| {
                Ok(Box::new(parse::<LuxemburgSpec>("luxemburg norm", v)?.build()?))
            })
            .register("lorentz", |v, _| {
                Ok(Box::new(parse::<LorentzSpec>("lorentz norm", v)?.build()?))
            });
        r
    }
}
