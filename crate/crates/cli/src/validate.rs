//! Static checks on an [`ExperimentConfig`] before anything runs.

use std::fmt;
use std::sync::Arc;

use ergodic_core::measure_space::AtomicMeasureSpace;
use ergodic_core::operators::check_measure_preserving;
use ergodic_core::registry::{NormRegistry, OperatorContext, OperatorRegistry, WeightRegistry};
use ergodic_core::weights::validate_bound;
use serde::Serialize;
use serde_json::Value;

use crate::commands::SubcommandRegistry;
use crate::config::{CheckpointSpec, ExperimentConfig, FunctionSpec, GeneratedFunction, SystemSpec, SCHEMA_VERSION};

/// Weight bounds are scanned up to this many terms at most.
const BOUND_SCAN_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Config fields a subcommand reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Space,
    Function,
    Operator,
    Weight,
    System,
    SecondSystem,
    SecondFunction,
    ProbePairs,
}

impl Field {
    fn name(self) -> &'static str {
        match self {
            Field::Space => "space",
            Field::Function => "function",
            Field::Operator => "operator",
            Field::Weight => "weight",
            Field::System => "system",
            Field::SecondSystem => "second_system",
            Field::SecondFunction => "second_function",
            Field::ProbePairs => "probe_pairs",
        }
    }

    fn present(self, c: &ExperimentConfig) -> bool {
        match self {
            Field::Space => c.space.is_some(),
            Field::Function => c.function.is_some(),
            Field::Operator => c.operator.is_some(),
            Field::Weight => c.weight.is_some(),
            Field::System => c.system.is_some(),
            Field::SecondSystem => c.second_system.is_some(),
            Field::SecondFunction => c.second_function.is_some(),
            Field::ProbePairs => !c.probe_pairs.is_empty(),
        }
    }
}

struct Diagnostics(Vec<Diagnostic>);

impl Diagnostics {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(Diagnostic {
            field: field.to_string(),
            message: message.into(),
        });
    }
}

/// Validates against the subcommand named in the config, if any.
pub fn validate(config: &ExperimentConfig) -> Vec<Diagnostic> {
    validate_for(config, config.command.as_deref())
}

/// Dimension consistency, weight bounds and checkpoint monotonicity. An
/// empty list means the config is valid for `command`.
pub fn validate_for(config: &ExperimentConfig, command: Option<&str>) -> Vec<Diagnostic> {
    let mut d = Diagnostics(Vec::new());
    if config.schema != SCHEMA_VERSION {
        d.push(
            "schema",
            format!("unsupported schema {}, expected {SCHEMA_VERSION}", config.schema),
        );
    }
    if let (Some(declared), Some(requested)) = (config.command.as_deref(), command) {
        if declared != requested {
            d.push(
                "command",
                format!("config is for {declared:?} but {requested:?} was requested"),
            );
        }
    }
    if let Some(name) = command {
        let registry = SubcommandRegistry::with_builtins();
        match registry.get(name) {
            None => d.push(
                "command",
                format!(
                    "unknown command {name:?}; known: {}",
                    registry.names().collect::<Vec<_>>().join(", ")
                ),
            ),
            Some(cmd) => {
                for field in cmd.required_fields() {
                    if !field.present(config) {
                        d.push(field.name(), format!("required by {name}"));
                    }
                }
            }
        }
    }

    let space = config.space.as_ref().and_then(|s| match s.build() {
        Ok(sp) => Some(Arc::new(sp)),
        Err(e) => {
            d.push("space", e.to_string());
            None
        }
    });
    let space_atoms = config.space.as_ref().map(|s| s.atoms());

    let system_atoms = check_system(&mut d, "system", config.system.as_ref(), space.as_ref());
    check_system(&mut d, "second_system", config.second_system.as_ref(), space.as_ref());
    let second_atoms = match &config.second_system {
        Some(SystemSpec::Rotation { order, .. }) => Some(*order),
        Some(SystemSpec::Map { map }) => Some(map.len()),
        None => None,
    };

    // functions live on the first system's space when one is configured
    let function_atoms = system_atoms.or(space_atoms);
    if let Some(f) = &config.function {
        check_function(&mut d, "function", f, function_atoms);
    }
    if let Some(g) = &config.second_function {
        check_function(&mut d, "second_function", g, second_atoms);
    }

    if let Some(op) = &config.operator {
        check_operator(&mut d, op, space_atoms, space.as_ref());
    }

    let checkpoints_ok = check_checkpoints(&mut d, config.checkpoints.as_ref());

    if let Some(w) = &config.weight {
        check_weight(&mut d, w, config, checkpoints_ok);
    }

    if let Some(norms) = &config.norms {
        let reg = NormRegistry::with_builtins();
        for (i, n) in norms.iter().enumerate() {
            if let Err(e) = reg.build(n, &()) {
                d.push(&format!("norms[{i}]"), e.to_string());
            }
        }
    }

    if let Some(atoms) = function_atoms {
        if let Some(&p) = config.probes.iter().find(|&&p| p >= atoms) {
            d.push("probes", format!("probe atom {p} outside a {atoms}-atom space"));
        }
    }
    if let (Some(a), Some(b)) = (system_atoms, second_atoms) {
        if let Some(&(w, y)) = config.probe_pairs.iter().find(|&&(w, y)| w >= a || y >= b) {
            d.push("probe_pairs", format!("probe pair ({w}, {y}) outside the systems"));
        }
    }
    if config.lambda_grid == Some(0) {
        d.push("lambda_grid", "needs at least one point");
    }
    d.0
}

fn check_system(
    d: &mut Diagnostics,
    field: &str,
    spec: Option<&SystemSpec>,
    space: Option<&Arc<AtomicMeasureSpace>>,
) -> Option<usize> {
    match spec? {
        SystemSpec::Rotation { order, .. } => {
            if *order == 0 {
                d.push(field, "rotation order must be positive");
            }
            Some(*order)
        }
        SystemSpec::Map { map } => {
            match space {
                None => d.push(field, "a map system needs \"space\""),
                Some(sp) if sp.len() != map.len() => d.push(
                    field,
                    format!("map has {} entries but space has {} atoms", map.len(), sp.len()),
                ),
                Some(sp) => {
                    if let Err(e) = check_measure_preserving(sp, map) {
                        d.push(field, e.to_string());
                    }
                }
            }
            Some(map.len())
        }
    }
}

fn check_function(d: &mut Diagnostics, field: &str, f: &FunctionSpec, atoms: Option<usize>) {
    match f {
        FunctionSpec::Values(v) => {
            if let Some(im) = &v.im {
                if im.len() != v.re.len() {
                    d.push(field, format!("re has {} entries, im has {}", v.re.len(), im.len()));
                    return;
                }
            }
            if let Some(n) = atoms {
                if v.re.len() != n {
                    d.push(field, format!("{} values for a {n}-atom space", v.re.len()));
                }
            }
        }
        FunctionSpec::Generated(GeneratedFunction::Indicator { atoms: set }) => {
            if let (Some(n), Some(&a)) = (atoms, set.iter().find(|&&a| Some(a) >= atoms)) {
                d.push(field, format!("indicator atom {a} outside a {n}-atom space"));
            }
        }
        FunctionSpec::Generated(GeneratedFunction::Random { scale, .. }) => {
            if !(scale.is_finite() && *scale >= 0.0) {
                d.push(field, format!("scale must be finite and ≥ 0, got {scale}"));
            }
        }
        FunctionSpec::Generated(_) => {}
    }
}

/// Atom count an operator description implies, if any.
fn operator_atoms(op: &Value) -> Option<(String, usize)> {
    let kind = op.get("kind")?.as_str()?;
    let n = match kind {
        "kernel" => {
            let rows = op.get("matrix_re")?.as_array()?;
            let cols = rows
                .iter()
                .map(|r| r.as_array().map_or(0, Vec::len))
                .max()
                .unwrap_or(0);
            if rows.iter().any(|r| r.as_array().map_or(0, Vec::len) != rows.len()) {
                return Some((
                    format!("kernel is {}x{} (not square)", rows.len(), cols),
                    usize::MAX,
                ));
            }
            return Some((format!("kernel is {0}x{0}", rows.len()), rows.len()));
        }
        "composition" => op.get("map")?.as_array()?.len(),
        "counterexample" => {
            let grid = op.get("grid")?.as_u64()? as usize;
            let window = op.get("window")?.as_u64()? as usize;
            grid.checked_mul(window)?
        }
        _ => return None,
    };
    Some((format!("{kind} operator acts on {n} atoms"), n))
}

fn check_operator(
    d: &mut Diagnostics,
    op: &Value,
    atoms: Option<usize>,
    space: Option<&Arc<AtomicMeasureSpace>>,
) {
    let reg = OperatorRegistry::with_builtins();
    let kind = match reg.kind_of(op) {
        Ok(k) => k,
        Err(e) => return d.push("operator", e.to_string()),
    };
    if !reg.contains(&kind) {
        return d.push(
            "operator",
            format!(
                "unknown operator kind {kind:?}; known: {}",
                reg.names().collect::<Vec<_>>().join(", ")
            ),
        );
    }
    if let Some((shape, n)) = operator_atoms(op) {
        if n == usize::MAX {
            return d.push("operator", shape);
        }
        if let Some(m) = atoms {
            if n != m {
                return d.push("operator", format!("{shape} but space has {m} atoms"));
            }
        }
    }
    let ctx = OperatorContext {
        space: space.cloned(),
    };
    if space.is_none() && kind != "counterexample" {
        return;
    }
    if let Err(e) = reg.build(op, &ctx) {
        d.push("operator", e.to_string());
    }
}

fn check_checkpoints(d: &mut Diagnostics, spec: Option<&CheckpointSpec>) -> bool {
    match spec {
        Some(CheckpointSpec::List(ns)) => {
            if ns.is_empty() {
                d.push("checkpoints", "at least one checkpoint is required");
                return false;
            }
            if ns[0] == 0 {
                d.push("checkpoints", "checkpoints start at n = 1");
                return false;
            }
            if let Some(w) = ns.windows(2).find(|w| w[1] <= w[0]) {
                d.push(
                    "checkpoints",
                    format!("must be strictly increasing ({} then {})", w[0], w[1]),
                );
                return false;
            }
            true
        }
        Some(CheckpointSpec::Geometric { geometric: 0 }) | Some(CheckpointSpec::Every { every: 0 }) => {
            d.push("checkpoints", "maximum checkpoint must be ≥ 1");
            false
        }
        _ => true,
    }
}

fn check_weight(d: &mut Diagnostics, w: &Value, config: &ExperimentConfig, checkpoints_ok: bool) {
    let beta = match WeightRegistry::with_builtins().build(w, &()) {
        Ok(b) => b,
        Err(e) => return d.push("weight", e.to_string()),
    };
    if !checkpoints_ok {
        return;
    }
    let Ok(cps) = config.checkpoints() else { return };
    let n = cps.max().min(BOUND_SCAN_LIMIT);
    match validate_bound(beta.as_ref(), n) {
        Ok(check) if !check.ok => {
            if let Some((k, m)) = check.violation {
                d.push(
                    "weight",
                    format!("|β_{k}| = {m} exceeds the declared bound {}", beta.bound()),
                );
            }
        }
        Ok(_) => {}
        Err(e) => d.push("weight", e.to_string()),
    }
}
