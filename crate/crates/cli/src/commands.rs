//! Subcommands, registered by name. Each one reads an
//! [`ExperimentConfig`] (or its own flags), runs a core engine, and writes
//! its artifacts under the output directory.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use clap::{Arg, ArgMatches, Command};
use ergodic_core::averaging::{
    cesaro, oscillation, weighted, AveragingOptions, AveragingReport, Checkpoints, DEFAULT_BUDGET,
};
use ergodic_core::counterexample::{
    constant_rearrangement, construct_breakpoints, verify_certificate, window_function,
    CounterexampleParams,
};
use ergodic_core::measure_space::rearrangement;
use ergodic_core::operators::{build_counterexample_operator, DsReport};
use ergodic_core::registry::{NormRegistry, OperatorContext, OperatorRegistry, WeightRegistry};
use ergodic_core::return_times::{
    is_resonant, product_average, rotation_closed_form, wiener_wintner_sweep,
};
use ergodic_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, FunctionSpec, GeneratedFunction, SystemSpec};
use crate::error::{CliError, CliResult};
use crate::output::{json_bytes, num, Artifact, Artifacts, CsvOutput};
use crate::validate::Field;

pub const DEFAULT_LAMBDA_GRID: usize = 128;

/// Random-stream offsets so the two functions of a return-times run draw
/// from different streams of the same seed.
const FIRST_STREAM: u64 = 0;
const SECOND_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

pub struct RunContext<'a> {
    pub config: Option<&'a ExperimentConfig>,
    pub args: &'a ArgMatches,
    pub output_dir: &'a Path,
}

impl RunContext<'_> {
    fn config(&self) -> CliResult<&ExperimentConfig> {
        self.config
            .ok_or_else(|| CliError::Usage("this command needs --config".into()))
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub artifacts: Vec<Artifact>,
    pub message: String,
}

pub trait Subcommand: Send + Sync {
    fn name(&self) -> &'static str;

    fn about(&self) -> &'static str;

    /// Whether the command reads `--config`.
    fn uses_config(&self) -> bool {
        true
    }

    fn required_fields(&self) -> &'static [Field] {
        &[]
    }

    /// Adds command-specific flags.
    fn configure(&self, cmd: Command) -> Command {
        cmd
    }

    fn run(&self, ctx: &RunContext) -> CliResult<RunSummary>;
}

pub struct SubcommandRegistry {
    commands: BTreeMap<&'static str, Box<dyn Subcommand>>,
}

impl SubcommandRegistry {
    pub fn empty() -> Self {
        Self {
            commands: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Rearrange));
        r.register(Box::new(Norms));
        r.register(Box::new(DsCheck));
        r.register(Box::new(Average { weighted: false }));
        r.register(Box::new(Average { weighted: true }));
        r.register(Box::new(WienerWintner));
        r.register(Box::new(ReturnTimes));
        r.register(Box::new(Counterexample));
        r
    }

    pub fn register(&mut self, cmd: Box<dyn Subcommand>) -> &mut Self {
        self.commands.insert(cmd.name(), cmd);
        self
    }

    pub fn get(&self, name: &str) -> Option<&dyn Subcommand> {
        self.commands.get(name).map(|c| c.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.commands.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Subcommand> {
        self.commands.values().map(|c| c.as_ref())
    }
}

fn output_name<'a>(configured: &'a Option<String>, default: &'a str) -> &'a str {
    configured.as_deref().unwrap_or(default)
}

struct Rearrange;

impl Subcommand for Rearrange {
    fn name(&self) -> &'static str {
        "rearrange"
    }

    fn about(&self) -> &'static str {
        "Non-increasing rearrangement of the configured function as CSV plateaus"
    }

    fn required_fields(&self) -> &'static [Field] {
        &[Field::Space, Field::Function]
    }

    fn run(&self, ctx: &RunContext) -> CliResult<RunSummary> {
        let c = ctx.config()?;
        let space = c.build_space()?;
        let f = c.build_function(c.function.as_ref(), &space, FIRST_STREAM)?;
        let r = rearrangement(&f);
        let mut csv = CsvOutput::new(c.seed, self.name(), &["t_left", "t_right", "value"])?;
        for (a, b, v) in r.plateaus() {
            csv.row([num(a), num(b), num(v)])?;
        }
        let mut out = Artifacts::new(ctx.output_dir);
        out.add(output_name(&c.outputs.csv, "rearrangement.csv"), csv.into_bytes()?);
        Ok(RunSummary {
            artifacts: out.commit()?,
            message: format!(
                "{} plateaus, support measure {}",
                r.plateau_values().len(),
                r.support_measure()
            ),
        })
    }
}

struct Norms;

impl Subcommand for Norms {
    fn name(&self) -> &'static str {
        "norms"
    }

    fn about(&self) -> &'static str {
        "Rearrangement-invariant norms of the configured function"
    }

    fn required_fields(&self) -> &'static [Field] {
        &[Field::Space, Field::Function]
    }

    fn run(&self, ctx: &RunContext) -> CliResult<RunSummary> {
        let c = ctx.config()?;
        let space = c.build_space()?;
        let f = c.build_function(c.function.as_ref(), &space, FIRST_STREAM)?;
        let registry = NormRegistry::with_builtins();
        let descriptions: Vec<Value> = match &c.norms {
            Some(n) => n.clone(),
            None => ["L1", "Linf", "L1plusLinf", "L1capLinf"]
                .into_iter()
                .map(|s| json!(s))
                .collect(),
        };
        let mut csv = CsvOutput::new(c.seed, self.name(), &["norm", "value"])?;
        let mut lines = Vec::new();
        for d in &descriptions {
            let norm = registry.build(d, &())?;
            let value = norm.evaluate(&f)?;
            lines.push(format!("{} = {value}", norm.name()));
            csv.row([norm.name(), num(value)])?;
        }
        let mut out = Artifacts::new(ctx.output_dir);
        out.add(output_name(&c.outputs.csv, "norms.csv"), csv.into_bytes()?);
        Ok(RunSummary {
            artifacts: out.commit()?,
            message: lines.join("\n"),
        })
    }
}

struct DsCheck;

#[derive(Serialize)]
struct DsCheckBody<'a> {
    operator: String,
    atoms: usize,
    is_ds: bool,
    certificate: &'a DsReport,
}

impl Subcommand for DsCheck {
    fn name(&self) -> &'static str {
        "ds-check"
    }

    fn about(&self) -> &'static str {
        "L1 and L-infinity contraction certificates of the configured operator"
    }

    fn required_fields(&self) -> &'static [Field] {
        &[Field::Operator]
    }

    fn run(&self, ctx: &RunContext) -> CliResult<RunSummary> {
        let c = ctx.config()?;
        let desc = c
            .operator
            .as_ref()
            .ok_or_else(|| CliError::Usage("config has no \"operator\"".into()))?;
        let space = match &c.space {
            Some(_) => Some(c.build_space()?),
            None => None,
        };
        let op = OperatorRegistry::with_builtins().build(desc, &OperatorContext { space })?;
        let report = op.ds_certificate();
        let body = DsCheckBody {
            operator: op.kind().to_string(),
            atoms: op.space().len(),
            is_ds: report.is_ds(),
            certificate: &report,
        };
        let mut out = Artifacts::new(ctx.output_dir);
        out.add(
            output_name(&c.outputs.json, "ds_check.json"),
            json_bytes(c.seed, self.name(), body)?,
        );
        Ok(RunSummary {
            artifacts: out.commit()?,
            message: format!(
                "L1 certificate {} (worst column sum {}), L-infinity certificate {} (worst row sum {})",
                pass(report.l1_ok),
                report.worst_column_sum,
                pass(report.linf_ok),
                report.worst_row_sum
            ),
        })
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "passes"
    } else {
        "fails"
    }
}

const AVERAGE_COLUMNS: [&str; 7] = ["n", "probe_id", "re", "im", "l1_norm", "linf_norm", "majorized"];

fn average_csv(seed: u64, command: &str, report: &AveragingReport) -> CliResult<Vec<u8>> {
    let mut csv = CsvOutput::new(seed, command, &AVERAGE_COLUMNS)?;
    for rec in &report.records {
        let majorized = rec.majorized.map_or(String::new(), |b| b.to_string());
        for (&probe, v) in report.probes.iter().zip(&rec.probe_values) {
            csv.row([
                rec.n.to_string(),
                probe.to_string(),
                num(v.re),
                num(v.im),
                num(rec.l1_norm),
                num(rec.linf_norm),
                majorized.clone(),
            ])?;
        }
    }
    csv.into_bytes()
}

#[derive(Serialize)]
struct ProbeOscillation {
    probe: usize,
    oscillation: f64,
}

#[derive(Serialize)]
struct AverageBody {
    operator: String,
    checkpoints: Vec<u64>,
    full: bool,
    weight: Option<String>,
    weight_normalizer: Option<f64>,
    all_majorized: Option<bool>,
    oscillations: Vec<ProbeOscillation>,
}

struct Average {
    weighted: bool,
}

impl Subcommand for Average {
    fn name(&self) -> &'static str {
        if self.weighted {
            "weighted-average"
        } else {
            "average"
        }
    }

    fn about(&self) -> &'static str {
        if self.weighted {
            "Weighted averages (1/n) sum b_k T^k f at the configured checkpoints"
        } else {
            "Cesaro averages (1/n) sum T^k f at the configured checkpoints"
        }
    }

    fn required_fields(&self) -> &'static [Field] {
        if self.weighted {
            &[Field::Space, Field::Function, Field::Operator, Field::Weight]
        } else {
            &[Field::Space, Field::Function, Field::Operator]
        }
    }

    fn run(&self, ctx: &RunContext) -> CliResult<RunSummary> {
        let c = ctx.config()?;
        let space = c.build_space()?;
        let f = c.build_function(c.function.as_ref(), &space, FIRST_STREAM)?;
        let desc = c
            .operator
            .as_ref()
            .ok_or_else(|| CliError::Usage("config has no \"operator\"".into()))?;
        let op = OperatorRegistry::with_builtins()
            .build(desc, &OperatorContext::new(Arc::clone(&space)))?;
        let cps = c.checkpoints()?;
        let probes = c.probes_or_default();
        let mut opts = if c.full {
            AveragingOptions::full().with_majorization().with_probes(probes.clone())
        } else {
            AveragingOptions::probes_only(probes.clone())
        };
        opts = opts.with_budget(c.budget.unwrap_or(DEFAULT_BUDGET));

        let (report, weight_kind) = if self.weighted {
            let wdesc = c
                .weight
                .as_ref()
                .ok_or_else(|| CliError::Usage("config has no \"weight\"".into()))?;
            let beta = WeightRegistry::with_builtins().build(wdesc, &())?;
            (weighted(op.as_ref(), &f, beta.as_ref(), &cps, &opts)?, Some(beta.kind().to_string()))
        } else {
            (cesaro(op.as_ref(), &f, &cps, &opts)?, None)
        };

        let oscillations = probes
            .iter()
            .map(|&p| {
                Ok(ProbeOscillation {
                    probe: p,
                    oscillation: oscillation(&report, p, 1..=cps.max())?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let all_majorized = c
            .full
            .then(|| report.records.iter().all(|r| r.majorized == Some(true)));
        let body = AverageBody {
            operator: op.kind().to_string(),
            checkpoints: cps.as_slice().to_vec(),
            full: c.full,
            weight: weight_kind,
            weight_normalizer: report.weight_normalizer,
            all_majorized,
            oscillations,
        };
        let stem = self.name().replace('-', "_");
        let mut out = Artifacts::new(ctx.output_dir);
        out.add(
            output_name(&c.outputs.csv, &format!("{stem}.csv")),
            average_csv(c.seed, self.name(), &report)?,
        );
        out.add(
            output_name(&c.outputs.json, &format!("{stem}.json")),
            json_bytes(c.seed, self.name(), &body)?,
        );
        let message = format!(
            "{} checkpoints up to n = {}, {} probe(s){}",
            cps.len(),
            cps.max(),
            probes.len(),
            match all_majorized {
                Some(true) => ", every average majorized by f",
                Some(false) => ", majorization fails at some checkpoint",
                None => "",
            }
        );
        Ok(RunSummary {
            artifacts: out.commit()?,
            message,
        })
    }
}

struct WienerWintner;

#[derive(Serialize)]
struct SweepBody {
    lambda_grid: usize,
    probes: Vec<usize>,
    checkpoints: Vec<u64>,
    closed_form: bool,
    resonant_lambdas: Vec<usize>,
    max_abs_err: Option<f64>,
    /// `[lambda_index][probe]`.
    oscillations: Vec<Vec<f64>>,
}

impl Subcommand for WienerWintner {
    fn name(&self) -> &'static str {
        "wiener-wintner"
    }

    fn about(&self) -> &'static str {
        "Sweep (1/n) sum l^k f(t^k w) over a uniform grid of l on the unit circle"
    }

    fn required_fields(&self) -> &'static [Field] {
        &[Field::System, Field::Function]
    }

    fn run(&self, ctx: &RunContext) -> CliResult<RunSummary> {
        let c = ctx.config()?;
        let sys = c.build_system(c.system.as_ref(), "system")?;
        let f = c.build_function(c.function.as_ref(), sys.space(), FIRST_STREAM)?;
        let probes = c.probes_or_default();
        let cps = c.checkpoints()?;
        let grid = c.lambda_grid.unwrap_or(DEFAULT_LAMBDA_GRID);
        let sweep = wiener_wintner_sweep(
            &sys,
            &f,
            &probes,
            grid,
            &cps,
            c.budget.unwrap_or(DEFAULT_BUDGET),
        )?;

        // rotation by step/order against a character: closed form available
        let closed = match (&c.system, &c.function) {
            (
                Some(SystemSpec::Rotation { order, step }),
                Some(FunctionSpec::Generated(GeneratedFunction::Character { freq })),
            ) => Some((*order as u64, *freq, freq * *step as i64)),
            _ => None,
        };

        let mut columns = vec!["lambda_index", "lambda_re", "lambda_im", "probe", "n", "avg_re", "avg_im"];
        if closed.is_some() {
            columns.extend(["oracle_re", "oracle_im", "abs_err"]);
        }
        let mut csv = CsvOutput::new(c.seed, self.name(), &columns)?;
        let mut max_err: f64 = 0.0;
        let mut resonant = Vec::new();
        for (li, &lambda) in sweep.lambdas.iter().enumerate() {
            if let Some((order, _, rot)) = closed {
                if is_resonant(rot, order, lambda) {
                    resonant.push(li);
                }
            }
            for (pi, &omega) in probes.iter().enumerate() {
                for (ci, &n) in cps.as_slice().iter().enumerate() {
                    let v = sweep.averages[li][pi][ci];
                    let mut row = vec![
                        li.to_string(),
                        num(lambda.re),
                        num(lambda.im),
                        omega.to_string(),
                        n.to_string(),
                        num(v.re),
                        num(v.im),
                    ];
                    if let Some((order, freq, rot)) = closed {
                        let phase =
                            (freq * omega as i64).rem_euclid(order as i64) as f64 / order as f64;
                        let o = rotation_closed_form(rot, order, lambda, phase, n)?;
                        let err = (v - o).norm();
                        max_err = max_err.max(err);
                        row.extend([num(o.re), num(o.im), num(err)]);
                    }
                    csv.row(row)?;
                }
            }
        }
        let body = SweepBody {
            lambda_grid: grid,
            probes: probes.clone(),
            checkpoints: cps.as_slice().to_vec(),
            closed_form: closed.is_some(),
            resonant_lambdas: resonant,
            max_abs_err: closed.map(|_| max_err),
            oscillations: sweep.oscillations.clone(),
        };
        let mut out = Artifacts::new(ctx.output_dir);
        out.add(output_name(&c.outputs.csv, "sweep.csv"), csv.into_bytes()?);
        out.add(
            output_name(&c.outputs.json, "sweep.json"),
            json_bytes(c.seed, self.name(), &body)?,
        );
        let message = match closed {
            Some(_) => format!("{grid} lambdas x {} probes, max closed-form error {max_err}", probes.len()),
            None => format!("{grid} lambdas x {} probes", probes.len()),
        };
        Ok(RunSummary {
            artifacts: out.commit()?,
            message,
        })
    }
}

struct ReturnTimes;

impl Subcommand for ReturnTimes {
    fn name(&self) -> &'static str {
        "return-times"
    }

    fn about(&self) -> &'static str {
        "Product averages (1/n) sum f(t^k w) g(s^k y) over two point systems"
    }

    fn required_fields(&self) -> &'static [Field] {
        &[
            Field::System,
            Field::Function,
            Field::SecondSystem,
            Field::SecondFunction,
            Field::ProbePairs,
        ]
    }

    fn run(&self, ctx: &RunContext) -> CliResult<RunSummary> {
        let c = ctx.config()?;
        let s1 = c.build_system(c.system.as_ref(), "system")?;
        let s2 = c.build_system(c.second_system.as_ref(), "second_system")?;
        let f = c.build_function(c.function.as_ref(), s1.space(), FIRST_STREAM)?;
        let g = c.build_function(c.second_function.as_ref(), s2.space(), SECOND_STREAM)?;
        let cps = c.checkpoints()?;
        let budget = c.budget.unwrap_or(DEFAULT_BUDGET);
        if cps.max() > budget {
            return Err(Error::Budget(format!(
                "{} orbit steps requested, budget is {budget}",
                cps.max()
            ))
            .into());
        }
        let rep = product_average(&s1, &f, &s2, &g, &c.probe_pairs, &cps)?;
        let mut csv = CsvOutput::new(c.seed, self.name(), &["probe_id", "omega", "y", "n", "re", "im"])?;
        for (pi, &(w, y)) in rep.probes.iter().enumerate() {
            for (ci, &n) in cps.as_slice().iter().enumerate() {
                let v = rep.values[pi][ci];
                csv.row([
                    pi.to_string(),
                    w.to_string(),
                    y.to_string(),
                    n.to_string(),
                    num(v.re),
                    num(v.im),
                ])?;
            }
        }
        let mut out = Artifacts::new(ctx.output_dir);
        out.add(output_name(&c.outputs.csv, "return_times.csv"), csv.into_bytes()?);
        Ok(RunSummary {
            artifacts: out.commit()?,
            message: format!("{} probe pair(s), {} checkpoints", rep.probes.len(), cps.len()),
        })
    }
}

struct Counterexample;

#[derive(Serialize)]
struct CounterexampleBody<'a> {
    certificate: &'a ergodic_core::counterexample::CounterexampleCertificate,
    verified: bool,
    worst_clearance: f64,
    pipeline_discrepancy: f64,
}

fn flag<T: Clone + Send + Sync + 'static>(args: &ArgMatches, name: &str) -> T {
    args.get_one::<T>(name).cloned().expect("flag has a default")
}

impl Subcommand for Counterexample {
    fn name(&self) -> &'static str {
        "counterexample"
    }

    fn about(&self) -> &'static str {
        "Build and verify a divergence certificate for f = 1 under a sign-flipping shift"
    }

    fn uses_config(&self) -> bool {
        false
    }

    fn configure(&self, cmd: Command) -> Command {
        cmd.arg(
            Arg::new("eps")
                .long("eps")
                .value_parser(clap::value_parser!(f64))
                .default_value("0.1")
                .help("Grid points t are taken in (eps, 1)"),
        )
        .arg(
            Arg::new("stages")
                .long("stages")
                .value_name("J")
                .value_parser(clap::value_parser!(usize))
                .default_value("3")
                .help("Number of breakpoints"),
        )
        .arg(
            Arg::new("margin")
                .long("margin")
                .value_parser(clap::value_parser!(f64))
                .default_value("0")
                .help("Extra clearance required at every stage"),
        )
        .arg(
            Arg::new("grid")
                .long("grid")
                .value_parser(clap::value_parser!(usize))
                .default_value("1")
                .help("Atoms per unit interval"),
        )
        .arg(
            Arg::new("window")
                .long("window")
                .value_parser(clap::value_parser!(usize))
                .default_value("4096")
                .help("Truncation window; breakpoints must not exceed it"),
        )
        .arg(
            Arg::new("budget")
                .long("budget")
                .value_parser(clap::value_parser!(u64))
                .help("Cap on candidate n examined by the greedy search"),
        )
    }

    fn run(&self, ctx: &RunContext) -> CliResult<RunSummary> {
        let a = ctx.args;
        let params = CounterexampleParams {
            eps: flag(a, "eps"),
            stages: flag(a, "stages"),
            margin: flag(a, "margin"),
            grid: flag(a, "grid"),
            window: flag(a, "window"),
            budget: a.get_one::<u64>("budget").copied(),
        };
        let rearr = constant_rearrangement(1.0, params.window)?;
        let cert = construct_breakpoints(&rearr, &params)?;
        let v = verify_certificate(&cert, &rearr)?;
        if !v.verified {
            return Err(Error::Consistency(format!(
                "constructed certificate fails verification at stage {:?}",
                v.failed_stage
            ))
            .into());
        }

        let last = *cert.breakpoints.last().expect("at least two stages");
        let op = build_counterexample_operator(&cert.breakpoints, cert.grid, cert.window)?;
        let f = window_function(&rearr, &op, cert.grid)?;
        let trace = cesaro(
            &op,
            &f,
            &Checkpoints::every(last)?,
            &AveragingOptions::probes_only(v.report.probes.clone()),
        )?;

        let seed = 0;
        let body = CounterexampleBody {
            certificate: &cert,
            verified: v.verified,
            worst_clearance: v.worst_clearance,
            pipeline_discrepancy: v.pipeline_discrepancy,
        };
        let mut out = Artifacts::new(ctx.output_dir);
        out.add("certificate.json", json_bytes(seed, self.name(), &body)?);
        out.add("counterexample_traces.csv", average_csv(seed, self.name(), &trace)?);
        let list: Vec<String> = cert.breakpoints.iter().map(u64::to_string).collect();
        Ok(RunSummary {
            artifacts: out.commit()?,
            message: format!(
                "breakpoints ({}) verified at {} grid point(s)",
                list.join(", "),
                v.report.probes.len()
            ),
        })
    }
}
