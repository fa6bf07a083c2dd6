//! Command-line surface and the command implementations.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use shield_core::victim::bits_to_hex;

use crate::config::{self, calibrate, DefenseMode, Resolved};
use crate::error::{Error, Result};
use crate::experiments::{self as exp, Bench};
use crate::io::{self, Manifest, Outputs, TraceHeader};
use crate::runner::Runner;

pub const TOOL: &str = "shield";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "shield", version, about = "Remote power side-channel simulator and SHIELD defense evaluator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate encryptions and export their monitor traces.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Trace count; defaults to `experiment.traces`.
        #[arg(long)]
        traces: Option<usize>,
    },
    /// Recover the key from averaged traces, simulated or exported.
    Attack {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory of exported `trace_*.csv` files to attack offline.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Sweep monitor placements, sampling frequencies and RO counts.
    Dse {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute one evaluation metric for the chosen defense variants.
    Evaluate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
        /// Comma-separated defense modes.
        #[arg(long, value_delimiter = ',', default_values = ["none", "random", "shield"])]
        variants: Vec<Variant>,
    },
    /// Calibrate the SHIELD thresholds and write the resolved config.
    Calibrate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rerun a command from its manifest and check every output hash.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Effort,
    Tvla,
    Corr,
    Overhead,
    Success,
    Reaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    None,
    Random,
    Shield,
}

impl From<Variant> for DefenseMode {
    fn from(v: Variant) -> Self {
        match v {
            Variant::None => DefenseMode::None,
            Variant::Random => DefenseMode::Random,
            Variant::Shield => DefenseMode::Shield,
        }
    }
}

/// A command with its options, stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase", deny_unknown_fields)]
pub enum Invocation {
    Simulate {
        traces: usize,
    },
    Attack {
        #[serde(skip_serializing_if = "Option::is_none")]
        traces_dir: Option<String>,
    },
    Dse,
    Evaluate {
        metric: Metric,
        variants: Vec<DefenseMode>,
    },
    Calibrate,
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Simulate { .. } => "simulate",
            Invocation::Attack { .. } => "attack",
            Invocation::Dse => "dse",
            Invocation::Evaluate { .. } => "evaluate",
            Invocation::Calibrate => "calibrate",
        }
    }
}

/// Parse, execute and write outputs plus manifest. Returns the manifest.
pub fn run(cli: Cli, runner: &Runner) -> Result<Manifest> {
    match cli.command {
        Command::Replay { manifest, out } => replay(&manifest, &out, runner),
        Command::Calibrate { config, out } => {
            let cfg = config::parse_file(&config)?;
            let mut probe = cfg.clone();
            probe.defense.auto_calibrate = true;
            let mut res = probe.resolve()?;
            res.config.defense.auto_calibrate = cfg.defense.auto_calibrate;
            finish(&res, Invocation::Calibrate, &out, runner)
        }
        Command::Simulate { config, out, traces } => {
            let res = config::resolve_file(&config)?;
            let n = traces.unwrap_or(res.experiment().traces);
            finish(&res, Invocation::Simulate { traces: n }, &out, runner)
        }
        Command::Attack { config, out, traces } => {
            let res = config::resolve_file(&config)?;
            let inv = Invocation::Attack {
                traces_dir: traces.map(|p| p.to_string_lossy().into_owned()),
            };
            finish(&res, inv, &out, runner)
        }
        Command::Dse { config, out } => {
            let res = config::resolve_file(&config)?;
            finish(&res, Invocation::Dse, &out, runner)
        }
        Command::Evaluate {
            config,
            out,
            metric,
            variants,
        } => {
            let res = config::resolve_file(&config)?;
            let mut modes: Vec<DefenseMode> = Vec::new();
            for v in variants {
                let m = DefenseMode::from(v);
                if !modes.contains(&m) {
                    modes.push(m);
                }
            }
            finish(&res, Invocation::Evaluate { metric, variants: modes }, &out, runner)
        }
    }
}

fn finish(res: &Resolved, inv: Invocation, out: &Path, runner: &Runner) -> Result<Manifest> {
    let outputs = execute(res, &inv, runner)?;
    outputs.write(out)?;
    let manifest = manifest_for(res, inv, &outputs);
    std::fs::write(out.join(io::MANIFEST), manifest.to_toml())?;
    Ok(manifest)
}

fn manifest_for(res: &Resolved, invocation: Invocation, outputs: &Outputs) -> Manifest {
    Manifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        seed: res.seed(),
        config_hash: res.hash(),
        key: res.key_hex(),
        replay: format!("{TOOL} replay {} --out <dir>", io::MANIFEST),
        invocation,
        outputs: outputs.listing(),
        config: res.config.clone(),
    }
}

fn replay(path: &Path, out: &Path, runner: &Runner) -> Result<Manifest> {
    let old = Manifest::read(path)?;
    let res = old.config.clone().resolve()?;
    if res.hash() != old.config_hash {
        return Err(Error::runtime(format!(
            "embedded config hashes to {} but the manifest records {}",
            res.hash(),
            old.config_hash
        )));
    }
    let manifest = finish(&res, old.invocation.clone(), out, runner)?;
    if manifest.outputs != old.outputs {
        let differing: Vec<&str> = manifest
            .outputs
            .iter()
            .zip(&old.outputs)
            .filter(|(a, b)| a != b)
            .map(|(a, _)| a.path.as_str())
            .collect();
        return Err(Error::runtime(format!("replay differs from the recorded run: {differing:?}")));
    }
    Ok(manifest)
}

/// Produce a command's output files in memory.
pub fn execute(res: &Resolved, inv: &Invocation, runner: &Runner) -> Result<Outputs> {
    match inv {
        Invocation::Simulate { traces } => simulate(res, *traces, runner),
        Invocation::Attack { traces_dir } => attack(res, traces_dir.as_deref(), runner),
        Invocation::Dse => dse(res, runner),
        Invocation::Evaluate { metric, variants } => evaluate(res, *metric, variants, runner),
        Invocation::Calibrate => {
            let c = calibrate(&res.config, &res.key)?;
            let mut cal = res.clone();
            cal.config.defense.theta0 = Some(c.theta0);
            cal.config.defense.delta = Some(c.delta);
            let mut o = Outputs::default();
            o.add("calibrated.toml", cal.to_toml().into_bytes());
            o.add(
                "calibration.csv",
                io::table(
                    &["theta0", "delta", "idle_mean", "mult_mean"],
                    &[vec![c.theta0.to_string(), c.delta.to_string(), c.idle_mean.to_string(), c.mult_mean.to_string()]],
                ),
            );
            Ok(o)
        }
    }
}

fn simulate(res: &Resolved, n: usize, runner: &Runner) -> Result<Outputs> {
    let mode = res.mode();
    let bench = Bench::new(res, mode)?;
    let outs = runner.map(n, |i| bench.run(exp::trace_seed(res, i)))?;
    let hash = res.hash();
    let mut o = Outputs::default();
    for (i, out) in outs.iter().enumerate() {
        let header = TraceHeader {
            scenario_id: mode.name().into(),
            seed: exp::trace_seed(res, i),
            config_hash: hash.clone(),
        };
        o.add(
            format!("traces/trace_{i:04}.csv"),
            io::trace_csv(&header, &out.samples, bench.engine.windows()),
        );
        if mode == DefenseMode::Shield {
            o.add(format!("events/events_{i:04}.csv"), io::events_csv(&out.events));
        }
    }
    Ok(o)
}

fn attack(res: &Resolved, traces_dir: Option<&str>, runner: &Runner) -> Result<Outputs> {
    let mode = res.mode();
    let (source, result) = match traces_dir {
        Some(dir) => {
            let traces: Vec<Vec<u64>> = io::read_trace_dir(Path::new(dir))?
                .into_iter()
                .map(|(_, s)| s)
                .collect();
            ("offline", exp::attack_traces(res, mode, &traces)?)
        }
        None => ("simulated", exp::attack_in_process(res, runner, mode)?),
    };
    let g = &result.guess;
    let mut o = Outputs::default();
    o.add(
        "attack.csv",
        io::table(
            &[
                "source",
                "variant",
                "traces_used",
                "bit_errors",
                "success",
                "tolerance",
                "threshold",
                "degenerate",
                "key_guess",
            ],
            &[vec![
                source.to_string(),
                mode.name().to_string(),
                result.traces_used.to_string(),
                result.bit_errors.to_string(),
                result.success.to_string(),
                res.config.attacker.tolerance.to_string(),
                g.threshold.value.to_string(),
                g.threshold.degenerate.to_string(),
                bits_to_hex(&g.bits),
            ]],
        ),
    );
    let rows: Vec<Vec<String>> = g
        .bits
        .iter()
        .zip(&res.key)
        .zip(&g.margins)
        .enumerate()
        .map(|(i, ((&b, &t), m))| vec![i.to_string(), (b as u8).to_string(), (t as u8).to_string(), m.to_string()])
        .collect();
    o.add("attack_bits.csv", io::table(&["bit", "guess", "truth", "margin"], &rows));
    Ok(o)
}

fn dse(res: &Resolved, runner: &Runner) -> Result<Outputs> {
    let report = exp::dse(res, runner)?;
    let rows: Vec<Vec<String>> = report
        .ranked
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.candidate.name(),
                r.candidate.placement.name().to_string(),
                r.candidate.f_ref.to_string(),
                r.candidate.m.to_string(),
                r.metrics.avg_bit_errors.to_string(),
                r.metrics.traces_to_extract.to_string(),
                r.metrics.ff_count.to_string(),
                r.metrics.avg_power.to_string(),
                r.cost.to_string(),
                report.degenerate.to_string(),
            ]
        })
        .collect();
    let mut o = Outputs::default();
    o.add(
        "dse.csv",
        io::table(
            &[
                "rank",
                "candidate",
                "placement",
                "f_ref_hz",
                "m",
                "avg_bit_errors",
                "traces_to_extract",
                "ff_count",
                "avg_power_w",
                "cost",
                "degenerate",
            ],
            &rows,
        ),
    );
    let plot: Vec<Vec<String>> = report
        .ranked
        .iter()
        .map(|r| vec![r.candidate.name(), r.metrics.avg_bit_errors.to_string(), r.cost.to_string()])
        .collect();
    o.add("dse_plot.csv", io::table(&["candidate", "avg_bit_errors", "cost"], &plot));
    Ok(o)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn evaluate(res: &Resolved, metric: Metric, variants: &[DefenseMode], runner: &Runner) -> Result<Outputs> {
    let mut o = Outputs::default();
    match metric {
        Metric::Effort => {
            let (mut rows, mut summary, mut plot) = (Vec::new(), Vec::new(), Vec::new());
            for &m in variants {
                let s = exp::effort(res, runner, m)?;
                for (t, tr) in s.trials.iter().enumerate() {
                    rows.push(vec![
                        m.name().to_string(),
                        t.to_string(),
                        tr.traces.unwrap_or(s.n_max).to_string(),
                        tr.traces.is_none().to_string(),
                        tr.final_errors.to_string(),
                    ]);
                }
                summary.push(vec![
                    m.name().to_string(),
                    s.trials.len().to_string(),
                    s.n_max.to_string(),
                    s.mean().to_string(),
                    s.failures().to_string(),
                    s.fraction_within(5).to_string(),
                ]);
                plot.push(vec![m.name().to_string(), s.mean().to_string()]);
            }
            o.add(
                "effort.csv",
                io::table(&["variant", "trial", "traces", "saturated", "final_errors"], &rows),
            );
            o.add(
                "effort_summary.csv",
                io::table(
                    &["variant", "trials", "n_max", "mean_traces", "saturated", "fraction_within_5"],
                    &summary,
                ),
            );
            o.add("effort_plot.csv", io::table(&["variant", "mean_traces"], &plot));
        }
        Metric::Tvla => {
            let (mut rows, mut summary, mut plot) = (Vec::new(), Vec::new(), Vec::new());
            for &m in variants {
                let reports = exp::tvla(res, runner, m)?;
                for (r, rep) in reports.iter().enumerate() {
                    rows.push(vec![
                        m.name().to_string(),
                        r.to_string(),
                        opt(rep.traces_to_cross),
                        rep.traces_to_cross.is_some().to_string(),
                        opt(rep.curve.last().map(|c| c.1)),
                        rep.threshold.to_string(),
                    ]);
                    for &(pairs, t) in &rep.curve {
                        plot.push(vec![m.name().to_string(), r.to_string(), pairs.to_string(), t.to_string()]);
                    }
                }
                let med = exp::median_crossing(&reports);
                summary.push(vec![
                    m.name().to_string(),
                    reports.len().to_string(),
                    opt(med),
                    med.is_some().to_string(),
                ]);
            }
            o.add(
                "tvla.csv",
                io::table(
                    &["variant", "run", "traces_to_cross", "crossed", "final_max_t", "threshold"],
                    &rows,
                ),
            );
            o.add(
                "tvla_summary.csv",
                io::table(&["variant", "runs", "median_traces_to_cross", "crossed"], &summary),
            );
            o.add("tvla_plot.csv", io::table(&["variant", "run", "pairs", "t_max"], &plot));
        }
        Metric::Corr => {
            let (mut rows, mut plot) = (Vec::new(), Vec::new());
            for &m in variants {
                let s = exp::similarity(res, runner, m)?;
                rows.push(vec![
                    m.name().to_string(),
                    res.experiment().corr_traces.to_string(),
                    opt(s.correlation.mean()),
                    s.slot_mean_variance.to_string(),
                    s.separability_gap.to_string(),
                ]);
                for (i, c) in s.correlation.coefficients.iter().enumerate() {
                    plot.push(vec![m.name().to_string(), i.to_string(), opt(*c)]);
                }
            }
            o.add(
                "corr.csv",
                io::table(&["variant", "traces", "mean_correlation", "slot_mean_variance", "separability_gap"], &rows),
            );
            o.add("corr_plot.csv", io::table(&["variant", "pair_index", "coefficient"], &plot));
        }
        Metric::Overhead => {
            let rep = exp::overhead(res)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        r.ff.to_string(),
                        r.power.to_string(),
                        r.ff_vs_unprotected.to_string(),
                        r.power_vs_unprotected.to_string(),
                        opt(r.ff_vs_random),
                        opt(r.power_vs_random),
                    ]
                })
                .collect();
            o.add(
                "overhead.csv",
                io::table(
                    &[
                        "variant",
                        "ff",
                        "power_w",
                        "ff_vs_unprotected",
                        "power_vs_unprotected",
                        "ff_vs_random",
                        "power_vs_random",
                    ],
                    &rows,
                ),
            );
            let plot: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| vec![r.name.clone(), r.ff.to_string(), r.power.to_string()])
                .collect();
            o.add("overhead_plot.csv", io::table(&["variant", "ff", "power_w"], &plot));
        }
        Metric::Success => {
            let att = &res.config.attacker;
            let (mut rows, mut plot) = (Vec::new(), Vec::new());
            for &m in variants {
                let rate = exp::success(res, runner, m)?;
                rows.push(vec![
                    m.name().to_string(),
                    res.experiment().trials.to_string(),
                    att.success_traces.to_string(),
                    att.success_order.to_string(),
                    rate.to_string(),
                ]);
                plot.push(vec![m.name().to_string(), rate.to_string()]);
            }
            o.add(
                "success.csv",
                io::table(&["variant", "trials", "traces", "order", "success_rate"], &rows),
            );
            o.add("success_plot.csv", io::table(&["variant", "success_rate"], &plot));
        }
        Metric::Reaction => {
            let table = exp::reaction(res, runner)?;
            let rows: Vec<Vec<String>> = table
                .iter()
                .map(|r| {
                    vec![
                        r.f_ref.to_string(),
                        r.runs.to_string(),
                        r.reactions.to_string(),
                        opt(r.mean),
                        opt(r.max),
                    ]
                })
                .collect();
            o.add(
                "reaction.csv",
                io::table(&["f_ref_hz", "runs", "reactions", "mean_samples", "max_samples"], &rows),
            );
            let plot: Vec<Vec<String>> = table
                .iter()
                .map(|r| vec![(r.f_ref / 1e6).to_string(), opt(r.mean)])
                .collect();
            o.add("reaction_plot.csv", io::table(&["f_ref_mhz", "mean_reaction"], &plot));
        }
    }
    Ok(o)
}
