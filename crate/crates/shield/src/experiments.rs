//! Experiment drivers shared by the command line and the test suites.

use shield_core::attacker::{
    classify, effort_trial, extract_key, slot_means, AttackResult, EffortSummary, SlotTiming, TraceAccumulator,
};
use shield_core::defense::{pooled_reaction_time, Reaction};
use shield_core::dse::{evaluate_candidate, explore, rank, CandidateMetrics, DseReport, Mode};
use shield_core::eval::{
    consecutive_correlation, overhead_report, ranked_within, tvla_traces_to_leak, Component, CorrelationReport,
    OverheadReport, TvlaReport, Variant,
};
use shield_core::seed::{derive, derive_path, stream_rng};
use shield_core::sim::{Engine, RunOutput};
use shield_core::victim::random_bits;

use crate::config::{calibrate, streams, DefenseMode, Resolved};
use crate::error::{Error, Result};
use crate::runner::Runner;

/// Engine plus the slot timing an attacker who knows the schedule would use.
pub struct Bench<'a> {
    pub res: &'a Resolved,
    pub mode: DefenseMode,
    pub engine: Engine,
}

impl<'a> Bench<'a> {
    pub fn new(res: &'a Resolved, mode: DefenseMode) -> Result<Self> {
        let engine = Engine::new(res.scenario(mode)?)?;
        Ok(Self { res, mode, engine })
    }

    pub fn run(&self, seed: u64) -> Result<RunOutput> {
        Ok(self.engine.run(&self.res.key, seed)?)
    }

    pub fn timing(&self, n_samples: usize) -> SlotTiming {
        SlotTiming::from_schedule(&self.engine.schedule(&self.res.key), self.engine.windows(), n_samples)
    }

    fn sample_count(&self) -> Result<usize> {
        let ticks = self.engine.schedule(&self.res.key).total_ticks();
        Ok(self.engine.windows().count_for(ticks) as usize)
    }
}

/// Seed of trace `i` written by `simulate`.
pub fn trace_seed(res: &Resolved, i: usize) -> u64 {
    derive_path(res.seed(), &[streams::SIMULATE, i as u64])
}

pub fn simulate(res: &Resolved, runner: &Runner, mode: DefenseMode, n: usize) -> Result<Vec<RunOutput>> {
    let bench = Bench::new(res, mode)?;
    runner.map(n, |i| bench.run(trace_seed(res, i)))
}

/// Averaged-trace key extraction over already simulated traces.
pub fn attack_traces<T: AsRef<[u64]>>(res: &Resolved, mode: DefenseMode, traces: &[T]) -> Result<AttackResult> {
    let first = traces.first().ok_or_else(|| Error::runtime("no traces to attack"))?;
    let bench = Bench::new(res, mode)?;
    let expected = bench.sample_count()?;
    if first.as_ref().len() != expected {
        return Err(Error::runtime(format!(
            "traces hold {} samples but the configured scenario produces {expected}",
            first.as_ref().len()
        )));
    }
    let timing = bench.timing(expected);
    let guess = extract_key(traces, &timing)?;
    Ok(AttackResult::score(guess, &res.key, traces.len(), res.config.attacker.tolerance))
}

/// Attack on the first `attacker.traces` traces of the `simulate` stream.
pub fn attack_in_process(res: &Resolved, runner: &Runner, mode: DefenseMode) -> Result<AttackResult> {
    let outs = simulate(res, runner, mode, res.config.attacker.traces)?;
    let traces: Vec<Vec<u64>> = outs.into_iter().map(|o| o.samples).collect();
    attack_traces(res, mode, &traces)
}

pub fn effort(res: &Resolved, runner: &Runner, mode: DefenseMode) -> Result<EffortSummary> {
    let exp = res.experiment();
    let bench = Bench::new(res, mode)?;
    let timing = bench.timing(bench.sample_count()?);
    let tol = res.config.attacker.tolerance;
    let trials = runner.map(exp.trials, |t| {
        Ok(effort_trial(&res.key, &timing, exp.n_max, tol, |i| {
            Ok(bench
                .engine
                .run(&res.key, derive_path(res.seed(), &[streams::EFFORT, t as u64, i as u64]))?
                .samples)
        })?)
    })?;
    Ok(EffortSummary {
        trials,
        n_max: exp.n_max,
    })
}

/// Key-based fixed-vs-random TVLA, one report per run. Points are the
/// per-bit slot means, so both groups align bit by bit.
pub fn tvla(res: &Resolved, runner: &Runner, mode: DefenseMode) -> Result<Vec<TvlaReport>> {
    let exp = res.experiment();
    let bench = Bench::new(res, mode)?;
    let n_bits = res.key.len();
    let points = |bits: &[bool], o: &RunOutput| -> shield_core::Result<Vec<f64>> {
        let timing = SlotTiming::from_schedule(&bench.engine.schedule(bits), bench.engine.windows(), o.samples.len());
        let f: Vec<f64> = o.samples.iter().map(|&x| x as f64).collect();
        slot_means(&f, &timing)
    };
    runner.map(exp.tvla_runs, |r| {
        let report = tvla_traces_to_leak(n_bits, exp.tvla_max_pairs, |i| {
            let path = |leaf: u64| derive_path(res.seed(), &[streams::TVLA, r as u64, i as u64, leaf]);
            let fixed = bench.engine.run(&res.key, path(0))?;
            let other = random_bits(n_bits, &mut stream_rng(path(2), 0));
            let random = bench.engine.run(&other, path(1))?;
            Ok((points(&res.key, &fixed)?, points(&other, &random)?))
        })?;
        Ok(report)
    })
}

/// Median traces-to-cross over runs; runs that never crossed sort last and
/// a median landing on one yields `None`.
pub fn median_crossing(reports: &[TvlaReport]) -> Option<usize> {
    if reports.is_empty() {
        return None;
    }
    let mut v: Vec<Option<usize>> = reports.iter().map(|r| r.traces_to_cross).collect();
    v.sort_by_key(|c| c.unwrap_or(usize::MAX));
    v[(v.len() - 1) / 2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub correlation: CorrelationReport,
    /// Population variance of the per-bit slot means of the averaged trace.
    pub slot_mean_variance: f64,
    /// Mean 0-bit slot minus mean 1-bit slot of the averaged trace.
    pub separability_gap: f64,
}

pub fn similarity(res: &Resolved, runner: &Runner, mode: DefenseMode) -> Result<Similarity> {
    let exp = res.experiment();
    let bench = Bench::new(res, mode)?;
    let outs = runner.map(exp.corr_traces, |i| {
        bench.run(derive_path(res.seed(), &[streams::CORRELATION, i as u64]))
    })?;
    let mut acc = TraceAccumulator::new();
    for o in &outs {
        acc.add(&o.samples)?;
    }
    let traces: Vec<Vec<f64>> = outs
        .iter()
        .map(|o| o.samples.iter().map(|&x| x as f64).collect())
        .collect();
    let correlation = consecutive_correlation(&traces)?;
    let means = slot_means(&acc.mean(), &bench.timing(traces[0].len()))?;
    let mu = means.iter().sum::<f64>() / means.len() as f64;
    let slot_mean_variance = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / means.len() as f64;
    let class_mean = |bit: bool| {
        let v: Vec<f64> = means.iter().zip(&res.key).filter(|(_, &b)| b == bit).map(|(m, _)| *m).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    Ok(Similarity {
        correlation,
        slot_mean_variance,
        separability_gap: class_mean(false) - class_mean(true),
    })
}

/// FF and power overhead of each defense on one standard run.
pub fn overhead(res: &Resolved) -> Result<OverheadReport> {
    let cfg = &res.config;
    let seed = derive(res.seed(), streams::OVERHEAD);
    let none = Bench::new(res, DefenseMode::None)?;
    let schedule = none.engine.schedule(&res.key);
    let victim_energy: f64 = schedule
        .segments()
        .iter()
        .map(|s| s.power * s.duration as f64)
        .sum();
    let base_power = victim_energy / schedule.total_ticks() as f64;
    let monitor = none.engine.scenario().monitor.clone();
    let d = &cfg.defense;
    let random_power = Bench::new(res, DefenseMode::Random)?.run(seed)?.mean_noise_power();
    let shield_power = Bench::new(res, DefenseMode::Shield)?.run(seed)?.mean_noise_power();
    let variants = vec![
        Variant {
            name: "none".into(),
            components: vec![],
            simulated_power: 0.0,
            static_power: 0.0,
        },
        Variant {
            name: "random".into(),
            components: vec![Component::RandomNoise {
                n_ros: d.n_ros,
                tff_per_ro: d.tff_per_ro,
                lfsr_width: d.lfsr_width,
            }],
            simulated_power: random_power,
            static_power: cfg.overhead.static_power_random,
        },
        Variant {
            name: "shield".into(),
            components: vec![
                Component::Monitor {
                    m: monitor.m() as u32,
                    n_ff: monitor.sensor.n_ff,
                    ref_width: monitor.ref_counter_width,
                },
                Component::ShieldBank {
                    sets: d.sets,
                    control_ffs_per_set: d.control_ffs_per_set,
                    register_width: d.register_width,
                },
            ],
            simulated_power: shield_power + monitor.power(),
            static_power: cfg.overhead.static_power_shield + cfg.overhead.static_power_monitor,
        },
    ];
    Ok(overhead_report(cfg.overhead.base_ff, base_power, &variants, Some("random"))?)
}

/// Fraction of trials whose guess lies within `attacker.success_order`
/// tries of the true key.
pub fn success(res: &Resolved, runner: &Runner, mode: DefenseMode) -> Result<f64> {
    let exp = res.experiment();
    let att = &res.config.attacker;
    let bench = Bench::new(res, mode)?;
    let timing = bench.timing(bench.sample_count()?);
    let hits = runner.map(exp.trials, |t| {
        let mut acc = TraceAccumulator::new();
        for i in 0..att.success_traces {
            acc.add(&bench.run(derive_path(res.seed(), &[streams::SUCCESS, t as u64, i as u64]))?.samples)?;
        }
        let guess = classify(&slot_means(&acc.mean(), &timing)?)?;
        Ok(ranked_within(&guess, &res.key, att.success_order))
    })?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionRow {
    pub f_ref: f64,
    pub runs: usize,
    pub reactions: usize,
    pub mean: Option<f64>,
    pub max: Option<u64>,
}

/// SHIELD reaction delay at each `experiment.reaction_f_refs`, recalibrating
/// the thresholds for every sampling frequency.
pub fn reaction(res: &Resolved, runner: &Runner) -> Result<Vec<ReactionRow>> {
    let exp = res.experiment();
    exp.reaction_f_refs
        .iter()
        .enumerate()
        .map(|(fi, &f)| {
            let mut r = res.clone();
            r.config.monitor.f_ref = f;
            let c = calibrate(&r.config, &r.key)?;
            r.config.defense.theta0 = Some(c.theta0);
            r.config.defense.delta = Some(c.delta);
            let bench = Bench::new(&r, DefenseMode::Shield)?;
            let runs: Vec<Vec<Reaction>> = runner.map(exp.reaction_runs, |i| {
                Ok(bench
                    .run(derive_path(res.seed(), &[streams::REACTION, fi as u64, i as u64]))?
                    .reactions)
            })?;
            Ok(ReactionRow {
                f_ref: f,
                runs: runs.len(),
                reactions: runs.iter().map(Vec::len).sum(),
                mean: pooled_reaction_time(&runs),
                max: runs.iter().flatten().map(Reaction::delay).max(),
            })
        })
        .collect()
}

/// Monitor design-space sweep on the undefended scenario.
pub fn dse(res: &Resolved, runner: &Runner) -> Result<DseReport> {
    let cfg = &res.config;
    let space = cfg.dse_space()?;
    let weights = cfg.weights()?;
    let base = cfg.base_scenario()?;
    let seed = derive(res.seed(), streams::DSE);
    let trials = cfg.dse.trials;
    let eval = |c: &shield_core::dse::Candidate| -> shield_core::Result<CandidateMetrics> {
        evaluate_candidate(&c.apply(&base)?, &res.key, trials, seed)
    };
    match cfg.dse_mode()? {
        Mode::Exhaustive => {
            let cands = space.candidates();
            let metrics = runner.map(cands.len(), |i| Ok(eval(&cands[i])?))?;
            Ok(rank(cands.into_iter().zip(metrics).collect(), &weights)?)
        }
        mode => Ok(explore(&space, &weights, mode, eval)?),
    }
}
