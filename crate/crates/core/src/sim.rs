//! End-to-end trace engine: victim and noise loads on the network, monitor
//! ROs sampling the local voltage, and the defense reacting to the samples.
//!
//! The network is linear until a voltage clamps at zero, so each sample
//! window is integrated from per-source drop sums and only windows that could
//! clamp fall back to per-tick evaluation. [`Engine::run_reference`] walks
//! every tick through [`PdnState`] instead and exists to check the fast path.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::defense::{
    noise_power, random_noise_step, ControllerEvent, NoiseGenBank, RandomNoiseConfig, Reaction,
    ShieldController, Transition,
};
use crate::error::{invalid, Error, Result};
use crate::monitor::{count_cycles, monitor_sample, MonitorConfig};
use crate::pdn::{attenuation, Floorplan, Location, PdnParams, PdnState};
use crate::seed::stream_rng;
use crate::victim::{build_power_schedule, PowerSchedule, Step, VictimPowerParams};

const JITTER_STREAM: u64 = 0;
const RANDOM_NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShieldConfig {
    pub bank: NoiseGenBank,
    pub theta0: f64,
    pub delta: f64,
    /// Ticks between the end of a sample window and the noise change it
    /// triggers.
    pub latency_ticks: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Defense {
    None,
    Random(RandomNoiseConfig),
    Shield(ShieldConfig),
    /// Constant load, used to measure the count shift of one noise set.
    Fixed { location: Location, power: f64 },
}

impl Defense {
    pub fn name(&self) -> &'static str {
        match self {
            Defense::None => "none",
            Defense::Random(_) => "random",
            Defense::Shield(_) => "shield",
            Defense::Fixed { .. } => "fixed",
        }
    }

    fn noise_location(&self) -> Option<Location> {
        match self {
            Defense::None => None,
            Defense::Random(r) => Some(r.location),
            Defense::Shield(s) => Some(s.bank.location),
            Defense::Fixed { location, .. } => Some(*location),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub floorplan: Floorplan,
    pub pdn: PdnParams,
    pub victim: VictimPowerParams,
    pub monitor: MonitorConfig,
    pub defense: Defense,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.pdn.validate()?;
        self.victim.validate()?;
        self.floorplan.check("victim", self.victim.location)?;
        self.monitor.validate(&self.floorplan)?;
        match &self.defense {
            Defense::None => {}
            Defense::Random(r) => {
                r.validate()?;
                self.floorplan.check("defense.location", r.location)?;
            }
            Defense::Shield(s) => {
                s.bank.validate(self.victim.p_mult)?;
                self.floorplan.check("defense.location", s.bank.location)?;
                ShieldController::new(s.theta0, s.delta, s.bank.sets)?;
            }
            Defense::Fixed { location, power } => {
                if !(*power >= 0.0) {
                    return Err(invalid("defense.power", "must be >= 0"));
                }
                self.floorplan.check("defense.location", *location)?;
            }
        }
        Ok(())
    }

    pub fn with_defense(&self, defense: Defense) -> Self {
        Self {
            defense,
            ..self.clone()
        }
    }

    /// Sample window length in ticks (possibly fractional).
    pub fn ticks_per_sample(&self) -> f64 {
        self.monitor.sample_period() / self.pdn.tick_period
    }
}

/// Everything one simulated encryption produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub samples: Vec<u64>,
    pub sample_period: f64,
    pub total_ticks: u64,
    pub events: Vec<ControllerEvent>,
    pub reactions: Vec<Reaction>,
    /// Joules injected by the defense over the trace.
    pub noise_energy: f64,
}

impl RunOutput {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period
    }

    pub fn mean_noise_power(&self) -> f64 {
        let d = self.duration();
        if d > 0.0 {
            self.noise_energy / d
        } else {
            0.0
        }
    }
}

/// Window boundaries in tick units; boundaries within rounding distance of a
/// whole tick are snapped onto it.
#[derive(Debug, Clone, Copy)]
pub struct Windows {
    ticks_per_window: f64,
}

impl Windows {
    pub fn new(ticks_per_window: f64) -> Self {
        Self { ticks_per_window }
    }

    pub fn boundary(&self, j: u64) -> f64 {
        let b = j as f64 * self.ticks_per_window;
        let r = libm::round(b);
        if (b - r).abs() <= 1e-9 * b.max(1.0) {
            r
        } else {
            b
        }
    }

    /// Windows needed to cover `ticks` ticks.
    pub fn count_for(&self, ticks: u64) -> u64 {
        let mut n = libm::ceil(ticks as f64 / self.ticks_per_window) as u64;
        while n > 0 && self.boundary(n - 1) >= ticks as f64 {
            n -= 1;
        }
        while self.boundary(n) < ticks as f64 {
            n += 1;
        }
        n
    }

    /// Window containing the start of `tick`.
    pub fn window_of_tick(&self, tick: u64) -> u64 {
        let mut j = libm::floor(tick as f64 / self.ticks_per_window) as u64;
        while j > 0 && self.boundary(j) > tick as f64 {
            j -= 1;
        }
        while self.boundary(j + 1) <= tick as f64 {
            j += 1;
        }
        j
    }

    /// First window whose start is at or after `tick`.
    pub fn first_window_from(&self, tick: u64) -> u64 {
        let mut j = libm::ceil(tick as f64 / self.ticks_per_window) as u64;
        while j > 0 && self.boundary(j - 1) >= tick as f64 {
            j -= 1;
        }
        while self.boundary(j) < tick as f64 {
            j += 1;
        }
        j
    }
}

/// Scenario with attenuation factors precomputed, ready to run traces.
#[derive(Debug, Clone)]
pub struct Engine {
    scenario: Scenario,
    windows: Windows,
    a_victim: Vec<f64>,
    a_noise: Vec<f64>,
    self_drop: Vec<f64>,
    self_drop_max: f64,
    window_seconds: f64,
}

impl Engine {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let lambda = scenario.pdn.lambda;
        let ros = &scenario.monitor.ro_locations;
        let a_victim = ros
            .iter()
            .map(|l| attenuation(l.manhattan(scenario.victim.location), lambda))
            .collect();
        let a_noise = match scenario.defense.noise_location() {
            Some(n) => ros.iter().map(|l| attenuation(l.manhattan(n), lambda)).collect(),
            None => vec![0.0; ros.len()],
        };
        let i_self = scenario.monitor.self_power_per_ro / scenario.pdn.v_nom;
        let self_drop: Vec<f64> = ros
            .iter()
            .map(|a| {
                ros.iter()
                    .map(|b| attenuation(a.manhattan(*b), lambda) * scenario.pdn.r_eff * i_self)
                    .sum()
            })
            .collect();
        let self_drop_max = self_drop.iter().copied().fold(0.0, f64::max);
        let windows = Windows::new(scenario.ticks_per_sample());
        if !(scenario.ticks_per_sample() > 0.0) || !scenario.ticks_per_sample().is_finite() {
            return Err(invalid("monitor.f_ref", "sample period must be a positive number of ticks"));
        }
        let window_seconds = scenario.monitor.sample_period();
        Ok(Self {
            scenario,
            windows,
            a_victim,
            a_noise,
            self_drop,
            self_drop_max,
            window_seconds,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn windows(&self) -> Windows {
        self.windows
    }

    pub fn schedule(&self, bits: &[bool]) -> PowerSchedule {
        build_power_schedule(bits, &self.scenario.victim)
    }

    /// Simulate one encryption with exponent `bits`.
    pub fn run(&self, bits: &[bool], seed: u64) -> Result<RunOutput> {
        self.run_inner(bits, seed, false)
    }

    /// Same as [`Engine::run`] but evaluates every tick through the generic
    /// network model. Slow; for cross-checking.
    pub fn run_reference(&self, bits: &[bool], seed: u64) -> Result<RunOutput> {
        self.run_inner(bits, seed, true)
    }

    fn run_inner(&self, bits: &[bool], seed: u64, reference: bool) -> Result<RunOutput> {
        if bits.is_empty() {
            return Err(invalid("key.bits", "exponent needs at least one bit"));
        }
        let sc = &self.scenario;
        let pdn = &sc.pdn;
        let schedule = self.schedule(bits);
        let total_ticks = schedule.total_ticks();
        let n_windows = self.windows.count_for(total_ticks);
        let tick_span = libm::ceil(self.windows.boundary(n_windows)) as usize + 1;

        let mut victim_p = vec![0.0; tick_span];
        schedule.fill_ticks(&mut victim_p);

        let mut jitter_rng = stream_rng(seed, JITTER_STREAM);
        let random_counts: Vec<u32> = match &sc.defense {
            Defense::Random(cfg) => {
                let mut rng = stream_rng(seed, RANDOM_NOISE_STREAM);
                (0..n_windows + 1).map(|_| random_noise_step(cfg, &mut rng)).collect()
            }
            _ => Vec::new(),
        };

        let mut ctl = match &sc.defense {
            Defense::Shield(s) => Some(ShieldController::new(s.theta0, s.delta, s.bank.sets)?),
            _ => None,
        };
        let mut noise = NoiseTrack::new(tick_span);
        let mut events = Vec::new();
        let mut reactions = Vec::new();
        let mut samples = Vec::with_capacity(n_windows as usize);
        let mut cycles = vec![0.0; sc.monitor.m()];
        let mut counts = vec![0u64; sc.monitor.m()];

        let mut ref_state = if reference {
            let mut locs = vec![sc.victim.location];
            let mut init = vec![sc.victim.p_idle];
            if let Some(n) = sc.defense.noise_location() {
                locs.push(n);
                init.push(0.0);
            }
            locs.extend_from_slice(&sc.monitor.ro_locations);
            init.extend(core::iter::repeat_n(sc.monitor.self_power_per_ro, sc.monitor.m()));
            Some(PdnState::new(*pdn, &locs, &init)?)
        } else {
            None
        };
        // last tick applied to the reference network
        let mut ref_tick: i64 = -1;

        let v_nom = pdn.v_nom;
        let sensor = sc.monitor.sensor;
        match &sc.defense {
            Defense::Random(cfg) => {
                let mut j = 0u64;
                for t in 0..tick_span {
                    while self.windows.boundary(j + 1) <= t as f64 {
                        j += 1;
                    }
                    let c = random_counts[(j as usize).min(random_counts.len() - 1)];
                    noise.power[t] = c as f64 * cfg.p_per_ro;
                }
                noise.filled = tick_span;
            }
            Defense::Fixed { power, .. } => {
                noise.power.iter_mut().for_each(|p| *p = *power);
                noise.filled = tick_span;
            }
            _ => {}
        }
        let has_noise = !matches!(sc.defense, Defense::None);
        let mut dv = vec![0.0; tick_span];
        let mut prev_i = sc.victim.p_idle / v_nom;
        for (d, &p) in dv.iter_mut().zip(&victim_p) {
            let i = p / v_nom;
            *d = pdn.drop_term(i, prev_i);
            prev_i = i;
        }
        let mut dn = vec![0.0; if has_noise { tick_span } else { 0 }];
        let mut dn_filled = 0usize;

        for j in 0..n_windows {
            let a = self.windows.boundary(j);
            let b = self.windows.boundary(j + 1);
            let t0 = libm::floor(a) as usize;
            let t1 = libm::ceil(b) as usize;

            if let Some(state) = ref_state.as_mut() {
                let mut integral = vec![0.0; sc.monitor.m()];
                for t in t0..t1 {
                    let ov = (t as f64 + 1.0).min(b) - (t as f64).max(a);
                    while ref_tick < t as i64 {
                        ref_tick += 1;
                        let tt = ref_tick as usize;
                        let np = noise.resolve(tt);
                        let mut demands = vec![victim_p[tt]];
                        if sc.defense.noise_location().is_some() {
                            demands.push(np);
                        }
                        demands.extend(core::iter::repeat_n(sc.monitor.self_power_per_ro, sc.monitor.m()));
                        state.step(&demands)?;
                    }
                    for (i, &loc) in sc.monitor.ro_locations.iter().enumerate() {
                        integral[i] += ov * state.voltage_at(loc, &sc.floorplan)?;
                    }
                }
                for i in 0..sc.monitor.m() {
                    cycles[i] = sensor.k * integral[i] * pdn.tick_period + sensor.f0 * self.window_seconds;
                }
            } else {
                // drop sums at distance zero, weighted by overlap
                if has_noise {
                    while dn_filled < t1 {
                        let u = dn_filled;
                        let np = noise.resolve(u);
                        let prev = if u == 0 { 0.0 } else { noise.power[u - 1] };
                        dn[u] = pdn.drop_term(np / v_nom, prev / v_nom);
                        dn_filled += 1;
                    }
                }
                let (mut ev, mut en) = (0.0, 0.0);
                let mut worst: f64 = 0.0;
                for t in t0..t1 {
                    let ov = (t as f64 + 1.0).min(b) - (t as f64).max(a);
                    let dn_t = if has_noise { dn[t] } else { 0.0 };
                    ev += ov * dv[t];
                    en += ov * dn_t;
                    worst = worst.max(dv[t].max(0.0) + dn_t.max(0.0));
                }
                if v_nom - self.self_drop_max - worst >= 0.0 {
                    let span = b - a;
                    for i in 0..sc.monitor.m() {
                        let integral =
                            (v_nom - self.self_drop[i]) * span - self.a_victim[i] * ev - self.a_noise[i] * en;
                        cycles[i] = sensor.k * integral * pdn.tick_period + sensor.f0 * self.window_seconds;
                    }
                } else {
                    self.clamped_window(&mut cycles, a, b, &victim_p, &noise)?;
                }
            }

            for i in 0..sc.monitor.m() {
                let mut c = cycles[i];
                if sensor.jitter > 0.0 {
                    let z: f64 = jitter_rng.sample(StandardNormal);
                    c += z * sensor.jitter * libm::sqrt(c.max(0.0));
                }
                let phase: f64 = jitter_rng.random();
                counts[i] = count_cycles(c, phase, sensor.n_ff);
            }
            let sample = monitor_sample(&counts)?;
            samples.push(sample);

            if let (Some(ctl), Defense::Shield(cfg)) = (ctl.as_mut(), &sc.defense) {
                let tr = ctl.step(sample as f64);
                if tr != Transition::Hold {
                    events.push(ControllerEvent {
                        sample_index: j,
                        transition: tr,
                        active_k: ctl.active(),
                        threshold: ctl.threshold(),
                    });
                    let at = libm::ceil(b) as u64 + cfg.latency_ticks as u64;
                    noise.schedule(at as usize, noise_power(ctl.active(), &cfg.bank)?);
                    if tr == Transition::Detect {
                        let eff = self.windows.first_window_from(at);
                        if eff < n_windows {
                            reactions.push(Reaction {
                                detected_at: j,
                                effective_at: eff,
                            });
                        }
                    }
                }
            }
        }

        let end = self.windows.boundary(n_windows);
        let mut energy = 0.0;
        for t in 0..libm::ceil(end) as usize {
            let ov = (t as f64 + 1.0).min(end) - t as f64;
            energy += ov * noise.resolve(t);
        }
        Ok(RunOutput {
            samples,
            sample_period: self.window_seconds,
            total_ticks,
            events,
            reactions,
            noise_energy: energy * pdn.tick_period,
        })
    }

    fn clamped_window(
        &self,
        cycles: &mut [f64],
        a: f64,
        b: f64,
        victim_p: &[f64],
        noise: &NoiseTrack,
    ) -> Result<()> {
        let sc = &self.scenario;
        let pdn = &sc.pdn;
        let v_nom = pdn.v_nom;
        let t0 = libm::floor(a) as usize;
        let t1 = libm::ceil(b) as usize;
        for (i, c) in cycles.iter_mut().enumerate() {
            let mut integral = 0.0;
            for t in t0..t1 {
                let ov = (t as f64 + 1.0).min(b) - (t as f64).max(a);
                let prev_v = if t == 0 { sc.victim.p_idle } else { victim_p[t - 1] };
                let prev_n = if t == 0 { 0.0 } else { noise.power[t - 1] };
                let dv = pdn.drop_term(victim_p[t] / v_nom, prev_v / v_nom);
                let dn = pdn.drop_term(noise.power[t] / v_nom, prev_n / v_nom);
                let v = v_nom - self.self_drop[i] - self.a_victim[i] * dv - self.a_noise[i] * dn;
                integral += ov * v.max(0.0);
            }
            *c = sc.monitor.sensor.k * integral * pdn.tick_period + sc.monitor.sensor.f0 * self.window_seconds;
        }
        Ok(())
    }
}

/// Per-tick noise power, filled in time order as ticks are first visited.
#[derive(Debug, Clone)]
struct NoiseTrack {
    power: Vec<f64>,
    filled: usize,
    level: f64,
    pending: Vec<(usize, f64)>,
}

impl NoiseTrack {
    fn new(span: usize) -> Self {
        Self {
            power: vec![0.0; span],
            filled: 0,
            level: 0.0,
            pending: Vec::new(),
        }
    }

    fn schedule(&mut self, tick: usize, power: f64) {
        self.pending.push((tick, power));
    }

    fn resolve(&mut self, t: usize) -> f64 {
        while self.filled <= t && self.filled < self.power.len() {
            let tick = self.filled;
            while let Some(&(at, p)) = self.pending.first() {
                if at <= tick {
                    self.level = p;
                    self.pending.remove(0);
                } else {
                    break;
                }
            }
            self.power[tick] = self.level;
            self.filled += 1;
        }
        self.power.get(t).copied().unwrap_or(self.level)
    }
}

/// Offline calibration of the SHIELD thresholds for a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub theta0: f64,
    pub delta: f64,
    pub idle_mean: f64,
    pub mult_mean: f64,
}

/// Midpoint of mean counts in windows lying wholly inside square (idle
/// multiplier) and multiply segments.
pub fn midpoint_threshold(idle_mean: f64, mult_mean: f64) -> f64 {
    (idle_mean + mult_mean) / 2.0
}

/// Dry runs with a known key: one undefended to place `theta0`, one with a
/// single noise set constantly on to measure `delta`.
pub fn calibrate_shield(
    scenario: &Scenario,
    bank: &NoiseGenBank,
    bits: &[bool],
    seed: u64,
) -> Result<Calibration> {
    if !scenario.victim.has_contrast() {
        return Err(Error::Calibration("multiply and square draw equal power"));
    }
    let base = Engine::new(scenario.with_defense(Defense::None))?;
    let out = base.run(bits, seed)?;
    let schedule = base.schedule(bits);
    let w = base.windows();
    let (mut idle, mut n_idle, mut mult, mut n_mult) = (0.0, 0u64, 0.0, 0u64);
    for seg in schedule.segments() {
        let first = w.first_window_from(seg.start);
        let mut j = first;
        while j < out.samples.len() as u64 && w.boundary(j + 1) <= seg.end() as f64 {
            let s = out.samples[j as usize] as f64;
            match seg.step {
                Step::Square => {
                    idle += s;
                    n_idle += 1;
                }
                Step::Multiply => {
                    mult += s;
                    n_mult += 1;
                }
            }
            j += 1;
        }
    }
    if n_idle == 0 || n_mult == 0 {
        return Err(Error::Calibration("no sample window fits inside a square and a multiply segment"));
    }
    let (idle_mean, mult_mean) = (idle / n_idle as f64, mult / n_mult as f64);
    if idle_mean <= mult_mean {
        return Err(Error::Calibration("multiply segments do not lower the monitor count"));
    }
    let loaded = Engine::new(scenario.with_defense(Defense::Fixed {
        location: bank.location,
        power: bank.p_set,
    }))?
    .run(bits, seed)?;
    let mean = |v: &[u64]| v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64;
    let delta = (mean(&out.samples) - mean(&loaded.samples)).max(0.0);
    Ok(Calibration {
        theta0: midpoint_threshold(idle_mean, mult_mean),
        delta,
        idle_mean,
        mult_mean,
    })
}

/// Constant-power reference run with no victim activity, used by tests and
/// the closed-form checks: the expected count of a single RO at voltage `v`.
pub fn expected_count(v: f64, monitor: &MonitorConfig) -> f64 {
    crate::monitor::ro_frequency(v, &monitor.sensor) * monitor.sample_period()
}

/// Draw `n` uniformly random exponent bits.
pub fn random_key<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<bool> {
    crate::victim::random_bits(n, rng)
}
