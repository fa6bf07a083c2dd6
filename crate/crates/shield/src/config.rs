//! Scenario configuration: strict TOML parsing, defaults, validation and the
//! resolved form that manifests hash.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use shield_core::defense::{NoiseGenBank, RandomNoiseConfig};
use shield_core::dse::{DseSpace, Mode, Weights};
use shield_core::monitor::{MonitorConfig, Placement, RoSensorParams};
use shield_core::pdn::{Floorplan, Location, PdnParams};
use shield_core::seed::{derive, stream_rng};
use shield_core::sim::{calibrate_shield, Defense, Scenario, ShieldConfig};
use shield_core::victim::{bits_to_hex, hex_to_bits, random_bits, VictimPowerParams};

/// Seed branches used by every command.
pub mod streams {
    pub const KEY: u64 = 1;
    pub const CALIBRATION: u64 = 2;
    pub const SIMULATE: u64 = 3;
    pub const EFFORT: u64 = 4;
    pub const TVLA: u64 = 5;
    pub const CORRELATION: u64 = 6;
    pub const DSE: u64 = 7;
    pub const OVERHEAD: u64 = 8;
    pub const REACTION: u64 = 9;
    pub const SUCCESS: u64 = 10;
}

/// A configuration problem, tagged with the offending key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "`{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefenseMode {
    None,
    Random,
    Shield,
}

impl DefenseMode {
    pub const ALL: [DefenseMode; 3] = [DefenseMode::None, DefenseMode::Random, DefenseMode::Shield];

    pub fn name(self) -> &'static str {
        match self {
            DefenseMode::None => "none",
            DefenseMode::Random => "random",
            DefenseMode::Shield => "shield",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloorplanSection {
    pub width: u32,
    pub height: u32,
}

impl Default for FloorplanSection {
    fn default() -> Self {
        Self { width: 64, height: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdnSection {
    pub v_nom: f64,
    pub r_eff: f64,
    pub l_eff: f64,
    pub lambda: f64,
    pub tick_period: f64,
}

impl Default for PdnSection {
    fn default() -> Self {
        let p = PdnParams::default();
        Self {
            v_nom: p.v_nom,
            r_eff: p.r_eff,
            l_eff: p.l_eff,
            lambda: p.lambda,
            tick_period: p.tick_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VictimSection {
    pub p_square: f64,
    pub p_mult: f64,
    pub p_idle: f64,
    pub t_square: u32,
    pub t_mult: u32,
    pub location: [u32; 2],
    pub key_bits: usize,
    /// Secret exponent in hex; drawn from the experiment seed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
}

impl Default for VictimSection {
    fn default() -> Self {
        let v = VictimPowerParams::default();
        Self {
            p_square: v.p_square,
            p_mult: v.p_mult,
            p_idle: v.p_idle,
            t_square: v.t_square,
            t_mult: v.t_mult,
            location: [v.location.x, v.location.y],
            key_bits: 1024,
            key: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorSection {
    pub placement: String,
    pub m: usize,
    /// Explicit RO coordinates; overrides `placement` and `m` when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ro_locations: Option<Vec<[u32; 2]>>,
    pub f_ref: f64,
    pub c_ref: u32,
    pub k: f64,
    pub f0: f64,
    pub n_ff: u32,
    pub jitter: f64,
    pub self_power_per_ro: f64,
    pub ref_counter_width: u32,
    pub ref_power_per_hz: f64,
}

impl Default for MonitorSection {
    fn default() -> Self {
        let s = RoSensorParams::default();
        Self {
            placement: "close2".into(),
            m: 32,
            ro_locations: None,
            f_ref: 10e6,
            c_ref: 20,
            k: s.k,
            f0: s.f0,
            n_ff: s.n_ff,
            jitter: s.jitter,
            self_power_per_ro: 0.001,
            ref_counter_width: 16,
            ref_power_per_hz: 2e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefenseSection {
    pub mode: DefenseMode,
    // SHIELD bank and controller
    pub sets: u32,
    /// Watts per set; `p_mult / sets` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_set: Option<f64>,
    pub location: [u32; 2],
    pub ro_per_set: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub auto_calibrate: bool,
    pub latency_ticks: u32,
    pub control_ffs_per_set: u32,
    pub register_width: u32,
    // random-noise baseline
    pub n_ros: u32,
    pub p_per_ro: f64,
    pub duty: f64,
    pub random_location: [u32; 2],
    pub tff_per_ro: u32,
    pub lfsr_width: u32,
}

impl Default for DefenseSection {
    fn default() -> Self {
        Self {
            mode: DefenseMode::None,
            sets: 4,
            p_set: None,
            location: [17, 32],
            ro_per_set: 8,
            theta0: None,
            delta: None,
            auto_calibrate: false,
            latency_ticks: 1,
            control_ffs_per_set: 2,
            register_width: 8,
            n_ros: 48,
            p_per_ro: 0.05,
            duty: 0.5,
            random_location: [15, 32],
            tff_per_ro: 15,
            lfsr_width: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackerSection {
    /// Traces averaged by the `attack` command.
    pub traces: usize,
    /// Bit errors still counted as a recovered key.
    pub tolerance: usize,
    /// Guesses an attacker may try for the success-rate metric.
    pub success_order: usize,
    /// Traces per trial for the success-rate metric.
    pub success_traces: usize,
}

impl Default for AttackerSection {
    fn default() -> Self {
        Self {
            traces: 5,
            tolerance: 0,
            success_order: 1,
            success_traces: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub trials: usize,
    pub n_max: usize,
    /// Traces written by `simulate`.
    pub traces: usize,
    pub tvla_runs: usize,
    pub tvla_max_pairs: usize,
    pub corr_traces: usize,
    pub reaction_f_refs: Vec<f64>,
    pub reaction_runs: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seed: None,
            trials: 20,
            n_max: 2000,
            traces: 10,
            tvla_runs: 5,
            tvla_max_pairs: 1000,
            corr_traces: 100,
            reaction_f_refs: vec![10e6, 50e6, 100e6],
            reaction_runs: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DseSection {
    pub placements: Vec<String>,
    pub frequencies: Vec<f64>,
    pub ro_counts: Vec<u32>,
    pub trials: usize,
    pub search: String,
    pub w_accuracy: f64,
    pub w_area: f64,
    pub w_power: f64,
}

impl Default for DseSection {
    fn default() -> Self {
        let s = DseSpace::default();
        let w = Weights::default();
        Self {
            placements: s.placements.iter().map(|p| p.name().to_string()).collect(),
            frequencies: s.frequencies,
            ro_counts: s.ro_counts,
            trials: 200,
            search: "exhaustive".into(),
            w_accuracy: w.accuracy,
            w_area: w.area,
            w_power: w.power,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverheadSection {
    /// Flip-flops of the unprotected design (victim plus glue).
    pub base_ff: u64,
    /// Fixed power of each added block, watts.
    pub static_power_monitor: f64,
    pub static_power_shield: f64,
    pub static_power_random: f64,
}

impl Default for OverheadSection {
    fn default() -> Self {
        Self {
            base_ff: 1800,
            static_power_monitor: 0.0,
            static_power_shield: 0.0,
            static_power_random: 0.0,
        }
    }
}

/// Whole configuration file. Every section but `[experiment]` may be
/// omitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub floorplan: FloorplanSection,
    pub pdn: PdnSection,
    pub victim: VictimSection,
    pub monitor: MonitorSection,
    pub defense: DefenseSection,
    pub attacker: AttackerSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
    pub dse: DseSection,
    pub overhead: OverheadSection,
}

/// A validated configuration with every default filled in, the key drawn and
/// (if requested) the SHIELD thresholds calibrated.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: Config,
    pub key: Vec<bool>,
}

pub fn parse_str(text: &str) -> Result<Config, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::new("", format!("syntax: {}", e.message().trim())))?;
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." { String::new() } else { key };
        ConfigError::new(key, e.inner().message().trim().to_string())
    })
}

pub fn parse_file(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text)
}

pub fn resolve_file(path: &Path) -> Result<Resolved, ConfigError> {
    parse_file(path)?.resolve()
}

fn loc(v: [u32; 2]) -> Location {
    Location::new(v[0], v[1])
}

fn core_err(key: &str, e: shield_core::error::Error) -> ConfigError {
    ConfigError::new(key, e.to_string())
}

impl Config {
    pub fn experiment(&self) -> Result<&ExperimentSection, ConfigError> {
        self.experiment
            .as_ref()
            .ok_or_else(|| ConfigError::new("experiment", "missing section `[experiment]`"))
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        self.experiment()?
            .seed
            .ok_or_else(|| ConfigError::new("experiment.seed", "a seed is required"))
    }

    pub fn floorplan(&self) -> Result<Floorplan, ConfigError> {
        Floorplan::new(self.floorplan.width, self.floorplan.height).map_err(|e| core_err("floorplan", e))
    }

    pub fn pdn(&self) -> PdnParams {
        PdnParams {
            v_nom: self.pdn.v_nom,
            r_eff: self.pdn.r_eff,
            l_eff: self.pdn.l_eff,
            lambda: self.pdn.lambda,
            tick_period: self.pdn.tick_period,
        }
    }

    pub fn victim(&self) -> VictimPowerParams {
        VictimPowerParams {
            p_square: self.victim.p_square,
            p_mult: self.victim.p_mult,
            p_idle: self.victim.p_idle,
            t_square: self.victim.t_square,
            t_mult: self.victim.t_mult,
            location: loc(self.victim.location),
        }
    }

    pub fn placement(&self) -> Result<Option<Placement>, ConfigError> {
        if self.monitor.ro_locations.is_some() {
            return Ok(None);
        }
        Placement::parse(&self.monitor.placement).map(Some).ok_or_else(|| {
            ConfigError::new(
                "monitor.placement",
                format!("unknown placement `{}` (far, close1, close2)", self.monitor.placement),
            )
        })
    }

    pub fn monitor(&self) -> Result<MonitorConfig, ConfigError> {
        let fp = self.floorplan()?;
        let mon = &self.monitor;
        let ro_locations = match &mon.ro_locations {
            Some(v) => v.iter().copied().map(loc).collect(),
            None => {
                if mon.m == 0 || !mon.m.is_power_of_two() {
                    return Err(ConfigError::new("monitor.m", format!("{} is not a power of two", mon.m)));
                }
                let p = self.placement()?.expect("placement without explicit locations");
                p.locations(mon.m, loc(self.victim.location), &fp)
                    .map_err(|e| core_err("monitor.placement", e))?
            }
        };
        Ok(MonitorConfig {
            ro_locations,
            f_ref: mon.f_ref,
            c_ref: mon.c_ref,
            sensor: RoSensorParams {
                k: mon.k,
                f0: mon.f0,
                n_ff: mon.n_ff,
                jitter: mon.jitter,
            },
            self_power_per_ro: mon.self_power_per_ro,
            ref_counter_width: mon.ref_counter_width,
            ref_power_per_hz: mon.ref_power_per_hz,
        })
    }

    pub fn bank(&self) -> NoiseGenBank {
        let d = &self.defense;
        NoiseGenBank {
            sets: d.sets,
            p_set: d.p_set.unwrap_or(self.victim.p_mult / d.sets.max(1) as f64),
            location: loc(d.location),
            ro_per_set: d.ro_per_set,
        }
    }

    pub fn random_noise(&self) -> RandomNoiseConfig {
        let d = &self.defense;
        RandomNoiseConfig {
            n_ros: d.n_ros,
            p_per_ro: d.p_per_ro,
            duty: d.duty,
            location: loc(d.random_location),
        }
    }

    /// Scenario without any defense.
    pub fn base_scenario(&self) -> Result<Scenario, ConfigError> {
        let sc = Scenario {
            floorplan: self.floorplan()?,
            pdn: self.pdn(),
            victim: self.victim(),
            monitor: self.monitor()?,
            defense: Defense::None,
        };
        sc.validate().map_err(|e| ConfigError::new(scenario_key(&e), e.to_string()))?;
        Ok(sc)
    }

    /// Scenario with the defense of `mode`, which need not be the configured
    /// one.
    pub fn scenario(&self, mode: DefenseMode) -> Result<Scenario, ConfigError> {
        let base = self.base_scenario()?;
        let defense = match mode {
            DefenseMode::None => Defense::None,
            DefenseMode::Random => Defense::Random(self.random_noise()),
            DefenseMode::Shield => {
                let theta0 = self.defense.theta0.ok_or_else(|| {
                    ConfigError::new("defense.theta0", "required for mode \"shield\" unless auto_calibrate = true")
                })?;
                let delta = self.defense.delta.ok_or_else(|| {
                    ConfigError::new("defense.delta", "required for mode \"shield\" unless auto_calibrate = true")
                })?;
                Defense::Shield(ShieldConfig {
                    bank: self.bank(),
                    theta0,
                    delta,
                    latency_ticks: self.defense.latency_ticks,
                })
            }
        };
        let sc = base.with_defense(defense);
        sc.validate().map_err(|e| ConfigError::new(scenario_key(&e), e.to_string()))?;
        Ok(sc)
    }

    pub fn dse_space(&self) -> Result<DseSpace, ConfigError> {
        let placements = self
            .dse
            .placements
            .iter()
            .map(|p| {
                Placement::parse(p)
                    .ok_or_else(|| ConfigError::new("dse.placements", format!("unknown placement `{p}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let space = DseSpace {
            placements,
            frequencies: self.dse.frequencies.clone(),
            ro_counts: self.dse.ro_counts.clone(),
        };
        space.validate().map_err(|e| core_err("dse", e))?;
        Ok(space)
    }

    pub fn weights(&self) -> Result<Weights, ConfigError> {
        let w = Weights {
            accuracy: self.dse.w_accuracy,
            area: self.dse.w_area,
            power: self.dse.w_power,
        };
        w.validate().map_err(|e| core_err("dse.w_accuracy", e))?;
        Ok(w)
    }

    pub fn dse_mode(&self) -> Result<Mode, ConfigError> {
        match self.dse.search.as_str() {
            "exhaustive" => Ok(Mode::Exhaustive),
            "coordinate" => Ok(Mode::CoordinateDescent),
            other => Err(ConfigError::new(
                "dse.search",
                format!("unknown search `{other}` (exhaustive, coordinate)"),
            )),
        }
    }

    fn check_locations(&self) -> Result<(), ConfigError> {
        let fp = self.floorplan()?;
        let mut named = vec![
            ("victim.location", self.victim.location),
            ("defense.location", self.defense.location),
            ("defense.random_location", self.defense.random_location),
        ];
        if let Some(ros) = &self.monitor.ro_locations {
            for (i, &r) in ros.iter().enumerate() {
                if !fp.contains(loc(r)) {
                    return Err(ConfigError::new(
                        format!("monitor.ro_locations[{i}]"),
                        format!("({}, {}) lies outside the {}x{} floorplan", r[0], r[1], fp.width(), fp.height()),
                    ));
                }
            }
        }
        for (key, l) in named.drain(..) {
            if !fp.contains(loc(l)) {
                return Err(ConfigError::new(
                    key,
                    format!("({}, {}) lies outside the {}x{} floorplan", l[0], l[1], fp.width(), fp.height()),
                ));
            }
        }
        Ok(())
    }

    fn check_values(&self) -> Result<(), ConfigError> {
        let e = self.experiment()?;
        let positive = [
            ("experiment.trials", e.trials),
            ("experiment.n_max", e.n_max),
            ("experiment.traces", e.traces),
            ("experiment.tvla_runs", e.tvla_runs),
            ("experiment.corr_traces", e.corr_traces),
            ("experiment.reaction_runs", e.reaction_runs),
            ("attacker.traces", self.attacker.traces),
            ("attacker.success_order", self.attacker.success_order),
            ("attacker.success_traces", self.attacker.success_traces),
            ("dse.trials", self.dse.trials),
            ("victim.key_bits", self.victim.key_bits),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(ConfigError::new(key, "must be >= 1"));
            }
        }
        if e.tvla_max_pairs < 2 {
            return Err(ConfigError::new("experiment.tvla_max_pairs", "must be >= 2"));
        }
        if e.corr_traces < 2 {
            return Err(ConfigError::new("experiment.corr_traces", "must be >= 2"));
        }
        if e.reaction_f_refs.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(ConfigError::new("experiment.reaction_f_refs", "frequencies must be > 0"));
        }
        self.bank()
            .validate(self.victim.p_mult)
            .map_err(|err| core_err("defense.p_set", err))?;
        self.random_noise().validate().map_err(|err| core_err("defense.duty", err))?;
        if self.defense.mode == DefenseMode::Shield && !self.defense.auto_calibrate {
            if self.defense.theta0.is_none() {
                return Err(ConfigError::new(
                    "defense.theta0",
                    "required for mode \"shield\" unless auto_calibrate = true",
                ));
            }
            if self.defense.delta.is_none() {
                return Err(ConfigError::new(
                    "defense.delta",
                    "required for mode \"shield\" unless auto_calibrate = true",
                ));
            }
        }
        self.dse_space()?;
        self.weights()?;
        self.dse_mode()?;
        Ok(())
    }

    fn draw_key(&self, seed: u64) -> Result<Vec<bool>, ConfigError> {
        let n = self.victim.key_bits;
        match &self.victim.key {
            Some(hex) => hex_to_bits(hex, n).map_err(|e| core_err("victim.key", e)),
            None => Ok(random_bits(n, &mut stream_rng(derive(seed, streams::KEY), 0))),
        }
    }

    /// Validate, fill defaults, draw the key and auto-calibrate.
    pub fn resolve(mut self) -> Result<Resolved, ConfigError> {
        let seed = self.seed()?;
        self.check_locations()?;
        self.base_scenario()?;
        self.check_values()?;
        let key = self.draw_key(seed)?;
        self.victim.key = Some(bits_to_hex(&key));
        if self.defense.p_set.is_none() {
            self.defense.p_set = Some(self.bank().p_set);
        }
        if self.defense.auto_calibrate && (self.defense.theta0.is_none() || self.defense.delta.is_none()) {
            let c = calibrate(&self, &key)?;
            self.defense.theta0 = Some(c.theta0);
            self.defense.delta = Some(c.delta);
        }
        if self.monitor.ro_locations.is_none() {
            // keep m consistent with what the placement produced
            self.monitor.m = self.monitor()?.m();
        }
        Ok(Resolved { config: self, key })
    }
}

/// Offline threshold calibration for the configured SHIELD bank.
pub fn calibrate(cfg: &Config, key: &[bool]) -> Result<shield_core::sim::Calibration, ConfigError> {
    let seed = cfg.seed()?;
    let base = cfg.base_scenario()?;
    calibrate_shield(&base, &cfg.bank(), key, derive(seed, streams::CALIBRATION))
        .map_err(|e| ConfigError::new("defense.theta0", e.to_string()))
}

fn scenario_key(e: &shield_core::error::Error) -> String {
    use shield_core::error::Error as E;
    match e {
        E::InvalidParameter { name, .. } => (*name).to_string(),
        E::OffFloorplan { label, .. } => label.clone(),
        E::NotPowerOfTwo(_) => "monitor.m".into(),
        _ => String::new(),
    }
}

impl Resolved {
    pub fn seed(&self) -> u64 {
        self.config.seed().expect("resolved configs carry a seed")
    }

    pub fn experiment(&self) -> &ExperimentSection {
        self.config.experiment().expect("resolved configs carry [experiment]")
    }

    pub fn mode(&self) -> DefenseMode {
        self.config.defense.mode
    }

    pub fn key_hex(&self) -> String {
        bits_to_hex(&self.key)
    }

    /// Canonical TOML text of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.config).expect("configuration serializes")
    }

    /// SHA-256 of [`Resolved::to_toml`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Scenario for `mode`, calibrating SHIELD thresholds on the fly when
    /// the configuration carries none.
    pub fn scenario(&self, mode: DefenseMode) -> Result<Scenario, ConfigError> {
        if mode == DefenseMode::Shield && (self.config.defense.theta0.is_none() || self.config.defense.delta.is_none()) {
            return self.calibrated()?.config.scenario(mode);
        }
        self.config.scenario(mode)
    }

    /// Copy with freshly calibrated `theta0` and `delta`.
    pub fn calibrated(&self) -> Result<Resolved, ConfigError> {
        let c = calibrate(&self.config, &self.key)?;
        let mut out = self.clone();
        out.config.defense.theta0 = Some(c.theta0);
        out.config.defense.delta = Some(c.delta);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = parse_str("[experiment]\nseed = 1\n").unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(parse_str(&text).unwrap(), c);
    }
}
