//! Noise-injection defenses: the adaptive SHIELD controller and the
//! random-noise baseline.
//!
//! The controller watches monitor samples. A sample above the threshold means
//! the victim's multiplier is silent, so the controller switches on one more
//! set of noise ROs and lowers its count threshold by the shift one set
//! causes. When the victim draws power again (sample at or below the current
//! threshold), or once every set is on, all noise is switched off and the
//! threshold returns to its initial value.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Result};
use crate::pdn::Location;

/// Bank of noise RO sets switched on one set at a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGenBank {
    pub sets: u32,
    pub p_set: f64,
    pub location: Location,
    pub ro_per_set: u32,
}

impl NoiseGenBank {
    /// `cap` is the largest total noise power allowed (one multiplier).
    pub fn validate(&self, cap: f64) -> Result<()> {
        if self.sets == 0 {
            return Err(invalid("defense.sets", "must be >= 1"));
        }
        if !(self.p_set >= 0.0) {
            return Err(invalid("defense.p_set", "must be >= 0"));
        }
        if self.sets as f64 * self.p_set > cap * (1.0 + 1e-12) {
            return Err(invalid("defense.p_set", "full bank exceeds the multiplier power budget"));
        }
        Ok(())
    }
}

/// Power drawn with `active` sets switched on.
pub fn noise_power(active: u32, bank: &NoiseGenBank) -> Result<f64> {
    if active > bank.sets {
        return Err(crate::error::Error::ActiveSetsOutOfRange {
            active,
            sets: bank.sets,
        });
    }
    Ok(active as f64 * bank.p_set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShieldState {
    Idle,
    Ramping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    /// Idle and nothing seen.
    Hold,
    /// Victim silence detected; first set switched on.
    Detect,
    /// One more set switched on.
    Ramp,
    /// All sets switched off, threshold back to its initial value.
    Reset,
}

impl Transition {
    pub fn name(self) -> &'static str {
        match self {
            Transition::Hold => "HOLD",
            Transition::Detect => "DETECT",
            Transition::Ramp => "RAMP",
            Transition::Reset => "RESET",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShieldController {
    theta0: f64,
    delta: f64,
    sets: u32,
    active: u32,
    state: ShieldState,
}

impl ShieldController {
    pub fn new(theta0: f64, delta: f64, sets: u32) -> Result<Self> {
        if !theta0.is_finite() {
            return Err(invalid("defense.theta0", "must be finite"));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid("defense.delta", "must be finite and >= 0"));
        }
        if sets == 0 {
            return Err(invalid("defense.sets", "must be >= 1"));
        }
        Ok(Self {
            theta0,
            delta,
            sets,
            active: 0,
            state: ShieldState::Idle,
        })
    }

    pub fn active(&self) -> u32 {
        self.active
    }

    pub fn state(&self) -> ShieldState {
        self.state
    }

    pub fn sets(&self) -> u32 {
        self.sets
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Effective count threshold at the present ramp level.
    pub fn threshold(&self) -> f64 {
        self.theta0 - self.active as f64 * self.delta
    }

    /// Exactly one transition per monitor sample.
    pub fn step(&mut self, sample: f64) -> Transition {
        let above = sample > self.threshold();
        match self.state {
            ShieldState::Idle if above => {
                self.active = 1;
                self.state = ShieldState::Ramping;
                Transition::Detect
            }
            ShieldState::Idle => Transition::Hold,
            ShieldState::Ramping if above && self.active < self.sets => {
                self.active += 1;
                Transition::Ramp
            }
            ShieldState::Ramping => {
                self.active = 0;
                self.state = ShieldState::Idle;
                Transition::Reset
            }
        }
    }
}

/// Functional form of [`ShieldController::step`].
pub fn shield_step(mut ctl: ShieldController, sample: f64) -> (ShieldController, u32) {
    ctl.step(sample);
    let k = ctl.active();
    (ctl, k)
}

/// Always-available ROs each switched on at random every sample period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomNoiseConfig {
    pub n_ros: u32,
    pub p_per_ro: f64,
    pub duty: f64,
    pub location: Location,
}

impl RandomNoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.duty) {
            return Err(invalid("defense.duty", "must lie in [0, 1]"));
        }
        if !(self.p_per_ro >= 0.0) {
            return Err(invalid("defense.p_per_ro", "must be >= 0"));
        }
        Ok(())
    }

    pub fn mean_power(&self) -> f64 {
        self.n_ros as f64 * self.duty * self.p_per_ro
    }
}

/// Number of ROs switched on for one sample period.
pub fn random_noise_step<R: Rng + ?Sized>(cfg: &RandomNoiseConfig, rng: &mut R) -> u32 {
    match Binomial::new(cfg.n_ros as u64, cfg.duty) {
        Ok(b) => b.sample(rng) as u32,
        Err(_) => 0,
    }
}

/// One controller decision, as written to the event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerEvent {
    pub sample_index: u64,
    pub transition: Transition,
    pub active_k: u32,
    pub threshold: f64,
}

/// A detection and the first sample window fully covered by the noise it
/// switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reaction {
    pub detected_at: u64,
    pub effective_at: u64,
}

impl Reaction {
    pub fn delay(&self) -> u64 {
        self.effective_at - self.detected_at
    }
}

/// Mean delay over all reactions, or `None` without any.
pub fn measure_reaction_time(reactions: &[Reaction]) -> Option<f64> {
    if reactions.is_empty() {
        return None;
    }
    let total: u64 = reactions.iter().map(Reaction::delay).sum();
    Some(total as f64 / reactions.len() as f64)
}

/// Reactions across several runs pooled into one mean.
pub fn pooled_reaction_time(runs: &[Vec<Reaction>]) -> Option<f64> {
    let all: Vec<Reaction> = runs.iter().flatten().copied().collect();
    measure_reaction_time(&all)
}
