//! Ring-oscillator power monitor.
//!
//! Each RO oscillates at a frequency that tracks its local supply voltage.
//! A counter chain counts RO edges while a reference counter runs for `c_ref`
//! cycles of `f_ref`; the counts of all `m` ROs are averaged into one sample.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::pdn::{Floorplan, Location};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoSensorParams {
    /// Hz per volt.
    pub k: f64,
    /// Hz.
    pub f0: f64,
    /// Flip-flops in each counter chain.
    pub n_ff: u32,
    /// Accumulated period jitter: standard deviation of a count is
    /// `jitter * sqrt(cycles)`. Zero disables it.
    pub jitter: f64,
}

impl Default for RoSensorParams {
    fn default() -> Self {
        Self {
            k: 200e6,
            f0: 100e6,
            n_ff: 16,
            jitter: 0.15,
        }
    }
}

impl RoSensorParams {
    pub fn validate(&self) -> Result<()> {
        // k = 0 is allowed: a dead sensor is a useful degenerate candidate.
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(invalid("monitor.k", "must be finite and >= 0"));
        }
        if !(self.f0 >= 0.0) || !self.f0.is_finite() {
            return Err(invalid("monitor.f0", "must be finite and >= 0"));
        }
        if self.n_ff == 0 || self.n_ff > 48 {
            return Err(invalid("monitor.n_ff", "must be in 1..=48"));
        }
        if !(self.jitter >= 0.0) || !self.jitter.is_finite() {
            return Err(invalid("monitor.jitter", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn max_count(&self) -> u64 {
        (1u64 << self.n_ff) - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    pub ro_locations: Vec<Location>,
    pub f_ref: f64,
    pub c_ref: u32,
    pub sensor: RoSensorParams,
    pub self_power_per_ro: f64,
    /// Width of the reference counter, for area accounting.
    pub ref_counter_width: u32,
    /// Reference counter power per hertz of `f_ref`, for power accounting.
    pub ref_power_per_hz: f64,
}

impl MonitorConfig {
    pub fn m(&self) -> usize {
        self.ro_locations.len()
    }

    /// Seconds per sample.
    pub fn sample_period(&self) -> f64 {
        self.c_ref as f64 / self.f_ref
    }

    pub fn validate(&self, floorplan: &Floorplan) -> Result<()> {
        let m = self.m();
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(m));
        }
        if !(self.f_ref > 0.0) || !self.f_ref.is_finite() {
            return Err(invalid("monitor.f_ref", "must be > 0"));
        }
        if self.c_ref == 0 {
            return Err(invalid("monitor.c_ref", "must be >= 1"));
        }
        if !(self.ref_power_per_hz >= 0.0) {
            return Err(invalid("monitor.ref_power_per_hz", "must be >= 0"));
        }
        if !(self.self_power_per_ro >= 0.0) {
            return Err(invalid("monitor.self_power_per_ro", "must be >= 0"));
        }
        self.sensor.validate()?;
        for (i, &loc) in self.ro_locations.iter().enumerate() {
            floorplan.check(&alloc::format!("monitor.ro[{i}]"), loc)?;
        }
        Ok(())
    }

    /// Average power of the monitor's ROs and reference counter.
    pub fn power(&self) -> f64 {
        self.m() as f64 * self.self_power_per_ro + self.f_ref * self.ref_power_per_hz
    }

    /// Counter flip-flops: one chain per RO plus the reference counter.
    pub fn ff_count(&self) -> u64 {
        self.m() as u64 * self.sensor.n_ff as u64 + self.ref_counter_width as u64
    }
}

/// Affine voltage-to-frequency law.
pub fn ro_frequency(v: f64, sensor: &RoSensorParams) -> f64 {
    sensor.k * v + sensor.f0
}

/// Count of RO edges in `cycles` (possibly fractional) periods, with a phase
/// offset in `[0, 1)`. Negative values count as zero; large values saturate.
pub fn count_cycles(cycles: f64, phase: f64, n_ff: u32) -> u64 {
    let max = (1u64 << n_ff) - 1;
    let c = cycles + phase;
    // truncation is floor for positive values
    if c < 1.0 {
        0
    } else if c >= max as f64 {
        max
    } else {
        c as u64
    }
}

/// Count over one reference window `c_ref / f_ref`.
pub fn ro_count(f_ro: f64, f_ref: f64, c_ref: u32, phase: f64, n_ff: u32) -> Result<u64> {
    if !f_ro.is_finite() {
        return Err(Error::NonFiniteFrequency);
    }
    if !(f_ref > 0.0) {
        return Err(invalid("f_ref", "must be > 0"));
    }
    if c_ref == 0 {
        return Err(invalid("c_ref", "must be >= 1"));
    }
    let window = c_ref as f64 / f_ref;
    Ok(count_cycles(f_ro * window, phase, n_ff))
}

/// Average of `m` counts as `sum >> log2(m)`.
pub fn monitor_sample(counts: &[u64]) -> Result<u64> {
    let m = counts.len();
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(m));
    }
    let sum: u64 = counts.iter().sum();
    Ok(sum >> m.trailing_zeros())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceMeta {
    pub scenario_id: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<u64>,
    pub sample_period: f64,
    pub meta: TraceMeta,
}

/// Monitor layouts studied in the placement sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Placement {
    /// Compact block near the opposite edge of the fabric.
    Far,
    /// Compact block a few cells away from the victim.
    Close1,
    /// ROs scattered on rings around the victim, apart from each other.
    Close2,
}

impl Placement {
    pub const ALL: [Placement; 3] = [Placement::Far, Placement::Close1, Placement::Close2];

    pub fn name(self) -> &'static str {
        match self {
            Placement::Far => "far",
            Placement::Close1 => "close1",
            Placement::Close2 => "close2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// RO coordinates for `m` ROs around a victim at `victim`.
    pub fn locations(self, m: usize, victim: Location, floorplan: &Floorplan) -> Result<Vec<Location>> {
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(m));
        }
        let (w, h) = (floorplan.width(), floorplan.height());
        let locs = match self {
            Placement::Far => {
                let cx = if victim.x < w / 2 { w.saturating_sub(6) } else { 5 };
                block(m, Location::new(cx, victim.y), w, h)
            }
            Placement::Close1 => {
                let cx = if victim.x + 10 < w { victim.x + 8 } else { victim.x.saturating_sub(8) };
                block(m, Location::new(cx, victim.y), w, h)
            }
            Placement::Close2 => rings(m, victim, w, h),
        };
        if locs.len() < m {
            return Err(invalid("monitor.placement", "floorplan too small for the requested RO count"));
        }
        Ok(locs)
    }
}

/// Near-square block of `m` cells centred on `c`, clipped to the plane.
fn block(m: usize, c: Location, w: u32, h: u32) -> Vec<Location> {
    let mut side = 1u32;
    while (side * side) < m as u32 {
        side += 1;
    }
    let x0 = c.x.saturating_sub(side / 2).min(w.saturating_sub(side));
    let y0 = c.y.saturating_sub(side / 2).min(h.saturating_sub(side));
    let mut out = Vec::with_capacity(m);
    'outer: for dy in 0..side {
        for dx in 0..side {
            if out.len() == m {
                break 'outer;
            }
            let (x, y) = (x0 + dx, y0 + dy);
            if x < w && y < h {
                out.push(Location::new(x, y));
            }
        }
    }
    out
}

/// Cells on Manhattan rings of radius 2, 3, ... around `c`, spread evenly
/// within the outermost ring that is needed.
fn rings(m: usize, c: Location, w: u32, h: u32) -> Vec<Location> {
    let mut out = Vec::with_capacity(m);
    let mut r = 2i64;
    while out.len() < m && r < (w + h) as i64 {
        let ring = ring_cells(c, r, w, h);
        let need = m - out.len();
        if ring.len() <= need {
            out.extend(ring);
        } else {
            for i in 0..need {
                out.push(ring[i * ring.len() / need]);
            }
        }
        r += 1;
    }
    out
}

fn ring_cells(c: Location, r: i64, w: u32, h: u32) -> Vec<Location> {
    let (cx, cy) = (c.x as i64, c.y as i64);
    let mut out = Vec::new();
    // walk the diamond: start east, go counter-clockwise
    for i in 0..4 * r {
        let (dx, dy) = match i / r {
            0 => (r - i % r, i % r),
            1 => (-(i % r), r - i % r),
            2 => (-(r - i % r), -(i % r)),
            _ => (i % r, -(r - i % r)),
        };
        let (x, y) = (cx + dx, cy + dy);
        if x >= 0 && y >= 0 && x < w as i64 && y < h as i64 {
            out.push(Location::new(x as u32, y as u32));
        }
    }
    out
}
