//! Shared power-distribution network.
//!
//! Each current source sees a lumped resistance and inductance. Its drop
//! `r·I + l·dI/dt` reaches a location scaled by `1 / (1 + λ·d)`, where `d` is
//! the Manhattan distance in floorplan cells. Drops from all sources add up.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Integer cell coordinate on the floorplan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub x: u32,
    pub y: u32,
}

impl Location {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Location) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

/// Spatial grid with named sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Floorplan {
    width: u32,
    height: u32,
    named: BTreeMap<String, Location>,
}

impl Floorplan {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("floorplan", "width and height must be positive"));
        }
        Ok(Self {
            width,
            height,
            named: BTreeMap::new(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn contains(&self, loc: Location) -> bool {
        loc.x < self.width && loc.y < self.height
    }

    /// Check that `loc` lies on the grid, naming it `label` in the error.
    pub fn check(&self, label: &str, loc: Location) -> Result<()> {
        if self.contains(loc) {
            Ok(())
        } else {
            Err(Error::OffFloorplan {
                label: label.to_string(),
                x: loc.x,
                y: loc.y,
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn add_location(&mut self, label: &str, loc: Location) -> Result<()> {
        self.check(label, loc)?;
        if self.named.contains_key(label) {
            return Err(Error::DuplicateLabel(label.to_string()));
        }
        self.named.insert(label.to_string(), loc);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Result<Location> {
        self.named
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn locations(&self) -> impl Iterator<Item = (&str, Location)> {
        self.named.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Electrical parameters of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdnParams {
    /// Nominal supply voltage in volts.
    pub v_nom: f64,
    /// Effective per-source resistance in ohms.
    pub r_eff: f64,
    /// Effective per-source inductance in henries.
    pub l_eff: f64,
    /// Spatial attenuation constant per cell.
    pub lambda: f64,
    /// Simulation time step in seconds.
    pub tick_period: f64,
}

impl Default for PdnParams {
    fn default() -> Self {
        Self {
            v_nom: 1.0,
            r_eff: 0.1,
            l_eff: 1e-8,
            lambda: 0.5,
            tick_period: 1e-7,
        }
    }
}

impl PdnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_nom > 0.0) {
            return Err(invalid("pdn.v_nom", "must be > 0"));
        }
        if !(self.r_eff >= 0.0) {
            return Err(invalid("pdn.r_eff", "must be >= 0"));
        }
        if !(self.l_eff >= 0.0) {
            return Err(invalid("pdn.l_eff", "must be >= 0"));
        }
        if !(self.lambda >= 0.0) {
            return Err(invalid("pdn.lambda", "must be >= 0"));
        }
        if !(self.tick_period > 0.0) || !self.tick_period.is_finite() {
            return Err(invalid("pdn.tick_period", "must be > 0"));
        }
        Ok(())
    }

    /// Drop contributed at distance zero by a source drawing `current` now
    /// and `prev_current` one tick earlier.
    pub fn drop_term(&self, current: f64, prev_current: f64) -> f64 {
        self.r_eff * current + self.l_eff * (current - prev_current) / self.tick_period
    }
}

/// Fraction of a source's drop that reaches a site `distance` cells away.
pub fn attenuation(distance: u32, lambda: f64) -> f64 {
    1.0 / (1.0 + lambda * distance as f64)
}

/// Supply current drawn for a power demand, linearised around `v_nom`.
pub fn source_current(power_demand: f64, v_nom: f64) -> Result<f64> {
    if !(v_nom > 0.0) {
        return Err(invalid("v_nom", "must be > 0"));
    }
    Ok(power_demand / v_nom)
}

/// A load on the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentSource {
    pub location: Location,
    /// Power demand at the current tick, in watts.
    pub power_demand: f64,
    /// Current drawn at the previous tick, in amperes.
    pub prev_current: f64,
}

impl CurrentSource {
    /// A source that has been drawing `power_demand` forever.
    pub fn steady(location: Location, power_demand: f64, v_nom: f64) -> Self {
        Self {
            location,
            power_demand,
            prev_current: power_demand / v_nom,
        }
    }

    pub fn current(&self, v_nom: f64) -> f64 {
        self.power_demand / v_nom
    }
}

/// Local supply voltage at `loc`, clamped at zero.
pub fn voltage_at(
    loc: Location,
    sources: &[CurrentSource],
    params: &PdnParams,
    floorplan: &Floorplan,
) -> Result<f64> {
    floorplan.check("probe", loc)?;
    let mut drop = 0.0;
    for (i, src) in sources.iter().enumerate() {
        if !floorplan.contains(src.location) {
            return Err(Error::OffFloorplan {
                label: alloc::format!("source[{i}]"),
                x: src.location.x,
                y: src.location.y,
                width: floorplan.width(),
                height: floorplan.height(),
            });
        }
        let current = source_current(src.power_demand, params.v_nom)?;
        let a = attenuation(loc.manhattan(src.location), params.lambda);
        drop += a * params.drop_term(current, src.prev_current);
    }
    Ok((params.v_nom - drop).max(0.0))
}

/// Tick-by-tick network state: a fixed set of sources whose demands change.
#[derive(Debug, Clone)]
pub struct PdnState {
    pub params: PdnParams,
    pub sources: Vec<CurrentSource>,
    tick: u64,
}

impl PdnState {
    /// Sources start in steady state at their initial demands.
    pub fn new(params: PdnParams, locations: &[Location], initial: &[f64]) -> Result<Self> {
        params.validate()?;
        if locations.len() != initial.len() {
            return Err(invalid("pdn.sources", "one initial demand per source"));
        }
        let sources = locations
            .iter()
            .zip(initial)
            .map(|(&loc, &p)| CurrentSource::steady(loc, p, params.v_nom))
            .collect();
        Ok(Self {
            params,
            sources,
            tick: 0,
        })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn voltage_at(&self, loc: Location, floorplan: &Floorplan) -> Result<f64> {
        voltage_at(loc, &self.sources, &self.params, floorplan)
    }

    /// Advance one tick: the present currents become the previous currents and
    /// `demands` become the present demands.
    pub fn step(&mut self, demands: &[f64]) -> Result<()> {
        if demands.len() != self.sources.len() {
            return Err(invalid("pdn.step", "one demand per source"));
        }
        let v_nom = self.params.v_nom;
        for (src, &p) in self.sources.iter_mut().zip(demands) {
            if !(p >= 0.0) {
                return Err(invalid("power_demand", "must be >= 0"));
            }
            src.prev_current = src.current(v_nom);
            src.power_demand = p;
        }
        self.tick += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid() -> Floorplan {
        Floorplan::new(32, 32).unwrap()
    }

    fn steady_params() -> PdnParams {
        PdnParams {
            v_nom: 1.0,
            r_eff: 0.1,
            l_eff: 1e-8,
            lambda: 0.5,
            tick_period: 1e-7,
        }
    }

    #[test]
    fn attenuation_examples() {
        assert_eq!(attenuation(0, 0.5), 1.0);
        assert_relative_eq!(attenuation(4, 0.5), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(attenuation(10, 0.0), 1.0);
    }

    #[test]
    fn source_current_examples() {
        assert_eq!(source_current(0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(source_current(0.1, 1.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_relative_eq!(source_current(0.05, 0.5).unwrap(), 0.1, epsilon = 1e-15);
        assert!(source_current(0.1, 0.0).is_err());
        assert!(source_current(0.1, -1.0).is_err());
    }

    #[test]
    fn voltage_examples() {
        let fp = grid();
        let p = steady_params();
        let probe = Location::new(10, 10);
        assert_eq!(voltage_at(probe, &[], &p, &fp).unwrap(), 1.0);

        let here = CurrentSource::steady(probe, 0.1, 1.0);
        assert_relative_eq!(voltage_at(probe, &[here], &p, &fp).unwrap(), 0.99, epsilon = 1e-12);

        let away = CurrentSource::steady(Location::new(14, 10), 0.1, 1.0);
        assert_relative_eq!(
            voltage_at(probe, &[away], &p, &fp).unwrap(),
            1.0 - 0.01 / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn off_floorplan_source_rejected() {
        let fp = grid();
        let src = CurrentSource::steady(Location::new(40, 1), 0.1, 1.0);
        let err = voltage_at(Location::new(0, 0), &[src], &steady_params(), &fp).unwrap_err();
        assert!(matches!(err, Error::OffFloorplan { x: 40, .. }));
    }

    #[test]
    fn clamps_at_zero() {
        let fp = grid();
        let src = CurrentSource::steady(Location::new(0, 0), 100.0, 1.0);
        assert_eq!(voltage_at(Location::new(0, 0), &[src], &steady_params(), &fp).unwrap(), 0.0);
    }

    #[test]
    fn inductive_drop_only_on_step_tick() {
        let fp = grid();
        let p = steady_params();
        let loc = Location::new(3, 3);
        let mut st = PdnState::new(p, &[loc], &[0.0]).unwrap();
        let mut volts = vec![];
        for t in 0..6 {
            let demand = if t >= 3 { 0.1 } else { 0.0 };
            st.step(&[demand]).unwrap();
            volts.push(st.voltage_at(loc, &fp).unwrap());
        }
        // ticks 0..=2 idle, tick 3 steps up: r·I + l·ΔI/dt = 0.01 + 1e-8·0.1/1e-7 = 0.02
        assert_eq!(volts[..3], [1.0; 3]);
        assert_relative_eq!(volts[3], 0.98, epsilon = 1e-12);
        assert_relative_eq!(volts[4], 0.99, epsilon = 1e-12);
        assert_relative_eq!(volts[5], 0.99, epsilon = 1e-12);
    }

    #[test]
    fn two_colocated_sources_double_the_drop() {
        let fp = grid();
        let p = steady_params();
        let loc = Location::new(5, 5);
        let one = CurrentSource::steady(Location::new(7, 5), 0.2, 1.0);
        let v1 = voltage_at(loc, &[one], &p, &fp).unwrap();
        let v2 = voltage_at(loc, &[one, one], &p, &fp).unwrap();
        assert_relative_eq!(1.0 - v2, 2.0 * (1.0 - v1), epsilon = 1e-15);
    }

    #[test]
    fn floorplan_labels() {
        let mut fp = grid();
        fp.add_location("victim", Location::new(1, 1)).unwrap();
        assert!(matches!(
            fp.add_location("victim", Location::new(2, 2)),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(matches!(
            fp.add_location("x", Location::new(32, 0)),
            Err(Error::OffFloorplan { .. })
        ));
        assert_eq!(fp.get("victim").unwrap(), Location::new(1, 1));
        assert!(fp.get("nope").is_err());
    }

    fn arb_source() -> impl Strategy<Value = CurrentSource> {
        (0u32..32, 0u32..32, 0.0f64..0.5, 0.0f64..0.5).prop_map(|(x, y, p, i)| CurrentSource {
            location: Location::new(x, y),
            power_demand: p,
            prev_current: i,
        })
    }

    proptest! {
        #[test]
        fn superposition(srcs in proptest::collection::vec(arb_source(), 1..6), x in 0u32..32, y in 0u32..32) {
            let fp = grid();
            // large v_nom keeps the clamp out of the way
            let p = PdnParams { v_nom: 100.0, ..steady_params() };
            let probe = Location::new(x, y);
            let total = p.v_nom - voltage_at(probe, &srcs, &p, &fp).unwrap();
            let sum: f64 = srcs.iter().map(|s| p.v_nom - voltage_at(probe, &[*s], &p, &fp).unwrap()).sum();
            prop_assert!((total - sum).abs() < 1e-9);
        }

        #[test]
        fn more_power_never_raises_voltage(src in arb_source(), extra in 0.0f64..1.0, x in 0u32..32, y in 0u32..32) {
            let fp = grid();
            let p = steady_params();
            let probe = Location::new(x, y);
            let base = voltage_at(probe, &[src], &p, &fp).unwrap();
            let more = CurrentSource { power_demand: src.power_demand + extra, ..src };
            prop_assert!(voltage_at(probe, &[more], &p, &fp).unwrap() <= base);
        }

        #[test]
        fn distance_monotone(p_w in 0.0f64..2.0, d1 in 0u32..20, dd in 0u32..10) {
            let fp = Floorplan::new(64, 1).unwrap();
            let p = steady_params();
            let src = CurrentSource::steady(Location::new(0, 0), p_w, 1.0);
            let near = voltage_at(Location::new(d1, 0), &[src], &p, &fp).unwrap();
            let far = voltage_at(Location::new(d1 + dd, 0), &[src], &p, &fp).unwrap();
            prop_assert!(near <= far);
        }

        #[test]
        fn zero_load_is_nominal(n in 1usize..5, ticks in 1usize..20, x in 0u32..32, y in 0u32..32) {
            let fp = grid();
            let p = steady_params();
            let locs: Vec<_> = (0..n as u32).map(|i| Location::new(i, i)).collect();
            let mut st = PdnState::new(p, &locs, &vec![0.0; n]).unwrap();
            for _ in 0..ticks {
                st.step(&vec![0.0; n]).unwrap();
                prop_assert_eq!(st.voltage_at(Location::new(x, y), &fp).unwrap(), p.v_nom);
            }
        }
    }
}
