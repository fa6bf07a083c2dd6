//! Design-space exploration of the power monitor: placement, reference
//! frequency and RO count, scored by a weighted min-max normalized cost.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::attacker::{classify, hamming, slot_means, SlotTiming, TraceAccumulator};
use crate::error::{invalid, Result};
use crate::monitor::Placement;
use crate::seed::derive;
use crate::sim::{Engine, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct DseSpace {
    pub placements: Vec<Placement>,
    pub frequencies: Vec<f64>,
    pub ro_counts: Vec<u32>,
}

impl Default for DseSpace {
    fn default() -> Self {
        Self {
            placements: Placement::ALL.to_vec(),
            frequencies: alloc::vec![10e6, 100e6],
            ro_counts: alloc::vec![16, 32, 64],
        }
    }
}

impl DseSpace {
    pub fn validate(&self) -> Result<()> {
        if self.placements.is_empty() || self.frequencies.is_empty() || self.ro_counts.is_empty() {
            return Err(invalid("dse.space", "every axis needs at least one value"));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.placements.len() * self.frequencies.len() * self.ro_counts.len()
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::with_capacity(self.size());
        for &placement in &self.placements {
            for &f_ref in &self.frequencies {
                for &m in &self.ro_counts {
                    out.push(Candidate { placement, f_ref, m });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub placement: Placement,
    pub f_ref: f64,
    pub m: u32,
}

impl Candidate {
    pub fn name(&self) -> String {
        format!("{}/{}MHz/{}", self.placement.name(), self.f_ref / 1e6, self.m)
    }

    /// `base` with this candidate's monitor.
    pub fn apply(&self, base: &Scenario) -> Result<Scenario> {
        let mut sc = base.clone();
        sc.monitor.ro_locations = self
            .placement
            .locations(self.m as usize, sc.victim.location, &sc.floorplan)?;
        sc.monitor.f_ref = self.f_ref;
        Ok(sc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateMetrics {
    pub avg_bit_errors: f64,
    pub traces_to_extract: f64,
    pub ff_count: u64,
    pub avg_power: f64,
}

/// Single-trace attacks on `trials` traces give the bit-error average. The
/// same trace stream, cut into consecutive blocks that each end at the first
/// error-free averaged guess, gives the traces-to-extract average; if no
/// block completes, the stream length is reported.
pub fn evaluate_candidate(scenario: &Scenario, truth: &[bool], trials: usize, seed: u64) -> Result<CandidateMetrics> {
    if trials == 0 {
        return Err(invalid("dse.trials", "must be >= 1"));
    }
    let engine = Engine::new(scenario.clone())?;
    let schedule = engine.schedule(truth);
    let mut timing: Option<SlotTiming> = None;
    let mut errors_total = 0usize;
    let mut block = TraceAccumulator::new();
    let mut blocks = Vec::new();
    for i in 0..trials {
        let out = engine.run(truth, derive(seed, i as u64))?;
        let timing =
            timing.get_or_insert_with(|| SlotTiming::from_schedule(&schedule, engine.windows(), out.samples.len()));
        let single: Vec<f64> = out.samples.iter().map(|&s| s as f64).collect();
        errors_total += hamming(&classify(&slot_means(&single, timing)?)?.bits, truth);
        block.add(&out.samples)?;
        let g = classify(&slot_means(&block.mean(), timing)?)?;
        if hamming(&g.bits, truth) == 0 {
            blocks.push(block.count());
            block = TraceAccumulator::new();
        }
    }
    let traces_to_extract = if blocks.is_empty() {
        trials as f64
    } else {
        blocks.iter().sum::<usize>() as f64 / blocks.len() as f64
    };
    Ok(CandidateMetrics {
        avg_bit_errors: errors_total as f64 / trials as f64,
        traces_to_extract,
        ff_count: scenario.monitor.ff_count(),
        avg_power: scenario.monitor.power(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub accuracy: f64,
    pub area: f64,
    pub power: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            accuracy: 0.9,
            area: 0.05,
            power: 0.05,
        }
    }
}

impl Weights {
    pub fn equal() -> Self {
        Self {
            accuracy: 1.0 / 3.0,
            area: 1.0 / 3.0,
            power: 1.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.accuracy, self.area, self.power];
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid("dse.weights", "weights must be finite and >= 0"));
        }
        if w.iter().all(|&x| x == 0.0) {
            return Err(invalid("dse.weights", "at least one weight must be positive"));
        }
        Ok(())
    }
}

/// Metrics scaled to `[0, 1]` over the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub bit_errors: f64,
    pub ff: f64,
    pub power: f64,
}

pub fn cost(n: &Normalized, w: &Weights) -> f64 {
    w.accuracy * n.bit_errors + w.area * n.ff + w.power * n.power
}

/// Min-max normalization; an axis with no spread maps to zero. The flag is
/// set when every axis collapsed.
pub fn normalize(metrics: &[CandidateMetrics]) -> (Vec<Normalized>, bool) {
    let scale = |get: &dyn Fn(&CandidateMetrics) -> f64| {
        let lo = metrics.iter().map(get).fold(f64::INFINITY, f64::min);
        let hi = metrics.iter().map(get).fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let vals: Vec<f64> = metrics
            .iter()
            .map(|m| if span > 0.0 { (get(m) - lo) / span } else { 0.0 })
            .collect();
        (vals, !(span > 0.0))
    };
    let (e, de) = scale(&|m| m.avg_bit_errors);
    let (f, df) = scale(&|m| m.ff_count as f64);
    let (p, dp) = scale(&|m| m.avg_power);
    let out = (0..metrics.len())
        .map(|i| Normalized {
            bit_errors: e[i],
            ff: f[i],
            power: p[i],
        })
        .collect();
    (out, de && df && dp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranked {
    pub candidate: Candidate,
    pub metrics: CandidateMetrics,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DseReport {
    /// Best first.
    pub ranked: Vec<Ranked>,
    pub degenerate: bool,
}

impl DseReport {
    pub fn winner(&self) -> &Ranked {
        &self.ranked[0]
    }
}

/// Sort by cost, then fewer flip-flops, lower power, and name.
pub fn rank(evaluated: Vec<(Candidate, CandidateMetrics)>, weights: &Weights) -> Result<DseReport> {
    weights.validate()?;
    if evaluated.is_empty() {
        return Err(invalid("dse.space", "nothing to rank"));
    }
    let metrics: Vec<CandidateMetrics> = evaluated.iter().map(|(_, m)| *m).collect();
    let (norm, degenerate) = normalize(&metrics);
    let mut ranked: Vec<Ranked> = evaluated
        .into_iter()
        .zip(&norm)
        .map(|((candidate, metrics), n)| Ranked {
            candidate,
            metrics,
            cost: cost(n, weights),
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then(a.metrics.ff_count.cmp(&b.metrics.ff_count))
            .then(a.metrics.avg_power.total_cmp(&b.metrics.avg_power))
            .then_with(|| a.candidate.name().cmp(&b.candidate.name()))
    });
    Ok(DseReport { ranked, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every point of the cross product.
    Exhaustive,
    /// Fix one axis at a time, repeating until no axis changes.
    CoordinateDescent,
}

pub fn explore<F>(space: &DseSpace, weights: &Weights, mode: Mode, mut eval: F) -> Result<DseReport>
where
    F: FnMut(&Candidate) -> Result<CandidateMetrics>,
{
    space.validate()?;
    weights.validate()?;
    match mode {
        Mode::Exhaustive => {
            let evaluated = space
                .candidates()
                .into_iter()
                .map(|c| eval(&c).map(|m| (c, m)))
                .collect::<Result<Vec<_>>>()?;
            rank(evaluated, weights)
        }
        Mode::CoordinateDescent => {
            let dims = [space.placements.len(), space.frequencies.len(), space.ro_counts.len()];
            let at = |ix: [usize; 3]| Candidate {
                placement: space.placements[ix[0]],
                f_ref: space.frequencies[ix[1]],
                m: space.ro_counts[ix[2]],
            };
            let mut seen: BTreeMap<[usize; 3], CandidateMetrics> = BTreeMap::new();
            let mut current = [0usize; 3];
            loop {
                let before = current;
                for axis in 0..3 {
                    for v in 0..dims[axis] {
                        let mut ix = current;
                        ix[axis] = v;
                        if let alloc::collections::btree_map::Entry::Vacant(e) = seen.entry(ix) {
                            e.insert(eval(&at(ix))?);
                        }
                    }
                    let report = rank(seen.iter().map(|(ix, m)| (at(*ix), *m)).collect(), weights)?;
                    // best point on this axis through the current point
                    let best = report
                        .ranked
                        .iter()
                        .find_map(|r| {
                            (0..dims[axis]).find_map(|v| {
                                let mut ix = current;
                                ix[axis] = v;
                                (at(ix) == r.candidate).then_some(ix)
                            })
                        })
                        .unwrap_or(current);
                    current = best;
                }
                if current == before {
                    break;
                }
            }
            rank(seen.iter().map(|(ix, m)| (at(*ix), *m)).collect(), weights)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn metrics(err: f64, ff: u64, power: f64) -> CandidateMetrics {
        CandidateMetrics {
            avg_bit_errors: err,
            traces_to_extract: 1.0,
            ff_count: ff,
            avg_power: power,
        }
    }

    fn cand(placement: Placement, m: u32) -> Candidate {
        Candidate {
            placement,
            f_ref: 10e6,
            m,
        }
    }

    #[test]
    fn cost_examples() {
        let w = Weights::equal();
        let zero = Normalized {
            bit_errors: 0.0,
            ff: 0.0,
            power: 0.0,
        };
        assert_eq!(cost(&zero, &w), 0.0);
        let a = Normalized {
            bit_errors: 1.0,
            ..zero
        };
        let b = Normalized {
            bit_errors: 0.0,
            ff: 1.0,
            power: 1.0,
        };
        assert!((cost(&a, &w) - 1.0 / 3.0).abs() < 1e-15);
        assert!((cost(&b, &w) - 2.0 / 3.0).abs() < 1e-15);
        let acc_only = Weights {
            accuracy: 1.0,
            area: 0.0,
            power: 0.0,
        };
        assert_eq!(cost(&b, &acc_only), 0.0);
        assert!(Weights { accuracy: 0.0, area: 0.0, power: 0.0 }.validate().is_err());
    }

    #[test]
    fn ties_go_to_fewer_flip_flops() {
        let r = rank(
            vec![
                (cand(Placement::Close2, 64), metrics(1.0, 1040, 0.1)),
                (cand(Placement::Close2, 32), metrics(1.0, 528, 0.1)),
            ],
            &Weights {
                accuracy: 1.0,
                area: 0.0,
                power: 0.0,
            },
        )
        .unwrap();
        assert_eq!(r.winner().metrics.ff_count, 528);
        assert_eq!(r.ranked[0].cost, r.ranked[1].cost);
    }

    #[test]
    fn single_candidate_is_degenerate_winner() {
        let r = rank(vec![(cand(Placement::Far, 16), metrics(3.0, 272, 0.02))], &Weights::default()).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.winner().cost, 0.0);
    }

    #[test]
    fn exhaustive_visits_the_cross_product() {
        let space = DseSpace::default();
        let mut calls = 0;
        let r = explore(&space, &Weights::default(), Mode::Exhaustive, |c| {
            calls += 1;
            Ok(metrics(100.0 / c.m as f64, c.m as u64 * 16 + 16, c.f_ref * 1e-9))
        })
        .unwrap();
        assert_eq!(calls, 18);
        assert_eq!(r.ranked.len(), 18);
        let w = r.winner().cost;
        assert!(r.ranked.iter().all(|x| x.cost >= w));
    }

    #[test]
    fn coordinate_descent_finds_separable_optimum() {
        let space = DseSpace::default();
        // errors fall with m and closeness, overhead rises with m and f
        let f = |c: &Candidate| {
            let place = match c.placement {
                Placement::Far => 300.0,
                Placement::Close1 => 120.0,
                Placement::Close2 => 0.0,
            };
            let m_err = match c.m {
                16 => 200.0,
                32 => 20.0,
                _ => 10.0,
            };
            Ok(metrics(place + m_err + c.f_ref / 1e6, c.m as u64 * 16 + 16, c.m as f64 * 0.001 + c.f_ref * 1e-9))
        };
        let ex = explore(&space, &Weights::default(), Mode::Exhaustive, f).unwrap();
        let cd = explore(&space, &Weights::default(), Mode::CoordinateDescent, f).unwrap();
        assert_eq!(ex.winner().candidate, cd.winner().candidate);
        assert!(cd.ranked.len() < 18);
        assert_eq!(ex.winner().candidate, Candidate { placement: Placement::Close2, f_ref: 10e6, m: 32 });
    }
}
