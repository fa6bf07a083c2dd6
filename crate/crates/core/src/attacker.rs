//! Simple power analysis on monitor traces.
//!
//! Traces are averaged sample by sample, cut into one slot per key bit, and
//! each slot mean is compared with a threshold found by two-means clustering.
//! A multiply lowers the count, so a slot below the threshold reads as a 1.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sim::Windows;
use crate::victim::PowerSchedule;

/// Sample-index range `[start, end)` of each key bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotTiming {
    pub slots: Vec<(usize, usize)>,
}

impl SlotTiming {
    /// A sample belongs to the bit whose tick range holds the midpoint of
    /// its window.
    pub fn from_schedule(schedule: &PowerSchedule, windows: Windows, n_samples: usize) -> Self {
        let mid = |j: usize| (windows.boundary(j as u64) + windows.boundary(j as u64 + 1)) / 2.0;
        let mut slots = Vec::with_capacity(schedule.n_bits());
        let mut j = 0usize;
        for (start, end) in schedule.bit_slots() {
            while j < n_samples && mid(j) < start as f64 {
                j += 1;
            }
            let first = j;
            while j < n_samples && mid(j) < end as f64 {
                j += 1;
            }
            slots.push((first, j));
        }
        Self { slots }
    }

    pub fn n_bits(&self) -> usize {
        self.slots.len()
    }
}

pub fn slot_means(samples: &[f64], timing: &SlotTiming) -> Result<Vec<f64>> {
    timing
        .slots
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            if b <= a || b > samples.len() {
                return Err(Error::EmptySlot(i));
            }
            Ok(samples[a..b].iter().sum::<f64>() / (b - a) as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    /// All means were equal; no split exists.
    pub degenerate: bool,
}

/// Two-means split of the slot means, started from the extremes and
/// iterated until the assignment is stable; the threshold is the midpoint of
/// the two centroids.
pub fn adaptive_threshold(means: &[f64]) -> Result<Threshold> {
    if means.len() < 2 {
        return Err(Error::NotEnoughData {
            needed: 2,
            got: means.len(),
        });
    }
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(Threshold {
            value: lo,
            degenerate: true,
        });
    }
    let (mut c_lo, mut c_hi) = (lo, hi);
    let mut theta = (c_lo + c_hi) / 2.0;
    for _ in 0..1000 {
        let (mut s0, mut n0, mut s1, mut n1) = (0.0, 0usize, 0.0, 0usize);
        for &m in means {
            if m < theta {
                s0 += m;
                n0 += 1;
            } else {
                s1 += m;
                n1 += 1;
            }
        }
        if n0 > 0 {
            c_lo = s0 / n0 as f64;
        }
        if n1 > 0 {
            c_hi = s1 / n1 as f64;
        }
        let next = (c_lo + c_hi) / 2.0;
        if next == theta {
            break;
        }
        theta = next;
    }
    Ok(Threshold {
        value: theta,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyGuess {
    pub bits: Vec<bool>,
    /// Distance of each slot mean from the threshold, in counts.
    pub margins: Vec<f64>,
    pub threshold: Threshold,
}

/// Classify slot means: below the threshold is a 1. A degenerate threshold
/// yields all zeros.
pub fn classify(means: &[f64]) -> Result<KeyGuess> {
    let threshold = adaptive_threshold(means)?;
    let bits = means
        .iter()
        .map(|&m| !threshold.degenerate && m < threshold.value)
        .collect();
    let margins = means.iter().map(|&m| (m - threshold.value).abs()).collect();
    Ok(KeyGuess {
        bits,
        margins,
        threshold,
    })
}

/// Running sample-wise sum of equal-length traces. Integer sums keep the
/// average independent of trace order.
#[derive(Debug, Clone, Default)]
pub struct TraceAccumulator {
    sums: Vec<u64>,
    count: usize,
}

impl TraceAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, trace: &[u64]) -> Result<()> {
        if self.count == 0 {
            self.sums = trace.to_vec();
        } else {
            if trace.len() != self.sums.len() {
                return Err(Error::TraceLengthMismatch {
                    expected: self.sums.len(),
                    found: trace.len(),
                });
            }
            for (s, &x) in self.sums.iter_mut().zip(trace) {
                *s += x;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sums.iter().map(|&s| s as f64 / n).collect()
    }
}

pub fn average_traces<T: AsRef<[u64]>>(traces: &[T]) -> Result<Vec<f64>> {
    if traces.is_empty() {
        return Err(Error::NotEnoughData { needed: 1, got: 0 });
    }
    let mut acc = TraceAccumulator::new();
    for t in traces {
        acc.add(t.as_ref())?;
    }
    Ok(acc.mean())
}

pub fn extract_key<T: AsRef<[u64]>>(traces: &[T], timing: &SlotTiming) -> Result<KeyGuess> {
    let avg = average_traces(traces)?;
    classify(&slot_means(&avg, timing)?)
}

pub fn hamming(a: &[bool], b: &[bool]) -> usize {
    let common = a.iter().zip(b).filter(|(x, y)| x != y).count();
    common + a.len().abs_diff(b.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub traces_used: usize,
    pub bit_errors: usize,
    pub success: bool,
    pub guess: KeyGuess,
}

impl AttackResult {
    pub fn score(guess: KeyGuess, truth: &[bool], traces_used: usize, tolerance: usize) -> Self {
        let bit_errors = hamming(&guess.bits, truth);
        Self {
            traces_used,
            bit_errors,
            success: bit_errors <= tolerance,
            guess,
        }
    }
}

/// Outcome of one attack-effort trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialEffort {
    /// Smallest trace count that recovered the key, if any within `n_max`.
    pub traces: Option<usize>,
    /// Bit errors with the last trace count tried.
    pub final_errors: usize,
}

/// Add traces from `next_trace` one at a time until the averaged guess has at
/// most `tolerance` bit errors or `n_max` traces were used.
pub fn effort_trial<F>(
    truth: &[bool],
    timing: &SlotTiming,
    n_max: usize,
    tolerance: usize,
    mut next_trace: F,
) -> Result<TrialEffort>
where
    F: FnMut(usize) -> Result<Vec<u64>>,
{
    let mut acc = TraceAccumulator::new();
    let mut errors = truth.len();
    for n in 1..=n_max {
        acc.add(&next_trace(n - 1)?)?;
        let guess = classify(&slot_means(&acc.mean(), timing)?)?;
        errors = hamming(&guess.bits, truth);
        if errors <= tolerance {
            return Ok(TrialEffort {
                traces: Some(n),
                final_errors: errors,
            });
        }
    }
    Ok(TrialEffort {
        traces: None,
        final_errors: errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffortSummary {
    pub trials: Vec<TrialEffort>,
    pub n_max: usize,
}

impl EffortSummary {
    /// Mean traces over all trials; saturated trials count as `n_max`, so
    /// the mean is a lower bound whenever `failures() > 0`.
    pub fn mean(&self) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        let total: usize = self.trials.iter().map(|t| t.traces.unwrap_or(self.n_max)).sum();
        total as f64 / self.trials.len() as f64
    }

    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| t.traces.is_none()).count()
    }

    /// Fraction of trials that succeeded within `n` traces.
    pub fn fraction_within(&self, n: usize) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        let ok = self.trials.iter().filter(|t| t.traces.is_some_and(|k| k <= n)).count();
        ok as f64 / self.trials.len() as f64
    }
}

/// Sequential attack effort: `trace(trial, index)` supplies the traces.
pub fn attack_effort<F>(
    truth: &[bool],
    timing: &SlotTiming,
    trials: usize,
    n_max: usize,
    tolerance: usize,
    mut trace: F,
) -> Result<EffortSummary>
where
    F: FnMut(usize, usize) -> Result<Vec<u64>>,
{
    let results = (0..trials)
        .map(|t| effort_trial(truth, timing, n_max, tolerance, |i| trace(t, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EffortSummary {
        trials: results,
        n_max,
    })
}

/// Synthesize a noise-free trace: `hi` counts everywhere except `lo` over the
/// first `lo_len` samples of each 1-bit slot.
pub fn synthetic_trace(bits: &[bool], slot_len: usize, lo_len: usize, hi: u64, lo: u64) -> (Vec<u64>, SlotTiming) {
    let mut samples = vec![];
    let mut slots = vec![];
    for &b in bits {
        let start = samples.len();
        let len = if b { slot_len + lo_len } else { slot_len };
        for k in 0..len {
            samples.push(if b && k < lo_len { lo } else { hi });
        }
        slots.push((start, samples.len()));
    }
    (samples, SlotTiming { slots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::victim::{build_power_schedule, VictimPowerParams};
    use proptest::prelude::*;

    #[test]
    fn slot_mean_examples() {
        let t = SlotTiming { slots: vec![(0, 4)] };
        assert_eq!(slot_means(&[10.0, 20.0, 10.0, 20.0], &t).unwrap(), vec![15.0]);
        let t = SlotTiming {
            slots: vec![(0, 2), (2, 5)],
        };
        assert_eq!(slot_means(&[7.0; 5], &t).unwrap(), vec![7.0, 7.0]);
        let bad = SlotTiming {
            slots: vec![(0, 2), (2, 2)],
        };
        assert_eq!(slot_means(&[7.0; 5], &bad), Err(Error::EmptySlot(1)));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(adaptive_threshold(&[10.0, 10.0, 20.0, 20.0]).unwrap().value, 15.0);
        assert_eq!(adaptive_threshold(&[0.0, 100.0]).unwrap().value, 50.0);
        assert!(adaptive_threshold(&[7.0; 5]).unwrap().degenerate);
        assert!(adaptive_threshold(&[7.0]).is_err());
        // unbalanced clusters pull the midpoint toward the lower group
        let t = adaptive_threshold(&[0.0, 1.0, 2.0, 10.0]).unwrap().value;
        assert_eq!(t, 5.5);
    }

    #[test]
    fn extracts_clean_synthetic_key() {
        let bits = vec![true, false, true, true, false, false, true, false, true, false];
        let (trace, timing) = synthetic_trace(&bits, 5, 5, 120, 100);
        let g = extract_key(&[trace], &timing).unwrap();
        assert_eq!(g.bits, bits);
        assert!(g.margins.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn all_zero_key_on_flat_trace() {
        let bits = vec![false; 6];
        let (trace, timing) = synthetic_trace(&bits, 5, 5, 120, 100);
        let g = extract_key(&[trace], &timing).unwrap();
        assert!(g.threshold.degenerate);
        assert_eq!(g.bits, bits);
    }

    #[test]
    fn inverted_polarity_flips_every_bit() {
        let bits = vec![true, false, false, true, true, false];
        let (trace, timing) = synthetic_trace(&bits, 5, 5, 100, 140);
        let g = extract_key(&[trace], &timing).unwrap();
        assert_eq!(hamming(&g.bits, &bits), bits.len());
    }

    #[test]
    fn timing_from_schedule() {
        let p = VictimPowerParams {
            t_square: 4,
            t_mult: 4,
            ..VictimPowerParams::default()
        };
        let s = build_power_schedule(&[true, false, true], &p);
        let t = SlotTiming::from_schedule(&s, Windows::new(2.0), 10);
        assert_eq!(t.slots, vec![(0, 4), (4, 6), (6, 10)]);
        // windows wider than a slot leave it empty
        let t = SlotTiming::from_schedule(&s, Windows::new(8.0), 3);
        assert!(t.slots.iter().any(|&(a, b)| a == b));
    }

    #[test]
    fn effort_on_clean_traces_is_one() {
        let bits = vec![true, false, true, false, true, true];
        let (trace, timing) = synthetic_trace(&bits, 4, 4, 50, 40);
        let s = attack_effort(&bits, &timing, 3, 5, 0, |_, _| Ok(trace.clone())).unwrap();
        assert_eq!(s.mean(), 1.0);
        assert_eq!(s.failures(), 0);
        let s = attack_effort(&bits, &timing, 2, 1, 0, |_, _| Ok(vec![45; trace.len()])).unwrap();
        assert_eq!(s.failures(), 2);
        assert_eq!(s.mean(), 1.0);
        assert_eq!(s.fraction_within(1), 0.0);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let mut acc = TraceAccumulator::new();
        acc.add(&[1, 2, 3]).unwrap();
        assert!(acc.add(&[1, 2]).is_err());
    }

    proptest! {
        #[test]
        fn averaging_is_order_free(traces in proptest::collection::vec(proptest::collection::vec(0u64..1000, 12), 1..8), rot in 0usize..8) {
            let mut shuffled = traces.clone();
            let r = rot % shuffled.len();
            shuffled.rotate_left(r);
            shuffled.reverse();
            let timing = SlotTiming { slots: vec![(0, 3), (3, 6), (6, 9), (9, 12)] };
            prop_assert_eq!(extract_key(&traces, &timing).unwrap(), extract_key(&shuffled, &timing).unwrap());
        }

        #[test]
        fn mean_of_average_equals_average_of_means(traces in proptest::collection::vec(proptest::collection::vec(0u64..1000, 9), 1..6)) {
            let timing = SlotTiming { slots: vec![(0, 2), (2, 7), (7, 9)] };
            let avg = average_traces(&traces).unwrap();
            let direct = slot_means(&avg, &timing).unwrap();
            let per: Vec<Vec<f64>> = traces.iter().map(|t| {
                let f: Vec<f64> = t.iter().map(|&x| x as f64).collect();
                slot_means(&f, &timing).unwrap()
            }).collect();
            for i in 0..3 {
                let m = per.iter().map(|p| p[i]).sum::<f64>() / per.len() as f64;
                prop_assert!((m - direct[i]).abs() < 1e-9);
            }
        }

        #[test]
        fn margins_nonnegative(means in proptest::collection::vec(-50.0f64..50.0, 2..40)) {
            let g = classify(&means).unwrap();
            prop_assert!(g.margins.iter().all(|&m| m >= 0.0));
            prop_assert_eq!(g.bits.len(), means.len());
        }
    }
}
