//! Leakage and cost metrics: Welch t-tests and TVLA, consecutive-trace
//! correlation, n-th order success rate and area/power overhead.

use alloc::string::String;
use alloc::vec::Vec;

use crate::attacker::KeyGuess;
use crate::error::{invalid, Error, Result};

/// The conventional TVLA bound on |t|.
pub const TVLA_THRESHOLD: f64 = 4.5;

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's t statistic with `n - 1` sample variances.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<f64> {
    for g in [a, b] {
        if g.len() < 2 {
            return Err(Error::NotEnoughData { needed: 2, got: g.len() });
        }
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let se2 = va / a.len() as f64 + vb / b.len() as f64;
    if !(se2 > 0.0) || !se2.is_finite() {
        return Err(Error::Undefined("zero pooled variance"));
    }
    Ok((ma - mb) / libm::sqrt(se2))
}

/// Welch-Satterthwaite degrees of freedom.
pub fn welch_df(va: f64, na: f64, vb: f64, nb: f64) -> f64 {
    let (qa, qb) = (va / na, vb / nb);
    let num = (qa + qb) * (qa + qb);
    let den = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `df`
/// degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    if df.is_infinite() {
        return libm::erfc(t.abs() / core::f64::consts::SQRT_2);
    }
    let x = df / (df + t * t);
    reg_incomplete_beta(df / 2.0, 0.5, x)
}

/// Two-sided normal tail beyond `z`.
pub fn normal_two_sided(z: f64) -> f64 {
    libm::erfc(z.abs() / core::f64::consts::SQRT_2)
}

/// Regularized incomplete beta `I_x(a, b)` by continued fraction.
fn reg_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

/// Whether `t` with `df` degrees of freedom is at least as extreme as
/// `threshold` would be under a normal reference.
///
/// With few traces per group a raw `|t| > 4.5` test fires by chance on some
/// of many points; comparing tail probabilities keeps the false-alarm rate
/// at the level the threshold intends.
pub fn exceeds(t: f64, df: f64, threshold: f64) -> bool {
    t.is_finite() && student_t_two_sided(t, df) < normal_two_sided(threshold)
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn var(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

/// Streaming per-point two-group statistics.
#[derive(Debug, Clone)]
pub struct WelchAccumulator {
    a: Vec<Welford>,
    b: Vec<Welford>,
}

impl WelchAccumulator {
    pub fn new(points: usize) -> Self {
        Self {
            a: alloc::vec![Welford::default(); points],
            b: alloc::vec![Welford::default(); points],
        }
    }

    pub fn points(&self) -> usize {
        self.a.len()
    }

    /// Add one observation to each group; shorter vectors only update their
    /// leading points.
    pub fn push(&mut self, a: &[f64], b: &[f64]) {
        for (w, &x) in self.a.iter_mut().zip(a) {
            w.push(x);
        }
        for (w, &x) in self.b.iter_mut().zip(b) {
            w.push(x);
        }
    }

    /// `(t, df)` at point `i`, or `None` when undefined there.
    pub fn t_at(&self, i: usize) -> Option<(f64, f64)> {
        let (a, b) = (&self.a[i], &self.b[i]);
        if a.n < 2 || b.n < 2 {
            return None;
        }
        let (va, vb) = (a.var(), b.var());
        let (na, nb) = (a.n as f64, b.n as f64);
        let se2 = va / na + vb / nb;
        if !(se2 > 0.0) {
            return None;
        }
        Some(((a.mean - b.mean) / libm::sqrt(se2), welch_df(va, na, vb, nb)))
    }

    pub fn t_values(&self) -> Vec<f64> {
        (0..self.points()).map(|i| self.t_at(i).map_or(0.0, |(t, _)| t)).collect()
    }

    pub fn max_abs_t(&self) -> f64 {
        self.t_values().iter().fold(0.0, |m, t| m.max(t.abs()))
    }

    pub fn leaks(&self, threshold: f64) -> bool {
        (0..self.points()).any(|i| self.t_at(i).is_some_and(|(t, df)| exceeds(t, df, threshold)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvlaReport {
    /// Per-point t after the last pair evaluated.
    pub t_values: Vec<f64>,
    /// `(pairs, max |t|)` after every pair.
    pub curve: Vec<(usize, f64)>,
    /// Total traces (both groups) when leakage was first detected.
    pub traces_to_cross: Option<usize>,
    pub threshold: f64,
}

/// Interleaved fixed-versus-random acquisition. `pair(i)` returns the
/// leakage points of the i-th fixed and i-th random trace; the test is
/// re-evaluated after each pair and stops at the first detection.
pub fn tvla_traces_to_leak<F>(points: usize, max_pairs: usize, mut pair: F) -> Result<TvlaReport>
where
    F: FnMut(usize) -> Result<(Vec<f64>, Vec<f64>)>,
{
    if max_pairs < 2 {
        return Err(invalid("tvla.n_max", "at least two pairs are needed"));
    }
    let mut acc = WelchAccumulator::new(points);
    let mut curve = Vec::with_capacity(max_pairs);
    let mut crossed = None;
    for i in 0..max_pairs {
        let (a, b) = pair(i)?;
        acc.push(&a, &b);
        curve.push((i + 1, acc.max_abs_t()));
        if acc.leaks(TVLA_THRESHOLD) {
            crossed = Some(2 * (i + 1));
            break;
        }
    }
    Ok(TvlaReport {
        t_values: acc.t_values(),
        curve,
        traces_to_cross: crossed,
        threshold: TVLA_THRESHOLD,
    })
}

/// Pearson correlation, `None` if either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::TraceLengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::NotEnoughData { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// `corr(trace n, trace n+1)`; `None` marks a pair with a constant trace.
    pub coefficients: Vec<Option<f64>>,
}

impl CorrelationReport {
    pub fn mean(&self) -> Option<f64> {
        let defined: Vec<f64> = self.coefficients.iter().flatten().copied().collect();
        if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        }
    }
}

pub fn consecutive_correlation<T: AsRef<[f64]>>(traces: &[T]) -> Result<CorrelationReport> {
    if traces.len() < 2 {
        return Err(Error::NotEnoughData {
            needed: 2,
            got: traces.len(),
        });
    }
    let coefficients = traces
        .windows(2)
        .map(|w| pearson(w[0].as_ref(), w[1].as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationReport { coefficients })
}

/// Whether `truth` is among the first `order` candidates, where candidate
/// `j` flips the `j - 1` lowest-margin bits of the guess.
pub fn ranked_within(guess: &KeyGuess, truth: &[bool], order: usize) -> bool {
    if order == 0 || guess.bits.len() != truth.len() {
        return false;
    }
    let wrong: Vec<usize> = (0..truth.len()).filter(|&i| guess.bits[i] != truth[i]).collect();
    if wrong.len() >= order {
        return false;
    }
    let mut by_margin: Vec<usize> = (0..truth.len()).collect();
    by_margin.sort_by(|&a, &b| guess.margins[a].total_cmp(&guess.margins[b]).then(a.cmp(&b)));
    let mut lowest: Vec<usize> = by_margin[..wrong.len()].to_vec();
    lowest.sort_unstable();
    lowest == wrong
}

/// Fraction of trials whose true key ranked within `order`.
pub fn success_rate(guesses: &[(KeyGuess, Vec<bool>)], order: usize) -> f64 {
    if guesses.is_empty() {
        return 0.0;
    }
    let ok = guesses.iter().filter(|(g, t)| ranked_within(g, t, order)).count();
    ok as f64 / guesses.len() as f64
}

/// Hardware blocks a design variant adds, with their flip-flop counts.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// RO counter chains plus the reference counter.
    Monitor { m: u32, n_ff: u32, ref_width: u32 },
    /// Noise RO sets with per-set enable logic and the controller register.
    ShieldBank { sets: u32, control_ffs_per_set: u32, register_width: u32 },
    /// Free-running RO bank with a T-FF chain per RO and an LFSR.
    RandomNoise { n_ros: u32, tff_per_ro: u32, lfsr_width: u32 },
}

impl Component {
    pub const KINDS: [&'static str; 3] = ["monitor", "shield_bank", "random_noise"];

    pub fn ff_count(&self) -> u64 {
        match *self {
            Component::Monitor { m, n_ff, ref_width } => m as u64 * n_ff as u64 + ref_width as u64,
            Component::ShieldBank {
                sets,
                control_ffs_per_set,
                register_width,
            } => sets as u64 * control_ffs_per_set as u64 + register_width as u64,
            Component::RandomNoise {
                n_ros,
                tff_per_ro,
                lfsr_width,
            } => n_ros as u64 * tff_per_ro as u64 + lfsr_width as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub components: Vec<Component>,
    /// Time-averaged simulated defense power, watts.
    pub simulated_power: f64,
    /// Fixed power of the added blocks, watts.
    pub static_power: f64,
}

impl Variant {
    pub fn defense_ff(&self) -> u64 {
        self.components.iter().map(Component::ff_count).sum()
    }

    pub fn defense_power(&self) -> f64 {
        self.simulated_power + self.static_power
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadRow {
    pub name: String,
    pub ff: u64,
    pub power: f64,
    /// Whole design (base plus defense) relative to the unprotected design.
    pub ff_vs_unprotected: f64,
    pub power_vs_unprotected: f64,
    /// Defense blocks relative to the random-noise defense blocks.
    pub ff_vs_random: Option<f64>,
    pub power_vs_random: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub base_ff: u64,
    pub base_power: f64,
    pub rows: Vec<OverheadRow>,
}

/// `base_*` describe the unprotected design; `random` names the variant the
/// other defenses are compared with.
pub fn overhead_report(base_ff: u64, base_power: f64, variants: &[Variant], random: Option<&str>) -> Result<OverheadReport> {
    if base_ff == 0 || !(base_power > 0.0) {
        return Err(invalid("overhead.base", "base design needs flip-flops and power"));
    }
    let reference = match random {
        Some(name) => Some(
            variants
                .iter()
                .find(|v| v.name == name)
                .ok_or_else(|| invalid("overhead.random", "reference variant not listed"))?,
        ),
        None => None,
    };
    let ratio = |a: f64, b: f64| if b > 0.0 { Some(a / b) } else { None };
    let rows = variants
        .iter()
        .map(|v| {
            let (ff, power) = (v.defense_ff(), v.defense_power());
            OverheadRow {
                name: v.name.clone(),
                ff,
                power,
                ff_vs_unprotected: (base_ff + ff) as f64 / base_ff as f64,
                power_vs_unprotected: (base_power + power) / base_power,
                ff_vs_random: reference.and_then(|r| ratio(ff as f64, r.defense_ff() as f64)),
                power_vs_random: reference.and_then(|r| ratio(power, r.defense_power())),
            }
        })
        .collect();
    Ok(OverheadReport {
        base_ff,
        base_power,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacker::Threshold;
    use alloc::vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn welch_examples() {
        assert_eq!(welch_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        // means 0.5 and 1.5, both variances 1/3: t = -1 / sqrt(1/6)
        let t = welch_t(&[0.0, 1.0, 0.0, 1.0], &[1.0, 2.0, 1.0, 2.0]).unwrap();
        assert_relative_eq!(t, -2.449489742783178, epsilon = 1e-9);
        assert_relative_eq!(t, -(6.0f64).sqrt(), epsilon = 1e-12);
        // unequal sizes: means 2 and 5, variances 1 and 2.5
        let t = welch_t(&[1.0, 2.0, 3.0], &[3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        assert_relative_eq!(t, -3.0 / (1.0f64 / 3.0 + 0.5).sqrt(), epsilon = 1e-9);
        assert_eq!(welch_t(&[0.0, 0.0], &[0.0, 0.0]), Err(Error::Undefined("zero pooled variance")));
        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn t_tail_matches_reference_distribution() {
        for &df in &[1.0, 2.5, 7.0, 30.0, 200.0] {
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            for &t in &[0.1, 1.0, 2.0, 4.5, 8.0, 20.0] {
                let want = 2.0 * (1.0 - dist.cdf(t));
                let got = student_t_two_sided(t, df);
                if want > 1e-13 {
                    assert_relative_eq!(got, want, max_relative = 1e-6);
                }
            }
        }
        assert_relative_eq!(normal_two_sided(4.5), 6.795346249e-6, max_relative = 1e-6);
        assert!(exceeds(4.6, f64::INFINITY, 4.5));
        assert!(!exceeds(4.6, 10.0, 4.5));
    }

    /// Groups with alternating +/-1 deviations have exactly known variances,
    /// so the first crossing follows from the t formula.
    #[test]
    fn tvla_crosses_where_formula_predicts() {
        let gap = 6.0;
        let dev = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        let report = tvla_traces_to_leak(1, 400, |i| Ok((vec![gap + dev(i)], vec![dev(i + 1)]))).unwrap();
        let oracle = (2..400usize)
            .find(|&n| {
                let sd2 = (n - n % 2) as f64 / (n as f64 - 1.0);
                let mean_a = gap + if n % 2 == 1 { 1.0 / n as f64 } else { 0.0 };
                let mean_b = if n % 2 == 1 { -1.0 / n as f64 } else { 0.0 };
                let t = (mean_a - mean_b) / (2.0 * sd2 / n as f64).sqrt();
                let df = 2.0 * (n as f64 - 1.0);
                let p = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t));
                p < normal_two_sided(4.5)
            })
            .unwrap();
        let pairs = report.traces_to_cross.unwrap() / 2;
        assert!(pairs.abs_diff(oracle) <= 1, "{pairs} vs {oracle}");
        assert!(report.curve.last().unwrap().1 > 4.5);
    }

    #[test]
    fn tvla_without_gap_never_crosses() {
        let dev = |i: usize| if i.is_multiple_of(3) { 1.0 } else { -0.5 };
        let r = tvla_traces_to_leak(3, 60, |i| Ok((vec![dev(i); 3], vec![dev(i + 1); 3]))).unwrap();
        assert_eq!(r.traces_to_cross, None);
        assert_eq!(r.curve.len(), 60);
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert_relative_eq!(pearson(&x, &[1.0, 2.0, 4.0]).unwrap().unwrap(), 0.9819805060619657, epsilon = 1e-12);
        assert_eq!(pearson(&x, &x).unwrap(), Some(1.0));
        assert_eq!(pearson(&x, &[-1.0, -2.0, -3.0]).unwrap(), Some(-1.0));
        assert_eq!(pearson(&x, &[5.0; 3]).unwrap(), None);
        let r = consecutive_correlation(&[x.to_vec(), x.to_vec(), vec![3.0, 2.0, 1.0]]).unwrap();
        assert_eq!(r.coefficients, vec![Some(1.0), Some(-1.0)]);
        assert_eq!(r.mean(), Some(0.0));
    }

    fn guess(bits: Vec<bool>, margins: Vec<f64>) -> KeyGuess {
        KeyGuess {
            bits,
            margins,
            threshold: Threshold {
                value: 0.0,
                degenerate: false,
            },
        }
    }

    #[test]
    fn ranking_examples() {
        let truth = vec![true, false, true, true];
        let exact = guess(truth.clone(), vec![3.0, 2.0, 4.0, 5.0]);
        assert!(ranked_within(&exact, &truth, 1));
        // bit 1 wrong and it has the smallest margin
        let low = guess(vec![true, true, true, true], vec![3.0, 0.5, 4.0, 5.0]);
        assert!(!ranked_within(&low, &truth, 1));
        assert!(ranked_within(&low, &truth, 2));
        // wrong bit with a high margin is never reached early
        let high = guess(vec![true, false, true, false], vec![3.0, 0.5, 4.0, 5.0]);
        assert!(!ranked_within(&high, &truth, 1));
        assert!(!ranked_within(&high, &truth, 4));
        assert!(!ranked_within(&high, &truth, 5));
        assert_eq!(success_rate(&[(exact, truth.clone()), (low, truth)], 1), 0.5);
    }

    #[test]
    fn overhead_examples() {
        let monitor = Component::Monitor {
            m: 32,
            n_ff: 16,
            ref_width: 16,
        };
        assert_eq!(monitor.ff_count(), 528);
        let variants = vec![
            Variant {
                name: "unprotected".into(),
                components: vec![],
                simulated_power: 0.0,
                static_power: 0.0,
            },
            Variant {
                name: "random".into(),
                components: vec![Component::RandomNoise {
                    n_ros: 48,
                    tff_per_ro: 15,
                    lfsr_width: 16,
                }],
                simulated_power: 0.5,
                static_power: 0.0,
            },
            Variant {
                name: "shield".into(),
                components: vec![
                    monitor,
                    Component::ShieldBank {
                        sets: 4,
                        control_ffs_per_set: 2,
                        register_width: 8,
                    },
                ],
                simulated_power: 0.1,
                static_power: 0.02,
            },
        ];
        let r = overhead_report(1800, 0.2, &variants, Some("random")).unwrap();
        assert_eq!((r.rows[0].ff, r.rows[0].power), (0, 0.0));
        assert_eq!(r.rows[0].ff_vs_unprotected, 1.0);
        assert_eq!(r.rows[1].ff, 736);
        assert_eq!(r.rows[2].ff, 544);
        for row in &r.rows {
            assert_eq!(row.ff_vs_unprotected, (1800 + row.ff) as f64 / 1800.0);
            assert_eq!(row.power_vs_unprotected, (0.2 + row.power) / 0.2);
            assert_eq!(row.ff_vs_random, Some(row.ff as f64 / 736.0));
            assert_eq!(row.power_vs_random, Some(row.power / 0.5));
        }
        assert!(overhead_report(1800, 0.2, &variants, Some("nope")).is_err());
    }

    proptest! {
        #[test]
        fn welch_antisymmetric_and_scale_free(
            a in proptest::collection::vec(-100.0f64..100.0, 2..20),
            b in proptest::collection::vec(-100.0f64..100.0, 2..20),
            c in 0.01f64..100.0,
        ) {
            if let (Ok(t), Ok(u)) = (welch_t(&a, &b), welch_t(&b, &a)) {
                prop_assert!((t + u).abs() <= 1e-9 * t.abs().max(1.0));
                let sa: Vec<f64> = a.iter().map(|x| x * c).collect();
                let sb: Vec<f64> = b.iter().map(|x| x * c).collect();
                let ts = welch_t(&sa, &sb).unwrap();
                prop_assert!((ts - t).abs() <= 1e-6 * t.abs().max(1.0));
            }
        }

        #[test]
        fn correlation_bounded(x in proptest::collection::vec(-1e3f64..1e3, 3..30), y in proptest::collection::vec(-1e3f64..1e3, 30)) {
            let y = &y[..x.len()];
            if let Some(r) = pearson(&x, y).unwrap() {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
            if let Some(r) = pearson(&x, &x).unwrap() {
                prop_assert_eq!(r, 1.0);
            }
        }

        #[test]
        fn streaming_t_matches_batch(a in proptest::collection::vec(-50.0f64..50.0, 2..30), b in proptest::collection::vec(-50.0f64..50.0, 30)) {
            let b = &b[..a.len()];
            let mut acc = WelchAccumulator::new(1);
            for (x, y) in a.iter().zip(b) {
                acc.push(&[*x], &[*y]);
            }
            if let (Ok(t), Some((s, _))) = (welch_t(&a, b), acc.t_at(0)) {
                prop_assert!((t - s).abs() <= 1e-6 * t.abs().max(1.0));
            }
        }
    }
}
