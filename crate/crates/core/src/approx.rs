//! Sets of energies approximated by eigenvalues: truncated limsup sets, the
//! neighbourhoods of dyadic block spectra, the covering function, and the
//! zero/full measure experiment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::interval::{Interval, IntervalUnion};
use crate::operator::{eigenvalues_in, eigenvectors_for, TridiagonalBlock};
use crate::potential::PotentialSource;
use crate::table::Table;

/// Closed-form or tabulated sequence `alpha_k`, `k >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceKind {
    /// `exp(-2 gamma_bar k)`.
    Exponential { gamma_bar: f64 },
    /// `c k^-p`.
    Power { c: f64, p: f64 },
    /// `c / k`.
    Harmonic { c: f64 },
    /// `values[k - 1]`; zero past the end of the table.
    Table { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxSequence {
    pub kind: SequenceKind,
    /// Terms are replaced by `min(alpha_k, 1/k)`.
    #[serde(default)]
    pub clamped: bool,
}

impl ApproxSequence {
    pub fn new(kind: SequenceKind) -> Result<Self> {
        let s = Self { kind, clamped: false };
        s.validate()?;
        Ok(s)
    }

    pub fn exponential(gamma_bar: f64) -> Result<Self> {
        Self::new(SequenceKind::Exponential { gamma_bar })
    }

    pub fn power(c: f64, p: f64) -> Result<Self> {
        Self::new(SequenceKind::Power { c, p })
    }

    pub fn harmonic(c: f64) -> Result<Self> {
        Self::new(SequenceKind::Harmonic { c })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        Self::new(SequenceKind::Table { values })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match &self.kind {
            SequenceKind::Exponential { gamma_bar } => *gamma_bar > 0.0,
            SequenceKind::Power { c, p } => *c > 0.0 && *p > 0.0,
            SequenceKind::Harmonic { c } => *c > 0.0,
            SequenceKind::Table { values } => {
                !values.is_empty()
                    && values.iter().all(|&x| x > 0.0 && x.is_finite())
                    && values.windows(2).all(|w| w[1] <= w[0])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "approximation sequence {:?} must be positive and non-increasing",
                self.kind
            )))
        }
    }

    /// `alpha_k` for `k >= 1`.
    pub fn term(&self, k: usize) -> f64 {
        let kf = k as f64;
        let raw = match &self.kind {
            SequenceKind::Exponential { gamma_bar } => (-2.0 * gamma_bar * kf).exp(),
            SequenceKind::Power { c, p } => c * kf.powf(-p),
            SequenceKind::Harmonic { c } => c / kf,
            SequenceKind::Table { values } => values.get(k - 1).copied().unwrap_or(0.0),
        };
        if self.clamped {
            raw.min(1.0 / kf)
        } else {
            raw
        }
    }

    /// `log alpha_k`, finite where `alpha_k` underflows.
    pub fn ln_term(&self, k: usize) -> f64 {
        let kf = k as f64;
        let raw = match &self.kind {
            SequenceKind::Exponential { gamma_bar } => -2.0 * gamma_bar * kf,
            SequenceKind::Power { c, p } => c.ln() - p * kf.ln(),
            SequenceKind::Harmonic { c } => c.ln() - kf.ln(),
            SequenceKind::Table { values } => values.get(k - 1).map_or(f64::NEG_INFINITY, |v| v.ln()),
        };
        if self.clamped {
            raw.min(-kf.ln())
        } else {
            raw
        }
    }

    /// Whether `sum alpha_k` converges, for closed forms.
    pub fn is_summable(&self) -> Option<bool> {
        match &self.kind {
            SequenceKind::Exponential { .. } => Some(true),
            SequenceKind::Power { p, .. } => Some(*p > 1.0),
            SequenceKind::Harmonic { .. } => Some(false),
            SequenceKind::Table { .. } => None,
        }
    }
}

/// `alpha_k -> min(alpha_k, 1/k)`.
pub fn clamp_sequence(alpha: &ApproxSequence) -> ApproxSequence {
    ApproxSequence {
        kind: alpha.kind.clone(),
        clamped: true,
    }
}

/// `(K, sum_{k <= K} f(k))` at increasing checkpoints, compensated summation.
pub fn partial_sums_of(f: impl Fn(usize) -> f64, checkpoints: &[usize]) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut k = 0;
    for &c in checkpoints {
        while k < c {
            k += 1;
            let y = f(k) - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        out.push((c, sum));
    }
    out
}

pub fn partial_sums(alpha: &ApproxSequence, checkpoints: &[usize]) -> Vec<(usize, f64)> {
    partial_sums_of(|k| alpha.term(k), checkpoints)
}

/// Union of `(c_i - w_i, c_i + w_i)` clipped to `clip`.
pub fn union_of_intervals(centers: &[f64], half_widths: &[f64], clip: Interval) -> Result<IntervalUnion> {
    if centers.len() != half_widths.len() {
        return Err(Error::invalid(format!(
            "{} centers but {} half-widths",
            centers.len(),
            half_widths.len()
        )));
    }
    if half_widths.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::invalid("half-widths must be positive"));
    }
    let pieces = centers.iter().zip(half_widths).map(|(&c, &w)| (c - w, c + w)).collect();
    Ok(IntervalUnion::new(pieces).clip(&clip))
}

/// `⋃_{K1 <= k <= K2} (E_k - alpha_k, E_k + alpha_k) ∩ I` over `(k, E_k)` points.
pub fn truncated_approx_set(
    points: &[(usize, f64)],
    alpha: &ApproxSequence,
    k1: usize,
    k2: usize,
    interval: Interval,
) -> Result<IntervalUnion> {
    if k1 == 0 || k1 > k2 {
        return Err(Error::invalid(format!("empty index range [{k1}, {k2}]")));
    }
    let pieces = points
        .iter()
        .filter(|(k, _)| (k1..=k2).contains(k))
        .map(|&(k, e)| {
            let a = alpha.term(k);
            (e - a, e + a)
        })
        .collect();
    Ok(IntervalUnion::new(pieces).clip(&interval))
}

/// Energies of `I` within `alpha_{2 * 4^m} / 2` of the block spectrum.
pub fn delta_set(block_spectrum: &[f64], interval: Interval, alpha: &ApproxSequence, m: u32) -> Result<IntervalUnion> {
    if !alpha.clamped {
        return Err(Error::invalid("block neighbourhoods need a clamped sequence"));
    }
    let w = 0.5 * alpha.term(2 * 4usize.pow(m));
    if w <= 0.0 {
        return Ok(IntervalUnion::empty());
    }
    let pieces = block_spectrum.iter().map(|&e| (e - w, e + w)).collect();
    Ok(IntervalUnion::new(pieces).clip(&interval))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BPrimeLevel {
    pub m: u32,
    /// Energies of `I` avoiding the neighbourhoods of every level in `[m, M]`.
    pub set: IntervalUnion,
    pub measure: f64,
    pub delta_measure: f64,
    /// `mes(B'_{m+1} \ B'_m) / (mes I * 4^m * alpha_{2 * 4^m})`; absent at the top level.
    pub new_mass_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BPrimeChain {
    pub interval: Interval,
    pub top_level: u32,
    pub levels: Vec<BPrimeLevel>,
}

impl BPrimeChain {
    pub fn is_nested(&self) -> bool {
        self.levels.windows(2).all(|w| w[0].set.is_subset_of(&w[1].set))
    }

    /// Levels `m < M` where `mes B'_{m+1} >= (1 - zeta) mes I` and the new-mass
    /// ratio is at most `zeta`.
    pub fn stall_levels(&self, zeta: f64) -> Vec<u32> {
        let mi = self.interval.length();
        self.levels
            .windows(2)
            .filter_map(|w| {
                let ratio = w[0].new_mass_ratio?;
                (w[1].measure >= (1.0 - zeta) * mi && ratio <= zeta).then_some(w[0].m)
            })
            .collect()
    }
}

/// `B'_m = I \ ⋃_{m <= m' <= M} Delta_{m'}` for consecutive levels given as
/// `(m, sigma(H_m))`.
pub fn bprime_chain(spectra: &[(u32, Vec<f64>)], interval: Interval, alpha: &ApproxSequence) -> Result<BPrimeChain> {
    if spectra.len() < 2 {
        return Err(Error::invalid("the chain needs at least two levels"));
    }
    if spectra.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
        return Err(Error::invalid("levels must be consecutive and increasing"));
    }
    let whole = IntervalUnion::from_interval(interval);
    let mut covered = IntervalUnion::empty();
    let mut rev = Vec::with_capacity(spectra.len());
    for (m, spec) in spectra.iter().rev() {
        let delta = delta_set(spec, interval, alpha, *m)?;
        covered = covered.union(&delta);
        let set = whole.difference(&covered);
        rev.push(BPrimeLevel {
            m: *m,
            measure: set.measure(),
            delta_measure: delta.measure(),
            set,
            new_mass_ratio: None,
        });
    }
    rev.reverse();
    let mut levels = rev;
    let mi = interval.length();
    for i in 0..levels.len() - 1 {
        let m = levels[i].m;
        let gained = levels[i + 1].set.difference(&levels[i].set).measure();
        let scale = mi * 4f64.powi(m as i32) * alpha.term(2 * 4usize.pow(m));
        levels[i].new_mass_ratio = Some(gained / scale);
    }
    Ok(BPrimeChain {
        interval,
        top_level: spectra.last().unwrap().0,
        levels,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub theta: f64,
    /// `{E in I : mes((E - theta, E + theta) ∩ B) <= theta}`.
    pub set: IntervalUnion,
    pub measure: f64,
    /// `4 (mes(I \ B) + theta)`.
    pub bound: f64,
    pub holds: bool,
}

/// Computes the set of energies whose `theta`-window sees at most `theta` of
/// `B`. The window mass is piecewise linear with breakpoints at the endpoints
/// of `B` shifted by `+-theta`, so each piece is solved exactly.
pub fn covering_function(b: &IntervalUnion, interval: Interval, theta: f64) -> Result<Covering> {
    if !(theta > 0.0) {
        return Err(Error::invalid(format!("theta must be positive, got {theta}")));
    }
    if !b.is_subset_of(&IntervalUnion::from_interval(interval)) {
        return Err(Error::invalid("B must lie inside I"));
    }
    let cum = b.cumulative();
    let mass = |e: f64| cum.at(e + theta) - cum.at(e - theta);
    let mut knots = vec![interval.lo, interval.hi];
    for &(lo, hi) in b.intervals() {
        for x in [lo - theta, lo + theta, hi - theta, hi + theta] {
            if interval.lo < x && x < interval.hi {
                knots.push(x);
            }
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut pieces = Vec::new();
    for w in knots.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let (f0, f1) = (mass(x0) - theta, mass(x1) - theta);
        match (f0 <= 0.0, f1 <= 0.0) {
            (true, true) => pieces.push((x0, x1)),
            (false, false) => {}
            (true, false) => pieces.push((x0, x0 + (x1 - x0) * f0 / (f0 - f1))),
            (false, true) => pieces.push((x0 + (x1 - x0) * f0 / (f0 - f1), x1)),
        }
    }
    let set = IntervalUnion::new(pieces);
    let measure = set.measure();
    let bound = 4.0 * (interval.length() - b.measure() + theta);
    Ok(Covering {
        theta,
        set,
        measure,
        bound,
        holds: measure <= bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingSums {
    /// Partial sums of `#sigma(H_m) * alpha_{2 * 4^m}` over levels with
    /// `alpha_{2 * 4^m} <= 2 * 8^-m`.
    pub total: Vec<(u32, f64)>,
    /// Partial sums of `#sigma^b(H_m) * alpha_{2 * 4^m}`.
    pub bad: Vec<(u32, f64)>,
}

/// Partial sums of the two error series over `(m, #sigma(H_m), #sigma^b(H_m))`.
pub fn decoupling_series(levels: &[(u32, usize, usize)], alpha: &ApproxSequence) -> DecouplingSums {
    let mut total = Vec::with_capacity(levels.len());
    let mut bad = Vec::with_capacity(levels.len());
    let (mut st, mut sb) = (0.0, 0.0);
    for &(m, n_all, n_bad) in levels {
        let a = alpha.term(2 * 4usize.pow(m));
        if a <= 2.0 * 8f64.powi(-(m as i32)) {
            st += n_all as f64 * a;
        }
        sb += n_bad as f64 * a;
        total.push((m, st));
        bad.push((m, sb));
    }
    DecouplingSums { total, bad }
}

/// Box eigenvalues with energies in `window` and their localization centers
/// (sites of largest amplitude), as `(center, E)` sorted by center.
pub fn centers_in_window(v: &[f64], window: Interval, tol: f64) -> Result<Vec<(usize, f64)>> {
    let block = TridiagonalBlock::new(1, v.to_vec())?;
    let energies = eigenvalues_in(&block, window.lo, window.hi, tol);
    let vectors = eigenvectors_for(&block, &energies, tol)?;
    let mut points: Vec<(usize, f64)> = energies
        .iter()
        .zip(&vectors)
        .map(|(&e, ev)| {
            let argmax = ev
                .values
                .iter()
                .enumerate()
                .fold((0, -1.0), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
                .0;
            (argmax + 1, e)
        })
        .collect();
    points.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KhinchinTrial {
    pub seed_stream: u64,
    /// `mes ⋃_{k <= K} (E_k +- alpha_k) ∩ I` for the divergent sequence.
    pub divergent: Vec<(usize, f64)>,
    pub convergent: Vec<(usize, f64)>,
    /// `mes ⋃_{k >= K} (E_k +- alpha_k) ∩ I` for the convergent sequence.
    pub convergent_tail: Vec<(usize, f64)>,
    /// `sum_{k >= K} 2 alpha_k` for the same checkpoints (integral bound).
    pub tail_bound: Vec<(usize, f64)>,
    /// Measure added by centers in `[2^j, 2^{j+1})`, divergent sequence.
    pub dyadic_new_mass: Vec<(usize, f64)>,
    pub dominates: bool,
    pub tail_within_bound: bool,
    pub eigenpairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KhinchinReport {
    pub interval: Interval,
    pub divergent_alpha: ApproxSequence,
    pub convergent_alpha: ApproxSequence,
    pub k_max: usize,
    pub box_length: usize,
    pub seed: u64,
    pub trials: Vec<KhinchinTrial>,
    pub dominating_trials: usize,
    pub tail_bound_trials: usize,
}

impl KhinchinReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new("khinchin", &["trial", "K", "divergent", "convergent", "convergent_tail", "tail_bound"]);
        for (i, tr) in self.trials.iter().enumerate() {
            for j in 0..tr.divergent.len() {
                t.push(vec![
                    i.into(),
                    tr.divergent[j].0.into(),
                    tr.divergent[j].1.into(),
                    tr.convergent[j].1.into(),
                    tr.convergent_tail[j].1.into(),
                    tr.tail_bound[j].1.into(),
                ]);
            }
        }
        t
    }
}

/// Sum of `2 c k^-2` over `k >= K`, bounded by the integral test.
fn tail_sum_bound(alpha: &ApproxSequence, k: usize, k_max: usize) -> f64 {
    match alpha.kind {
        SequenceKind::Power { c, p } if p > 1.0 && k > 1 => {
            2.0 * c * (k as f64 - 1.0).powf(1.0 - p) / (p - 1.0)
        }
        _ => 2.0 * (k..=k_max).map(|j| alpha.term(j)).sum::<f64>(),
    }
}

/// Covered measure of the truncated approximation sets for a divergent and a
/// convergent sequence on the same realizations.
#[allow(clippy::too_many_arguments)]
pub fn khinchin_experiment<S: PotentialSource>(
    source: &S,
    essential_spectrum: Interval,
    interval: Interval,
    divergent: &ApproxSequence,
    convergent: &ApproxSequence,
    k_max: usize,
    margin: usize,
    trials: usize,
    seed: u64,
) -> Result<KhinchinReport> {
    if !interval.inside_interior_of(&essential_spectrum) {
        return Err(Error::invalid("the interval must lie inside the interior of the spectrum"));
    }
    if k_max < 2 || trials == 0 {
        return Err(Error::invalid("need k_max >= 2 and at least one trial"));
    }
    let reach = divergent.term(1).max(convergent.term(1));
    let window = Interval::new(interval.lo - reach, interval.hi + reach);
    let n = k_max + margin;
    let mut checkpoints: Vec<usize> = (1..).map(|j| 1usize << j).take_while(|&k| k < k_max).collect();
    checkpoints.push(k_max);
    let trials_out: Vec<KhinchinTrial> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let v = source.sample(n, seed, t);
            let points: Vec<(usize, f64)> = centers_in_window(&v, window, 1e-13)
                .map_err(|e| match e {
                    Error::Numeric { message, .. } => Error::Numeric { index: t as usize, message },
                    other => other,
                })?
                .into_iter()
                .filter(|&(k, _)| k <= k_max)
                .collect();
            let curve = |alpha: &ApproxSequence| -> Result<Vec<(usize, f64)>> {
                checkpoints
                    .iter()
                    .map(|&k| Ok((k, truncated_approx_set(&points, alpha, 1, k, interval)?.measure())))
                    .collect()
            };
            let div = curve(divergent)?;
            let conv = curve(convergent)?;
            let tail: Vec<(usize, f64)> = checkpoints
                .iter()
                .map(|&k| Ok((k, truncated_approx_set(&points, convergent, k, k_max, interval)?.measure())))
                .collect::<Result<_>>()?;
            let bound: Vec<(usize, f64)> =
                checkpoints.iter().map(|&k| (k, tail_sum_bound(convergent, k, k_max))).collect();
            let mut dyadic = Vec::new();
            let mut prev = 0.0;
            for &(k, m) in &div {
                dyadic.push((k, m - prev));
                prev = m;
            }
            let dominates = div.iter().zip(&conv).all(|(d, c)| d.1 >= c.1)
                && div.last().unwrap().1 > conv.last().unwrap().1;
            let tail_within_bound = tail.iter().zip(&bound).all(|(t, b)| t.1 <= b.1);
            Ok(KhinchinTrial {
                seed_stream: t,
                divergent: div,
                convergent: conv,
                convergent_tail: tail,
                tail_bound: bound,
                dyadic_new_mass: dyadic,
                dominates,
                tail_within_bound,
                eigenpairs: points.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KhinchinReport {
        interval,
        divergent_alpha: divergent.clone(),
        convergent_alpha: convergent.clone(),
        k_max,
        box_length: n,
        seed,
        dominating_trials: trials_out.iter().filter(|t| t.dominates).count(),
        tail_bound_trials: trials_out.iter().filter(|t| t.tail_within_bound).count(),
        trials: trials_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `mes((e - theta, e + theta) ∩ B)` by direct summation over pieces.
    fn window_mass(b: &IntervalUnion, e: f64, theta: f64) -> f64 {
        b.intervals()
            .iter()
            .map(|&(lo, hi)| (hi.min(e + theta) - lo.max(e - theta)).max(0.0))
            .sum()
    }

    #[test]
    fn union_examples() {
        let clip = Interval::new(0.0, 3.0);
        let u = union_of_intervals(&[1.0, 2.0], &[0.1, 0.1], clip).unwrap();
        assert!((u.measure() - 0.4).abs() < 1e-15);
        let u = union_of_intervals(&[1.0, 1.05], &[0.1, 0.1], clip).unwrap();
        assert_eq!(u.len(), 1);
        assert!((u.intervals()[0].0 - 0.9).abs() < 1e-15 && (u.intervals()[0].1 - 1.15).abs() < 1e-15);
        assert!((u.measure() - 0.25).abs() < 1e-15);
        let none = union_of_intervals(&[1.0], &[0.1], Interval::new(5.0, 6.0)).unwrap();
        assert!(none.is_empty());
        assert_eq!(none.measure(), 0.0);
        assert!(union_of_intervals(&[1.0], &[0.1, 0.2], clip).is_err());
    }

    #[test]
    fn clamping() {
        let a = clamp_sequence(&ApproxSequence::harmonic(2.0).unwrap());
        for k in 1..100 {
            assert_eq!(a.term(k), 1.0 / k as f64);
        }
        let p = ApproxSequence::power(1.0, 2.0).unwrap();
        let pc = clamp_sequence(&p);
        for k in 1..100 {
            assert_eq!(pc.term(k), p.term(k));
        }
        assert!(ApproxSequence::table(vec![0.5, 0.6]).is_err());
        assert!(ApproxSequence::harmonic(0.0).is_err());
    }

    #[test]
    fn clamped_harmonic_partial_sums_keep_growing() {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let a = clamp_sequence(&ApproxSequence::harmonic(1.0).unwrap());
        let sums = partial_sums(&a, &[1000, 1_000_000]);
        for &(k, s) in &sums {
            let k = k as f64;
            assert!((s - (k.ln() + EULER_GAMMA)).abs() < 1.0 / k);
        }
        assert!(sums[1].1 - sums[0].1 > 6.9);
    }

    #[test]
    fn truncated_set_examples() {
        let i = Interval::new(0.0, 1.0);
        let a = ApproxSequence::table(vec![0.1, 0.1, 0.1]).unwrap();
        let s = truncated_approx_set(&[(2, 0.5)], &a, 1, 3, i).unwrap();
        assert!((s.measure() - 0.2).abs() < 1e-15);
        assert!(truncated_approx_set(&[(2, 0.5)], &a, 3, 2, i).is_err());
    }

    #[test]
    fn delta_set_examples() {
        // alpha_{2 * 4^m} = 0.2 at m = 1 (k = 8)
        let mut vals = vec![1.0; 7];
        vals.push(0.2);
        let a = clamp_sequence(&ApproxSequence::table(vals.clone()).unwrap());
        assert!((a.term(8) - 0.125).abs() < 1e-15);
        let unclamped = ApproxSequence::table(vals).unwrap();
        assert!(delta_set(&[1.0, 2.0], Interval::new(0.0, 3.0), &unclamped, 1).is_err());
        let a = clamp_sequence(&ApproxSequence::table(vec![0.2; 8]).unwrap());
        // min(0.2, 1/8) = 0.125, half-width 0.0625
        let d = delta_set(&[1.0, 2.0], Interval::new(0.0, 3.0), &a, 1).unwrap();
        assert!((d.measure() - 0.25).abs() < 1e-15);
        let h = clamp_sequence(&ApproxSequence::table(vec![1.0, 0.5, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4]).unwrap());
        let d = delta_set(&[10.0], Interval::new(0.0, 3.0), &h, 1).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn bprime_chain_trivial_and_nested() {
        let i = Interval::new(0.0, 1.0);
        // zero past the table: empty neighbourhoods at every level
        let tiny = clamp_sequence(&ApproxSequence::table(vec![1.0]).unwrap());
        let spectra = vec![(1, vec![0.5]), (2, vec![0.25, 0.75])];
        let c = bprime_chain(&spectra, i, &tiny).unwrap();
        assert!(c.levels.iter().all(|l| (l.measure - 1.0).abs() < 1e-15));
        let h = clamp_sequence(&ApproxSequence::harmonic(1.0).unwrap());
        let spectra = vec![(1, vec![0.1, 0.5]), (2, vec![0.3, 0.5, 0.9]), (3, vec![0.05, 0.6])];
        let c = bprime_chain(&spectra, i, &h).unwrap();
        assert!(c.is_nested());
        for w in c.levels.windows(2) {
            assert!(w[0].measure <= w[1].measure);
        }
        assert!(c.levels[2].new_mass_ratio.is_none());
        assert!(bprime_chain(&spectra[..1], i, &h).is_err());
    }

    #[test]
    fn covering_full_and_empty() {
        let i = Interval::new(0.0, 1.0);
        let full = IntervalUnion::from_interval(i);
        let c = covering_function(&full, i, 0.3).unwrap();
        assert_eq!(c.measure, 0.0);
        let c = covering_function(&IntervalUnion::empty(), i, 0.3).unwrap();
        assert!((c.measure - 1.0).abs() < 1e-15);
        assert!(c.holds);
        assert!(covering_function(&full, i, 0.0).is_err());
        let outside = IntervalUnion::new(vec![(0.5, 1.5)]);
        assert!(covering_function(&outside, i, 0.1).is_err());
    }

    #[test]
    fn covering_matches_grid_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let i = Interval::new(0.0, 1.0);
        for _ in 0..5 {
            let pieces: Vec<(f64, f64)> = (0..50)
                .map(|_| {
                    let a: f64 = rng.random_range(0.0..0.99);
                    (a, (a + rng.random_range(0.0..0.03)).min(1.0))
                })
                .collect();
            let b = IntervalUnion::new(pieces);
            let theta = rng.random_range(0.001..0.05);
            let exact = covering_function(&b, i, theta).unwrap();
            let cells = 1_000_000;
            let h = 1.0 / cells as f64;
            let hits = (0..cells)
                .filter(|&j| window_mass(&b, (j as f64 + 0.5) * h, theta) <= theta)
                .count();
            let grid = hits as f64 * h;
            let tol = h * (2 * exact.set.len() + 2) as f64;
            assert!((grid - exact.measure).abs() <= tol, "{grid} vs {}", exact.measure);
            assert!(exact.holds);
        }
    }

    #[test]
    fn decoupling_partial_sums() {
        let h = clamp_sequence(&ApproxSequence::harmonic(1.0).unwrap());
        let s = decoupling_series(&[(1, 4, 2), (2, 16, 3)], &h);
        assert!((s.bad[1].1 - (2.0 / 8.0 + 3.0 / 32.0)).abs() < 1e-15);
        // alpha_8 = 1/8 <= 2/8, alpha_32 = 1/32 <= 2/64
        assert!((s.total[1].1 - (4.0 / 8.0 + 16.0 / 32.0)).abs() < 1e-15);
    }

    fn arb_union() -> impl Strategy<Value = IntervalUnion> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..0.1), 0..40)
            .prop_map(|v| IntervalUnion::new(v.into_iter().map(|(a, w)| (a, (a + w).min(1.0))).collect()))
    }

    proptest! {
        #[test]
        fn covering_lemma_inequality(b in arb_union(), theta in 0.0005f64..0.3) {
            let c = covering_function(&b, Interval::new(0.0, 1.0), theta).unwrap();
            prop_assert!(c.holds);
            prop_assert!(c.set.is_subset_of(&IntervalUnion::from_interval(Interval::new(0.0, 1.0))));
        }

        #[test]
        fn truncated_set_bounds(es in prop::collection::vec(0.0f64..2.0, 1..60), c in 0.01f64..1.0) {
            let a = ApproxSequence::harmonic(c).unwrap();
            let points: Vec<(usize, f64)> = es.iter().enumerate().map(|(i, &e)| (i + 1, e)).collect();
            let i = Interval::new(0.5, 1.5);
            let s = truncated_approx_set(&points, &a, 1, points.len(), i).unwrap();
            let sum: f64 = (1..=points.len()).map(|k| 2.0 * a.term(k)).sum();
            prop_assert!(s.measure() <= sum + 1e-12);
            prop_assert!(s.measure() <= i.length() + 1e-12);
        }
    }
}
