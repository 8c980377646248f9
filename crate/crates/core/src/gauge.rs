//! Gauge functions, the gauge series of an approximation sequence, and upper
//! estimates of gauge Hausdorff measures from explicit covers.

use serde::{Deserialize, Serialize};

use crate::approx::{ApproxSequence, SequenceKind};
use crate::error::{Error, Result};
use crate::interval::IntervalUnion;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeKind {
    /// `2t`, which recovers Lebesgue measure.
    Lebesgue,
    /// `t^s`, `s in (0, 1]`.
    Power { s: f64 },
    /// `1 / max(1, log(1/t))`.
    ReciprocalLog,
    /// Linear interpolation of `(t, rho)` nodes from `(0, 0)` to `t = 1`.
    Table { nodes: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeFunction {
    pub kind: GaugeKind,
    pub rho_over_t_nonincreasing: bool,
}

const MONOTONE_GRID: usize = 10_000;

impl GaugeFunction {
    pub fn lebesgue() -> Self {
        Self { kind: GaugeKind::Lebesgue, rho_over_t_nonincreasing: true }
    }

    pub fn power(s: f64) -> Result<Self> {
        Self::new(GaugeKind::Power { s }, true)
    }

    pub fn reciprocal_log() -> Self {
        Self { kind: GaugeKind::ReciprocalLog, rho_over_t_nonincreasing: true }
    }

    /// A tabulated gauge. A claimed `rho_over_t_nonincreasing` flag is checked
    /// on a log grid.
    pub fn table(nodes: Vec<(f64, f64)>, rho_over_t_nonincreasing: bool) -> Result<Self> {
        Self::new(GaugeKind::Table { nodes }, rho_over_t_nonincreasing)
    }

    pub fn new(kind: GaugeKind, rho_over_t_nonincreasing: bool) -> Result<Self> {
        let g = Self { kind, rho_over_t_nonincreasing };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            GaugeKind::Lebesgue | GaugeKind::ReciprocalLog => {}
            GaugeKind::Power { s } => {
                if !(*s > 0.0 && *s <= 1.0) {
                    return Err(Error::invalid(format!("power gauge needs s in (0, 1], got {s}")));
                }
            }
            GaugeKind::Table { nodes } => {
                let ok = nodes.len() >= 2
                    && nodes[0] == (0.0, 0.0)
                    && nodes.last().unwrap().0 == 1.0
                    && nodes.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1)
                    && nodes.iter().all(|&(_, r)| r.is_finite());
                if !ok {
                    return Err(Error::invalid(
                        "gauge table must start at (0, 0), end at t = 1 and be non-decreasing",
                    ));
                }
            }
        }
        if self.rho_over_t_nonincreasing && !self.check_rho_over_t() {
            return Err(Error::invalid("rho(t)/t is not non-increasing"));
        }
        Ok(())
    }

    /// `rho(t)/t` is non-increasing on a log grid over `[1e-12, 1]`.
    pub fn check_rho_over_t(&self) -> bool {
        let ratios: Vec<f64> = log_grid(1e-12, 1.0, MONOTONE_GRID)
            .into_iter()
            .map(|t| self.value(t) / t)
            .collect();
        ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
    }

    /// `rho(exp(lt))`, exact where `exp(lt)` underflows.
    pub fn value_at_log(&self, lt: f64) -> f64 {
        match &self.kind {
            GaugeKind::Lebesgue => 2.0 * lt.exp(),
            GaugeKind::Power { s } => (s * lt).exp(),
            GaugeKind::ReciprocalLog => 1.0 / (-lt).max(1.0),
            GaugeKind::Table { .. } => self.value(lt.exp()),
        }
    }

    /// Points in `(0, 1)` where `rho` is not smooth.
    fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            GaugeKind::ReciprocalLog => vec![(-1.0f64).exp()],
            GaugeKind::Table { nodes } => nodes[1..nodes.len() - 1].iter().map(|n| n.0).collect(),
            _ => Vec::new(),
        }
    }

    fn value(&self, t: f64) -> f64 {
        match &self.kind {
            GaugeKind::Lebesgue => 2.0 * t,
            GaugeKind::Power { s } => t.powf(*s),
            GaugeKind::ReciprocalLog => {
                if t == 0.0 {
                    0.0
                } else {
                    1.0 / (-t.ln()).max(1.0)
                }
            }
            GaugeKind::Table { nodes } => {
                let j = nodes.partition_point(|&(x, _)| x < t).clamp(1, nodes.len() - 1);
                let (x0, y0) = nodes[j - 1];
                let (x1, y1) = nodes[j];
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }
}

/// `rho(t)` for `t in [0, 1]`.
pub fn gauge_eval(rho: &GaugeFunction, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("gauge argument {t} outside [0, 1]")));
    }
    Ok(rho.value(t))
}

/// `n` points from `lo` to `hi`, equally spaced in `log t`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    Integrable,
    NonIntegrable,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityTest {
    /// `(eps, ∫_eps^1 rho(t)/t dt)` with `eps` decreasing.
    pub partial_integrals: Vec<(f64, f64)>,
    pub numeric: Integrability,
    /// Closed-form classification; absent for tables.
    pub analytic: Option<Integrability>,
    /// The closed-form verdict when available, the numeric one otherwise.
    pub verdict: Integrability,
}

const STEPS_PER_DECADE: usize = 200;

/// `∫_a^b rho(t)/t dt = ∫_{ln a}^{ln b} rho(e^u) du` by Simpson's rule on
/// each smooth piece.
pub fn log_integral(rho: &GaugeFunction, a: f64, b: f64) -> f64 {
    integral_in_log(rho, a.ln(), b.ln())
}

/// `∫_{ua}^{ub} rho(e^u) du`.
pub fn integral_in_log(rho: &GaugeFunction, ua: f64, ub: f64) -> f64 {
    if ub <= ua {
        return 0.0;
    }
    let mut cuts = vec![ua];
    cuts.extend(rho.kinks().into_iter().map(f64::ln).filter(|&x| ua < x && x < ub));
    cuts.push(ub);
    cuts.windows(2).map(|w| simpson_log(rho, w[0], w[1])).sum()
}

fn simpson_log(rho: &GaugeFunction, ua: f64, ub: f64) -> f64 {
    let steps = (((ub - ua) / std::f64::consts::LN_10 * STEPS_PER_DECADE as f64).ceil() as usize).max(2);
    let steps = steps + steps % 2;
    let h = (ub - ua) / steps as f64;
    let f = |i: usize| rho.value_at_log(ua + h * i as f64);
    let mut s = f(0) + f(steps);
    for i in 1..steps {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
    }
    s * h / 3.0
}

/// Classifies `∫_0^1 rho(t)/t dt` from its partial integrals down to `eps_min`
/// (one point per decade) and, for closed forms, analytically.
pub fn integrability_test(rho: &GaugeFunction, eps_min: f64) -> IntegrabilityTest {
    let decades = (-eps_min.log10()).round().max(3.0) as i32;
    let mut partial = Vec::with_capacity(decades as usize);
    let mut total = 0.0;
    let mut increments = Vec::with_capacity(decades as usize);
    for j in 1..=decades {
        let d = log_integral(rho, 10f64.powi(-j), 10f64.powi(1 - j));
        total += d;
        increments.push(d);
        partial.push((10f64.powi(-j), total));
    }
    let n = increments.len();
    let ratio = increments[n - 1] / increments[n - 3];
    let numeric = if increments[n - 1] == 0.0 || ratio <= 0.25 {
        Integrability::Integrable
    } else if ratio >= 0.8 {
        Integrability::NonIntegrable
    } else {
        Integrability::Inconclusive
    };
    let analytic = match rho.kind {
        GaugeKind::Lebesgue | GaugeKind::Power { .. } => Some(Integrability::Integrable),
        GaugeKind::ReciprocalLog => Some(Integrability::NonIntegrable),
        GaugeKind::Table { .. } => None,
    };
    IntegrabilityTest {
        partial_integrals: partial,
        numeric,
        analytic,
        verdict: analytic.unwrap_or(numeric),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTest {
    /// `(K, sum_{k <= K} rho(alpha_k))` at powers of ten and at the cutoff.
    pub partial_sums: Vec<(usize, f64)>,
    pub verdict: Option<SeriesVerdict>,
    /// For `alpha_k = exp(-2 gamma_bar k)`: `∫_1^K rho(exp(-2 gamma_bar s)) ds`,
    /// a lower bound for the partial sum at `K`.
    pub integral_lower_bound: Option<f64>,
}

impl SeriesTest {
    pub fn last(&self) -> f64 {
        self.partial_sums.last().map_or(0.0, |p| p.1)
    }

    /// Slope of the partial sums against `log K` between two checkpoints.
    pub fn log_slope(&self, k_lo: usize, k_hi: usize) -> Option<f64> {
        let at = |k| self.partial_sums.iter().find(|p| p.0 == k).map(|p| p.1);
        Some((at(k_hi)? - at(k_lo)?) / ((k_hi as f64).ln() - (k_lo as f64).ln()))
    }
}

/// Eventual form of a closed-form sequence: `exp(-2 g k)` or `c k^-p`.
enum Tail {
    Exponential,
    Power { p: f64 },
}

fn tail_of(alpha: &ApproxSequence) -> Option<Tail> {
    let tail = match alpha.kind {
        SequenceKind::Exponential { .. } => Tail::Exponential,
        SequenceKind::Power { p, .. } => Tail::Power { p },
        SequenceKind::Harmonic { .. } => Tail::Power { p: 1.0 },
        SequenceKind::Table { .. } => return None,
    };
    Some(match tail {
        // clamping at 1/k only changes sequences decaying slower than 1/k
        Tail::Power { p } if alpha.clamped && p < 1.0 => Tail::Power { p: 1.0 },
        t => t,
    })
}

/// Analytic convergence of `sum rho(alpha_k)` for closed-form pairs.
pub fn series_verdict(rho: &GaugeFunction, alpha: &ApproxSequence) -> Option<SeriesVerdict> {
    let tail = tail_of(alpha)?;
    let convergent = match (&rho.kind, tail) {
        (GaugeKind::Lebesgue, Tail::Exponential) | (GaugeKind::Power { .. }, Tail::Exponential) => true,
        (GaugeKind::Lebesgue, Tail::Power { p }) => p > 1.0,
        (GaugeKind::Power { s }, Tail::Power { p }) => p * s > 1.0,
        // rho(alpha_k) >= 1 / log(1/alpha_k) and log(1/alpha_k) = O(k)
        (GaugeKind::ReciprocalLog, _) => false,
        (GaugeKind::Table { .. }, _) => return None,
    };
    Some(if convergent { SeriesVerdict::Convergent } else { SeriesVerdict::Divergent })
}

pub fn series_test(rho: &GaugeFunction, alpha: &ApproxSequence, k_max: usize) -> Result<SeriesTest> {
    if k_max == 0 {
        return Err(Error::invalid("series cutoff must be at least 1"));
    }
    let mut checkpoints: Vec<usize> = (0..).map(|j| 10usize.pow(j)).take_while(|&k| k < k_max).collect();
    checkpoints.push(k_max);
    let partial_sums = crate::approx::partial_sums_of(|k| rho.value_at_log(alpha.ln_term(k).min(0.0)), &checkpoints);
    let integral_lower_bound = match alpha.kind {
        SequenceKind::Exponential { gamma_bar } if !alpha.clamped => {
            let g2 = 2.0 * gamma_bar;
            Some(integral_in_log(rho, -g2 * k_max as f64, -g2) / g2)
        }
        _ => None,
    };
    Ok(SeriesTest {
        partial_sums,
        verdict: series_verdict(rho, alpha),
        integral_lower_bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverEstimate {
    pub eps: f64,
    pub pieces: usize,
    /// `sum_j rho(eps_j)` over the cover.
    pub estimate: f64,
    /// Smallest estimate over this and all coarser meshes.
    pub inf_so_far: f64,
}

/// `sum rho(w_j)` for an explicit cover `(center, half-width)` of `target`.
pub fn cover_sum(target: &IntervalUnion, cover: &[(f64, f64)], rho: &GaugeFunction, eps: f64) -> Result<f64> {
    if let Some(&(_, w)) = cover.iter().find(|&&(_, w)| !(w > 0.0 && w <= eps)) {
        return Err(Error::invalid(format!("cover half-width {w} outside (0, {eps}]")));
    }
    let union = IntervalUnion::new(cover.iter().map(|&(c, w)| (c - w, c + w)).collect());
    let uncovered = target.difference(&union).measure();
    if uncovered > 0.0 {
        return Err(Error::Coverage { uncovered });
    }
    cover.iter().try_fold(0.0, |acc, &(_, w)| Ok(acc + gauge_eval(rho, w)?))
}

/// Cover of `target` splitting each component into the fewest equal pieces of
/// half-width below `eps`; neighbouring pieces overlap slightly.
pub fn canonical_cover(target: &IntervalUnion, eps: f64) -> Vec<(f64, f64)> {
    let mut cover = Vec::new();
    for &(lo, hi) in target.intervals() {
        let n = ((hi - lo) / (2.0 * eps)).floor() as usize + 1;
        let h = (hi - lo) / (2 * n) as f64;
        let w = (h * (1.0 + 1e-9)).min(eps);
        cover.extend((0..n).map(|j| (lo + (2 * j + 1) as f64 * h, w)));
    }
    cover
}

/// Upper estimates of `mes_rho(target)` from canonical covers at each mesh.
pub fn cover_measure_upper(target: &IntervalUnion, rho: &GaugeFunction, meshes: &[f64]) -> Result<Vec<CoverEstimate>> {
    let mut best = f64::INFINITY;
    meshes
        .iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::invalid(format!("mesh {eps} outside (0, 1]")));
            }
            let cover = canonical_cover(target, eps);
            let estimate = cover_sum(target, &cover, rho, eps)?;
            best = best.min(estimate);
            Ok(CoverEstimate { eps, pieces: cover.len(), estimate, inf_so_far: best })
        })
        .collect()
}
