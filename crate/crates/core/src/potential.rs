//! I.i.d. potential laws with compact support and bounded density.
//!
//! Every random quantity in the crate is drawn from a [`PotentialSource`].
//! Randomness is keyed by `(seed, stream)`: the seed selects a ChaCha8 key and
//! the stream selects one of its 2^64 independent counter streams, so trial `i`
//! of an experiment always sees the same numbers no matter which worker runs
//! it or in which order trials are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Shape of the density on the support `J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DensityKind {
    Uniform,
    /// Continuous piecewise-linear density through `(x, f(x))` nodes,
    /// normalized so that it integrates to one.
    PiecewiseLinear { xs: Vec<f64>, densities: Vec<f64> },
}

/// Law of a single site potential `v_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialDistribution {
    j_lo: f64,
    j_hi: f64,
    density_bound: f64,
    kind: DensityKind,
    /// CDF at the nodes (piecewise-linear kind only).
    #[serde(skip)]
    cdf_nodes: Vec<f64>,
}

impl PotentialDistribution {
    pub fn uniform(j_lo: f64, j_hi: f64) -> Result<Self> {
        check_support(j_lo, j_hi)?;
        let height = 1.0 / (j_hi - j_lo);
        Ok(Self {
            j_lo,
            j_hi,
            density_bound: height.max(1.0),
            kind: DensityKind::Uniform,
            cdf_nodes: Vec::new(),
        })
    }

    /// Builds a piecewise-linear law from `(x, weight)` nodes. The first and
    /// last node give the support. Weights are rescaled to a probability
    /// density; weights at interior nodes must be strictly positive.
    pub fn piecewise_linear(nodes: &[(f64, f64)]) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidDistribution(
                "piecewise-linear density needs at least two nodes".into(),
            ));
        }
        let xs: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let raw: Vec<f64> = nodes.iter().map(|n| n.1).collect();
        let (j_lo, j_hi) = (xs[0], xs[xs.len() - 1]);
        check_support(j_lo, j_hi)?;
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidDistribution(
                "density nodes must be strictly increasing".into(),
            ));
        }
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "density weights must be finite and non-negative".into(),
            ));
        }
        if raw[1..raw.len() - 1].iter().any(|w| *w <= 0.0) {
            return Err(Error::InvalidDistribution(
                "density must be positive at interior nodes".into(),
            ));
        }
        let mass: f64 = xs
            .windows(2)
            .zip(raw.windows(2))
            .map(|(x, f)| 0.5 * (f[0] + f[1]) * (x[1] - x[0]))
            .sum();
        if !(mass > 0.0) {
            return Err(Error::InvalidDistribution("density has zero mass".into()));
        }
        let densities: Vec<f64> = raw.iter().map(|w| w / mass).collect();
        let mut cdf_nodes = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cdf_nodes.push(0.0);
        for (x, f) in xs.windows(2).zip(densities.windows(2)) {
            acc += 0.5 * (f[0] + f[1]) * (x[1] - x[0]);
            cdf_nodes.push(acc);
        }
        // absorb the rounding residue so the table ends exactly at one
        let last = cdf_nodes.len() - 1;
        cdf_nodes[last] = 1.0;
        let max_density = densities.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            j_lo,
            j_hi,
            density_bound: max_density.max(1.0),
            kind: DensityKind::PiecewiseLinear { xs, densities },
            cdf_nodes,
        })
    }

    pub fn support(&self) -> Interval {
        Interval::new(self.j_lo, self.j_hi)
    }

    pub fn j_lo(&self) -> f64 {
        self.j_lo
    }

    pub fn j_hi(&self) -> f64 {
        self.j_hi
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Upper bound `A >= 1` on the density.
    pub fn density_bound(&self) -> f64 {
        self.density_bound
    }

    /// Essential spectrum `[-2, 2] + J` of the associated operator.
    pub fn essential_spectrum(&self) -> Interval {
        Interval::new(self.j_lo - 2.0, self.j_hi + 2.0)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.j_lo || x > self.j_hi {
            return 0.0;
        }
        match &self.kind {
            DensityKind::Uniform => 1.0 / (self.j_hi - self.j_lo),
            DensityKind::PiecewiseLinear { xs, densities } => {
                let i = segment_index(xs, x);
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                densities[i] + t * (densities[i + 1] - densities[i])
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.j_lo {
            return 0.0;
        }
        if x >= self.j_hi {
            return 1.0;
        }
        match &self.kind {
            DensityKind::Uniform => (x - self.j_lo) / (self.j_hi - self.j_lo),
            DensityKind::PiecewiseLinear { xs, densities } => {
                let i = segment_index(xs, x);
                let h = xs[i + 1] - xs[i];
                let t = x - xs[i];
                let slope = (densities[i + 1] - densities[i]) / h;
                self.cdf_nodes[i] + densities[i] * t + 0.5 * slope * t * t
            }
        }
    }

    /// Inverse CDF for `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.kind {
            DensityKind::Uniform => self.j_lo + u * (self.j_hi - self.j_lo),
            DensityKind::PiecewiseLinear { xs, densities } => {
                let i = match self.cdf_nodes.partition_point(|&c| c <= u) {
                    0 => 0,
                    p => (p - 1).min(xs.len() - 2),
                };
                let (x0, x1) = (xs[i], xs[i + 1]);
                let h = x1 - x0;
                let (f0, f1) = (densities[i], densities[i + 1]);
                let c = u - self.cdf_nodes[i];
                let a = 0.5 * (f1 - f0) / h;
                // root of a t^2 + f0 t - c = 0 in the cancellation-free form
                let disc = (f0 * f0 + 4.0 * a * c).max(0.0);
                let denom = f0 + disc.sqrt();
                let mut t = if denom > 0.0 { 2.0 * c / denom } else { 0.0 };
                t = t.clamp(0.0, h);
                for _ in 0..4 {
                    let resid = self.cdf_nodes[i] + f0 * t + a * t * t - u;
                    let slope = f0 + 2.0 * a * t;
                    if resid.abs() <= 1e-12 || slope <= 0.0 {
                        break;
                    }
                    t = (t - resid / slope).clamp(0.0, h);
                }
                x0 + t
            }
        }
    }

    /// Smallest density value at the interior nodes. This is the resolution at
    /// which the lower density bound on proper subintervals is checked.
    pub fn min_interior_density(&self) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 1.0 / (self.j_hi - self.j_lo),
            DensityKind::PiecewiseLinear { densities, .. } => {
                if densities.len() > 2 {
                    densities[1..densities.len() - 1]
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min)
                } else {
                    // a single linear piece: positive on every proper subinterval
                    // unless both ends vanish, which the zero-mass check excludes
                    densities[0].max(densities[1])
                }
            }
        }
    }

    /// The same law translated by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.j_lo += c;
        out.j_hi += c;
        if let DensityKind::PiecewiseLinear { xs, .. } = &mut out.kind {
            for x in xs.iter_mut() {
                *x += c;
            }
        }
        out
    }
}

fn check_support(j_lo: f64, j_hi: f64) -> Result<()> {
    if !(j_lo.is_finite() && j_hi.is_finite()) || j_hi <= j_lo {
        return Err(Error::InvalidDistribution(format!(
            "support [{j_lo}, {j_hi}] must satisfy j_lo < j_hi"
        )));
    }
    Ok(())
}

fn segment_index(xs: &[f64], x: f64) -> usize {
    match xs.partition_point(|&n| n <= x) {
        0 => 0,
        p => (p - 1).min(xs.len() - 2),
    }
}

/// Anything that can produce a reproducible stream of site potentials.
pub trait PotentialSource: Sync {
    type Sampler: Iterator<Item = f64>;

    fn sampler(&self, seed: u64, stream: u64) -> Self::Sampler;

    fn sample(&self, n: usize, seed: u64, stream: u64) -> Vec<f64> {
        self.sampler(seed, stream).take(n).collect()
    }
}

/// Counter-based stream: ChaCha8 keyed by `seed`, positioned on `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Infinite sampler for a [`PotentialDistribution`].
#[derive(Clone, Debug)]
pub struct PotentialSampler {
    rng: ChaCha8Rng,
    law: PotentialDistribution,
}

impl Iterator for PotentialSampler {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let u: f64 = self.rng.random();
        Some(match self.law.kind {
            DensityKind::Uniform => self.law.j_lo + u * (self.law.j_hi - self.law.j_lo),
            DensityKind::PiecewiseLinear { .. } => self.law.quantile(u),
        })
    }
}

impl PotentialSource for PotentialDistribution {
    type Sampler = PotentialSampler;

    fn sampler(&self, seed: u64, stream: u64) -> PotentialSampler {
        PotentialSampler {
            rng: stream_rng(seed, stream),
            law: self.clone(),
        }
    }
}

/// Deterministic constant potential `v_k = c`. Not a valid random law (its
/// support is a point); used for closed-form checks and the free Laplacian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantPotential(pub f64);

impl PotentialSource for ConstantPotential {
    type Sampler = std::iter::Repeat<f64>;

    fn sampler(&self, _seed: u64, _stream: u64) -> Self::Sampler {
        std::iter::repeat(self.0)
    }
}

/// Draws `n` site potentials from stream `stream` of `seed`.
pub fn sample_potential(
    dist: &PotentialDistribution,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    check_support(dist.j_lo, dist.j_hi)?;
    Ok(dist.sample(n, seed, stream))
}
