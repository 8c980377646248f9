use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::approx::{ApproxSequence, SequenceKind};
use crate::error::{Error, Result};
use crate::gauge::{GaugeFunction, GaugeKind};
use crate::interval::Interval;
use crate::potential::PotentialDistribution;
use crate::spectralstats::energy_grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lyapunov,
    Ids,
    Wegner,
    Minami,
    Localization,
    Blockmatch,
    Khinchin,
    Jarnik,
    Nonlyap,
    Propa,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Lyapunov,
        ExperimentKind::Ids,
        ExperimentKind::Wegner,
        ExperimentKind::Minami,
        ExperimentKind::Localization,
        ExperimentKind::Blockmatch,
        ExperimentKind::Khinchin,
        ExperimentKind::Jarnik,
        ExperimentKind::Nonlyap,
        ExperimentKind::Propa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Lyapunov => "lyapunov",
            ExperimentKind::Ids => "ids",
            ExperimentKind::Wegner => "wegner",
            ExperimentKind::Minami => "minami",
            ExperimentKind::Localization => "localization",
            ExperimentKind::Blockmatch => "blockmatch",
            ExperimentKind::Khinchin => "khinchin",
            ExperimentKind::Jarnik => "jarnik",
            ExperimentKind::Nonlyap => "nonlyap",
            ExperimentKind::Propa => "propa",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::Lyapunov => "Monte Carlo Lyapunov exponent on an energy grid",
            ExperimentKind::Ids => "integrated density of states from Sturm counts",
            ExperimentKind::Wegner => "density bounds on the IDS and count concentration",
            ExperimentKind::Minami => "tail of the eigenvalue count in a short interval",
            ExperimentKind::Localization => "decay of box eigenfunctions and the center counting band",
            ExperimentKind::Blockmatch => "box eigenvalues against the spectrum of a dyadic block",
            ExperimentKind::Khinchin => "covered measure for divergent and convergent sequences",
            ExperimentKind::Jarnik => "gauge series, integrability and tail covers",
            ExperimentKind::Nonlyap => "slow transfer-matrix growth below the Lyapunov rate",
            ExperimentKind::Propa => "transfer-matrix norm at eigenvalues with a given center",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Uniform,
    PiecewiseLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
}

/// Either `values`, or `min`, `max` and exactly one of `points`, `step`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    Exponential,
    Power,
    Harmonic,
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSpec {
    pub kind: AlphaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub clamped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeSpecKind {
    Lebesgue,
    Power,
    ReciprocalLog,
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub kind: GaugeSpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub rho_over_t_nonincreasing: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sizes {
    /// Chain or box length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Block length for IDS, Minami and count statistics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_values: Option<Vec<usize>>,
    /// Block length of the count-concentration check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_concentration: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_cut: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_ref: Option<f64>,
    /// Chain length and trials of the reference Lyapunov estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_trials: Option<usize>,
    /// Energy step of the reference Lyapunov curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markov_half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub distribution: DistributionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<IntervalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<EnergySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_convergent: Option<AlphaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<GaugeSpec>,
    #[serde(default)]
    pub sizes: Sizes,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    /// Parses TOML; errors name the offending key path.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("", e.message()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            Error::config(path, e.into_inner().message())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// Validated, typed parameters of one experiment.
#[derive(Clone, Debug)]
pub struct Plan {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub dist: PotentialDistribution,
    pub body: PlanBody,
}

#[derive(Clone, Debug)]
pub struct GammaPlan {
    pub n: usize,
    pub trials: usize,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub enum PlanBody {
    Lyapunov { energies: Vec<f64>, n: usize, trials: usize },
    Ids { energies: Vec<f64>, l: usize, trials: usize },
    Wegner {
        energies: Vec<f64>,
        l: usize,
        trials: usize,
        interval: Interval,
        l_concentration: Option<usize>,
    },
    Minami { interval: Interval, l: usize, r: usize, trials: usize },
    Localization {
        n: usize,
        trials: usize,
        tau: f64,
        decay_cut: usize,
        l_values: Vec<usize>,
        gamma: GammaPlan,
        tol: f64,
    },
    Blockmatch { m: u32, n: usize, trials: usize, tau: f64, decay_cut: usize, gamma: GammaPlan, tol: f64 },
    Khinchin {
        interval: Interval,
        divergent: ApproxSequence,
        convergent: ApproxSequence,
        k_max: usize,
        margin: usize,
        trials: usize,
    },
    Jarnik {
        gauge: GaugeFunction,
        alpha: ApproxSequence,
        k_max: usize,
        cover: Option<(Interval, usize, usize)>,
    },
    Nonlyap {
        energies: Vec<f64>,
        horizon: usize,
        tau: f64,
        trials: usize,
        gamma_ref: Option<f64>,
        gamma_trials: usize,
    },
    Propa {
        n: usize,
        k_min: usize,
        k_max: usize,
        trials: usize,
        tau: f64,
        markov_half_width: f64,
        gamma: GammaPlan,
        tol: f64,
    },
}

fn need<T: Clone>(value: &Option<T>, path: &str) -> Result<T> {
    value.clone().ok_or_else(|| Error::config(path, "required for this experiment"))
}

fn check(ok: bool, path: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message))
    }
}

/// Re-labels a module error with a config path.
fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    })
}

fn tau_strict(params: &Params, default: f64) -> Result<f64> {
    let tau = params.tau.unwrap_or(default);
    check(
        (0.0..1.0).contains(&tau),
        "params.tau",
        format!("tau = {tau} violates 0 ≤ τ < 1"),
    )?;
    Ok(tau)
}

fn tau_open(params: &Params, default: f64) -> Result<f64> {
    let tau = tau_strict(params, default)?;
    check(tau > 0.0, "params.tau", "the decay check needs 0 < τ < 1")?;
    Ok(tau)
}

fn distribution(spec: &DistributionSpec) -> Result<PotentialDistribution> {
    match spec.kind {
        DistributionKind::Uniform => {
            check(spec.nodes.is_none(), "distribution.nodes", "not used by the uniform law")?;
            let lo = need(&spec.lo, "distribution.lo")?;
            let hi = need(&spec.hi, "distribution.hi")?;
            at("distribution", PotentialDistribution::uniform(lo, hi))
        }
        DistributionKind::PiecewiseLinear => {
            check(
                spec.lo.is_none() && spec.hi.is_none(),
                "distribution",
                "the piecewise-linear law takes its support from `nodes`",
            )?;
            let nodes: Vec<(f64, f64)> = need(&spec.nodes, "distribution.nodes")?.iter().map(|n| (n[0], n[1])).collect();
            at("distribution.nodes", PotentialDistribution::piecewise_linear(&nodes))
        }
    }
}

fn energies(spec: &Option<EnergySpec>) -> Result<Vec<f64>> {
    let spec = need(spec, "energies")?;
    if let Some(values) = &spec.values {
        check(
            spec.min.is_none() && spec.max.is_none() && spec.points.is_none() && spec.step.is_none(),
            "energies",
            "give either `values` or a `min`/`max` range",
        )?;
        check(!values.is_empty(), "energies.values", "must not be empty")?;
        check(
            values.windows(2).all(|w| w[0] < w[1]) && values.iter().all(|v| v.is_finite()),
            "energies.values",
            "must be finite and strictly increasing",
        )?;
        return Ok(values.clone());
    }
    let lo = need(&spec.min, "energies.min")?;
    let hi = need(&spec.max, "energies.max")?;
    check(lo.is_finite() && hi.is_finite() && lo < hi, "energies", "need finite min < max")?;
    match (spec.points, spec.step) {
        (Some(p), None) => {
            check(p >= 2, "energies.points", "need at least 2 points")?;
            Ok((0..p).map(|i| lo + (hi - lo) * i as f64 / (p - 1) as f64).collect())
        }
        (None, Some(step)) => at("energies.step", energy_grid(lo, hi, step)),
        _ => Err(Error::config("energies", "give exactly one of `points` and `step`")),
    }
}

fn interval_in_spectrum(spec: &Option<IntervalSpec>, dist: &PotentialDistribution) -> Result<Interval> {
    let i = need(spec, "interval")?;
    check(i.lo < i.hi, "interval", "need lo < hi")?;
    let s = dist.essential_spectrum();
    let i = Interval::new(i.lo, i.hi);
    check(
        i.inside_interior_of(&s),
        "interval",
        format!("must lie inside the interior of the spectrum [{}, {}]", s.lo, s.hi),
    )?;
    Ok(i)
}

pub(crate) fn alpha(spec: &AlphaSpec, path: &str) -> Result<ApproxSequence> {
    let field = |name: &str| format!("{path}.{name}");
    let kind = match spec.kind {
        AlphaKind::Exponential => SequenceKind::Exponential { gamma_bar: need(&spec.gamma_bar, &field("gamma_bar"))? },
        AlphaKind::Power => SequenceKind::Power { c: need(&spec.c, &field("c"))?, p: need(&spec.p, &field("p"))? },
        AlphaKind::Harmonic => SequenceKind::Harmonic { c: need(&spec.c, &field("c"))? },
        AlphaKind::Table => SequenceKind::Table { values: need(&spec.values, &field("values"))? },
    };
    let seq = at(path, ApproxSequence::new(kind))?;
    Ok(ApproxSequence { clamped: spec.clamped, ..seq })
}

fn gauge(spec: &GaugeSpec) -> Result<GaugeFunction> {
    let kind = match spec.kind {
        GaugeSpecKind::Lebesgue => GaugeKind::Lebesgue,
        GaugeSpecKind::Power => GaugeKind::Power { s: need(&spec.s, "gauge.s")? },
        GaugeSpecKind::ReciprocalLog => GaugeKind::ReciprocalLog,
        GaugeSpecKind::Table => GaugeKind::Table {
            nodes: need(&spec.nodes, "gauge.nodes")?.iter().map(|n| (n[0], n[1])).collect(),
        },
    };
    let closed_form = !matches!(kind, GaugeKind::Table { .. });
    at("gauge", GaugeFunction::new(kind, spec.rho_over_t_nonincreasing || closed_form))
}

fn positive(value: Option<usize>, default: Option<usize>, path: &str, min: usize) -> Result<usize> {
    let v = match value.or(default) {
        Some(v) => v,
        None => return Err(Error::config(path, "required for this experiment")),
    };
    check(v >= min, path, format!("must be at least {min}, got {v}"))?;
    Ok(v)
}

fn gamma_plan(params: &Params) -> Result<GammaPlan> {
    let step = params.gamma_step.unwrap_or(0.05);
    check(step > 0.0 && step.is_finite(), "params.gamma_step", "must be positive")?;
    Ok(GammaPlan {
        n: positive(params.gamma_n, Some(20_000), "params.gamma_n", 1000)?,
        trials: positive(params.gamma_trials, Some(8), "params.gamma_trials", 2)?,
        step,
    })
}

fn tol(params: &Params) -> Result<f64> {
    let tol = params.tol.unwrap_or(1e-13);
    check(tol > 0.0 && tol < 1e-3, "params.tol", "must lie in (0, 1e-3)")?;
    Ok(tol)
}

impl ExperimentConfig {
    /// Validates every precondition of the chosen experiment.
    pub fn plan(&self) -> Result<Plan> {
        let dist = distribution(&self.distribution)?;
        if let Some(w) = self.workers {
            check(w >= 1, "workers", "must be at least 1")?;
        }
        let sizes = &self.sizes;
        let params = &self.params;
        let trials = |min: usize| positive(self.trials, None, "trials", min);
        let body = match self.experiment {
            ExperimentKind::Lyapunov => PlanBody::Lyapunov {
                energies: energies(&self.energies)?,
                n: positive(sizes.n, None, "sizes.n", 1000)?,
                trials: trials(2)?,
            },
            ExperimentKind::Ids => PlanBody::Ids {
                energies: energies(&self.energies)?,
                l: positive(sizes.l, None, "sizes.l", 16)?,
                trials: trials(2)?,
            },
            ExperimentKind::Wegner => {
                let energies = energies(&self.energies)?;
                check(
                    energies.windows(2).all(|w| w[1] - w[0] <= 0.01 + 1e-12),
                    "energies",
                    "the density check needs a grid spacing of at most 0.01",
                )?;
                PlanBody::Wegner {
                    energies,
                    l: positive(sizes.l, None, "sizes.l", 16)?,
                    trials: trials(2)?,
                    interval: interval_in_spectrum(&self.interval, &dist)?,
                    l_concentration: sizes.l_concentration,
                }
            }
            ExperimentKind::Minami => PlanBody::Minami {
                interval: {
                    let i = need(&self.interval, "interval")?;
                    check(i.lo < i.hi, "interval", "need lo < hi")?;
                    Interval::new(i.lo, i.hi)
                },
                l: positive(sizes.l, None, "sizes.l", 2)?,
                r: positive(params.r, Some(2), "params.r", 1)?,
                trials: trials(1000)?,
            },
            ExperimentKind::Localization => {
                let n = positive(sizes.n, None, "sizes.n", 16)?;
                let l_values = sizes.l_values.clone().unwrap_or_else(|| vec![64, 128, 256]);
                check(
                    l_values.iter().all(|&l| l >= 1 && l <= n),
                    "sizes.l_values",
                    format!("every L must lie in [1, {n}]"),
                )?;
                PlanBody::Localization {
                    n,
                    trials: trials(1)?,
                    tau: tau_open(params, 0.5)?,
                    decay_cut: positive(params.decay_cut, Some(32), "params.decay_cut", 1)?,
                    l_values,
                    gamma: gamma_plan(params)?,
                    tol: tol(params)?,
                }
            }
            ExperimentKind::Blockmatch => {
                let m = need(&sizes.m, "sizes.m")?;
                check((2..=6).contains(&m), "sizes.m", "must lie in [2, 6]")?;
                let n = positive(sizes.n, Some(8 * 4usize.pow(m)), "sizes.n", 1)?;
                check(n >= 2 * 4usize.pow(m), "sizes.n", "the box must contain the block [4^m, 2*4^m - 1]")?;
                PlanBody::Blockmatch {
                    m,
                    n,
                    trials: trials(1)?,
                    tau: tau_open(params, 0.5)?,
                    decay_cut: positive(params.decay_cut, Some(32), "params.decay_cut", 1)?,
                    gamma: gamma_plan(params)?,
                    tol: tol(params)?,
                }
            }
            ExperimentKind::Khinchin => PlanBody::Khinchin {
                interval: interval_in_spectrum(&self.interval, &dist)?,
                divergent: alpha(&need(&self.alpha, "alpha")?, "alpha")?,
                convergent: alpha(&need(&self.alpha_convergent, "alpha_convergent")?, "alpha_convergent")?,
                k_max: positive(sizes.k_max, None, "sizes.k_max", 2)?,
                margin: positive(sizes.margin, Some(256), "sizes.margin", 0)?,
                trials: trials(1)?,
            },
            ExperimentKind::Jarnik => {
                let cover = match &self.interval {
                    Some(_) => Some((
                        interval_in_spectrum(&self.interval, &dist)?,
                        positive(sizes.n, Some(1024), "sizes.n", 16)?,
                        trials(1)?,
                    )),
                    None => None,
                };
                PlanBody::Jarnik {
                    gauge: gauge(&need(&self.gauge, "gauge")?)?,
                    alpha: alpha(&need(&self.alpha, "alpha")?, "alpha")?,
                    k_max: positive(sizes.k_max, None, "sizes.k_max", 1)?,
                    cover,
                }
            }
            ExperimentKind::Nonlyap => {
                if let Some(g) = params.gamma_ref {
                    check(g > 0.0, "params.gamma_ref", "must be positive")?;
                }
                PlanBody::Nonlyap {
                    energies: energies(&self.energies)?,
                    horizon: positive(sizes.horizon, None, "sizes.horizon", 1000)?,
                    tau: tau_strict(params, 0.5)?,
                    trials: trials(1)?,
                    gamma_ref: params.gamma_ref,
                    gamma_trials: positive(params.gamma_trials, Some(8), "params.gamma_trials", 2)?,
                }
            }
            ExperimentKind::Propa => {
                let n = positive(sizes.n, None, "sizes.n", 16)?;
                let k_min = positive(sizes.k_min, Some(1), "sizes.k_min", 1)?;
                let k_max = positive(sizes.k_max, None, "sizes.k_max", k_min)?;
                check(2 * k_max <= n, "sizes.k_max", format!("2 k_max must not exceed n = {n}"))?;
                let w = params.markov_half_width.unwrap_or(0.05);
                check(w > 0.0, "params.markov_half_width", "must be positive")?;
                PlanBody::Propa {
                    n,
                    k_min,
                    k_max,
                    trials: trials(1)?,
                    tau: tau_strict(params, 0.5)?,
                    markov_half_width: w,
                    gamma: gamma_plan(params)?,
                    tol: tol(params)?,
                }
            }
        };
        Ok(Plan {
            kind: self.experiment,
            seed: self.master_seed,
            dist,
            body,
        })
    }
}
