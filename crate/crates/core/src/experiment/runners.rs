use rayon::prelude::*;
use serde_json::json;

use super::config::{GammaPlan, Plan, PlanBody};
use super::Check;
use crate::approx::{self, centers_in_window, khinchin_experiment, partial_sums_of, ApproxSequence, Interval, IntervalUnion};
use crate::error::{Error, Result};
use crate::gauge::{self, cover_sum, integrability_test, series_test, GaugeFunction, Integrability, SeriesVerdict};
use crate::localization::{self, box_eigenpairs, counting_band, decay_fit, good_bad_split, LocalizedEigenpair};
use crate::potential::{PotentialDistribution, PotentialSource};
use crate::spectralstats::{
    count_concentration, energy_grid, ids_estimate, lower_wegner_check, minami_tail, wegner_check, WEGNER_TOL,
};
use crate::table::Table;
use crate::transfer::{
    lyapunov_curve, lyapunov_estimate, lyapunov_table, non_lyapunov_scan, prop_a_check, transfer_product, LyapunovCurve,
};

pub(super) struct Outcome {
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
    pub tables: Vec<Table>,
}

pub(super) fn run(plan: &Plan) -> Result<Outcome> {
    let d = &plan.dist;
    let seed = plan.seed;
    match &plan.body {
        PlanBody::Lyapunov { energies, n, trials } => lyapunov(d, energies, *n, *trials, seed),
        PlanBody::Ids { energies, l, trials } => ids(d, energies, *l, *trials, seed),
        PlanBody::Wegner { energies, l, trials, interval, l_concentration } => {
            wegner(d, energies, *l, *trials, *interval, *l_concentration, seed)
        }
        PlanBody::Minami { interval, l, r, trials } => minami(d, *interval, *l, *r, *trials, seed),
        PlanBody::Localization { n, trials, tau, decay_cut, l_values, gamma, tol } => {
            localization(d, *n, *trials, *tau, *decay_cut, l_values, gamma, *tol, seed)
        }
        PlanBody::Blockmatch { m, n, trials, tau, decay_cut, gamma, tol } => {
            blockmatch(d, *m, *n, *trials, *tau, *decay_cut, gamma, *tol, seed)
        }
        PlanBody::Khinchin { interval, divergent, convergent, k_max, margin, trials } => {
            khinchin(d, *interval, divergent, convergent, *k_max, *margin, *trials, seed)
        }
        PlanBody::Jarnik { gauge, alpha, k_max, cover } => jarnik(d, gauge, alpha, *k_max, *cover, seed),
        PlanBody::Nonlyap { energies, horizon, tau, trials, gamma_ref, gamma_trials } => {
            nonlyap(d, energies, *horizon, *tau, *trials, *gamma_ref, *gamma_trials, seed)
        }
        PlanBody::Propa { n, k_min, k_max, trials, tau, markov_half_width, gamma, tol } => {
            propa(d, *n, (*k_min, *k_max), *trials, *tau, *markov_half_width, gamma, *tol, seed)
        }
    }
}

/// Reference exponents use streams of `seed + 1`, independent of the realizations.
fn reference_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

/// Tags a numerical failure with the realization that produced it.
fn in_realization(seed: u64, r: u64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Numeric { message, .. } => Error::Numeric {
            index: r as usize,
            message: format!("realization {r} (seed {seed}, stream {r}): {message}"),
        },
        other => other,
    }
}

fn gamma_curve(d: &PotentialDistribution, g: &GammaPlan, seed: u64) -> Result<LyapunovCurve> {
    let s = d.essential_spectrum();
    let grid = energy_grid(s.lo, s.hi, g.step)?;
    lyapunov_curve(d, &grid, g.n, g.trials, reference_seed(seed))
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

fn lyapunov(d: &PotentialDistribution, energies: &[f64], n: usize, trials: usize, seed: u64) -> Result<Outcome> {
    let est = energies
        .iter()
        .map(|&e| lyapunov_estimate(d, e, n, trials, seed))
        .collect::<Result<Vec<_>>>()?;
    let min_ratio = est
        .iter()
        .map(|e| e.gamma_hat / e.std_err)
        .fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        checks: vec![Check::at_least("min_gamma_hat_over_std_err", min_ratio, 5.0)],
        results: json!({ "estimates": est }),
        tables: vec![lyapunov_table(&est)],
    })
}

fn ids(d: &PotentialDistribution, energies: &[f64], l: usize, trials: usize, seed: u64) -> Result<Outcome> {
    let ids = ids_estimate(d, energies, l, trials, seed)?;
    let mut checks = vec![Check::flag("ids_monotone", ids.is_monotone())];
    let mut results = json!({
        "block_length": l,
        "trials": trials,
        "a_emp": ids.a_emp,
        "boundary_slack": ids.boundary_slack(),
        "monotone": ids.is_monotone(),
    });
    if let Ok(w) = wegner_check(&ids, d.density_bound(), WEGNER_TOL) {
        checks.push(Check::at_most("max_density", w.max_density, w.bound * (1.0 + w.tol)));
        results["wegner"] = json!(w);
    }
    Ok(Outcome {
        checks,
        results,
        tables: vec![ids.table()],
    })
}

fn wegner(
    d: &PotentialDistribution,
    energies: &[f64],
    l: usize,
    trials: usize,
    interval: Interval,
    l_concentration: Option<usize>,
    seed: u64,
) -> Result<Outcome> {
    let ids = ids_estimate(d, energies, l, trials, seed)?;
    let w = wegner_check(&ids, d.density_bound(), WEGNER_TOL)?;
    let lower = lower_wegner_check(&ids, interval, d.essential_spectrum())?;
    let mut checks = vec![
        Check::at_most("max_density", w.max_density, w.bound * (1.0 + w.tol)),
        Check::at_least("min_density_on_interval_over_3_std_err", lower.a_i, 3.0 * lower.a_i_std_err),
    ];
    let mut results = json!({ "wegner": w, "lower_wegner": lower, "boundary_slack": ids.boundary_slack() });
    let mut tables = vec![ids.table()];
    if let Some(lc) = l_concentration {
        let c = count_concentration(d, lc, interval, lower.a_i, ids.a_emp, trials, reference_seed(seed))?;
        checks.push(Check::at_least("count_concentration", c.empirical, c.target - 3.0 * c.std_err));
        let mut t = Table::new(
            "concentration",
            &["block_length", "count_threshold", "empirical", "std_err", "target", "pass"],
        );
        t.push(vec![
            c.block_length.into(),
            c.count_threshold.into(),
            c.empirical.into(),
            c.std_err.into(),
            c.target.into(),
            c.pass.into(),
        ]);
        tables.push(t);
        results["count_concentration"] = json!(c);
    }
    Ok(Outcome { checks, results, tables })
}

fn minami(d: &PotentialDistribution, interval: Interval, l: usize, r: usize, trials: usize, seed: u64) -> Result<Outcome> {
    let tail = minami_tail(d, d.density_bound(), l, interval, r, trials, seed)?;
    let checks = tail
        .rows
        .iter()
        .map(|row| Check::at_most(&format!("p_count_at_least_{}", row.r), row.empirical, row.bound + 3.0 * row.std_err))
        .collect();
    Ok(Outcome {
        checks,
        tables: vec![tail.table()],
        results: json!(tail),
    })
}

fn bulk(pairs: &[LocalizedEigenpair], n: usize) -> impl Iterator<Item = &LocalizedEigenpair> {
    pairs.iter().filter(move |p| p.center > n / 4 && p.center <= 3 * n / 4)
}

#[allow(clippy::too_many_arguments)]
fn localization(
    d: &PotentialDistribution,
    n: usize,
    trials: usize,
    tau: f64,
    decay_cut: usize,
    l_values: &[usize],
    g: &GammaPlan,
    tol: f64,
    seed: u64,
) -> Result<Outcome> {
    let curve = gamma_curve(d, g, seed)?;
    let per: Vec<_> = (0..trials as u64)
        .into_par_iter()
        .map(|r| {
            let v = d.sample(n, seed, r);
            let pairs = box_eigenpairs(&v, tol).map_err(in_realization(seed, r))?;
            let fits = bulk(&pairs, n)
                .map(|p| {
                    let gamma = curve.at(p.energy);
                    decay_fit(p, gamma, tau, decay_cut).map(|f| (p.label, p.center, p.energy, gamma, f))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((fits, counting_band(&pairs, l_values)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fits_table = Table::new(
        "localization",
        &["realization", "label", "center", "E", "gamma_hat", "fitted_rate", "fit_quality", "margin", "pass"],
    );
    let mut band_table = Table::new("counting", &["realization", "L", "count", "discrepancy", "band", "within"]);
    let (mut passed, mut total) = (0, 0);
    for (r, (fits, bands)) in per.iter().enumerate() {
        for (label, center, e, gamma, f) in fits {
            total += 1;
            passed += f.pass as usize;
            fits_table.push(vec![
                r.into(),
                (*label).into(),
                (*center).into(),
                (*e).into(),
                (*gamma).into(),
                f.fitted_rate.into(),
                f.fit_quality.into(),
                f.margin.into(),
                f.pass.into(),
            ]);
        }
        for b in bands {
            band_table.push(vec![
                r.into(),
                b.l.into(),
                b.count.into(),
                b.discrepancy.into(),
                b.band.into(),
                b.within.into(),
            ]);
        }
    }
    let decay_fraction = fraction(passed, total);
    let mut checks = vec![Check::at_least("decay_pass_fraction", decay_fraction, 0.9)];
    let mut band_results = Vec::new();
    for (j, &l) in l_values.iter().enumerate() {
        let within = per.iter().filter(|(_, b)| b[j].within).count();
        let f = fraction(within, per.len());
        checks.push(Check::at_least(&format!("counting_band_fraction_l{l}"), f, 0.9));
        band_results.push(json!({ "l": l, "fraction_within": f }));
    }
    Ok(Outcome {
        checks,
        results: json!({
            "realizations": trials,
            "bulk_pairs": total,
            "decay_pass_fraction": decay_fraction,
            "counting_band": band_results,
            "gamma_min": curve.min(),
            "gamma_max": curve.max(),
        }),
        tables: vec![fits_table, band_table],
    })
}

#[allow(clippy::too_many_arguments)]
fn blockmatch(
    d: &PotentialDistribution,
    m: u32,
    n: usize,
    trials: usize,
    tau: f64,
    decay_cut: usize,
    g: &GammaPlan,
    tol: f64,
    seed: u64,
) -> Result<Outcome> {
    let curve = gamma_curve(d, g, seed)?;
    let per: Vec<_> = (0..trials as u64)
        .into_par_iter()
        .map(|r| {
            let v = d.sample(n, seed, r);
            let pairs = box_eigenpairs(&v, tol).map_err(in_realization(seed, r))?;
            let bm = localization::block_match(&v, m, &pairs, tol).map_err(in_realization(seed, r))?;
            let bulk_energies: Vec<f64> = bm.entries.iter().map(|e| e.energy).collect();
            // exp(-c 2^m) at the fitted c is the largest bulk distance
            let split = good_bad_split(&bm.block_spectrum, &bulk_energies, m, bm.max_distance);
            let extra = bm
                .entries
                .iter()
                .map(|e| {
                    let p = pairs.iter().find(|p| p.label == e.label).expect("entry comes from pairs");
                    let f = decay_fit(p, curve.at(p.energy), tau, decay_cut)?;
                    Ok((f.fitted_rate, f.pass))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((r, bm, split, extra))
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<_> = per.iter().map(|(r, bm, _, extra)| (*r, bm, extra.clone())).collect();
    let entries_table = localization::block_match_table(&rows);
    let mut summary = Table::new(
        "blocksplit",
        &[
            "realization",
            "max_distance",
            "fitted_c",
            "threshold",
            "all_below_threshold",
            "good",
            "bad",
            "bad_bound",
            "ambiguous",
        ],
    );
    let mut worst = 0.0f64;
    for (r, bm, split, _) in &per {
        worst = worst.max(bm.max_distance);
        summary.push(vec![
            (*r).into(),
            bm.max_distance.into(),
            bm.fitted_c.into(),
            bm.threshold.into(),
            bm.all_below_threshold.into(),
            split.good.len().into(),
            split.bad.len().into(),
            split.bad_bound.into(),
            split.ambiguous.into(),
        ]);
    }
    let below = per.iter().filter(|p| p.1.all_below_threshold).count();
    let bad_ok = per.iter().filter(|p| p.2.bad_ok).count();
    let mut cs: Vec<f64> = per.iter().map(|p| p.1.fitted_c).collect();
    cs.sort_by(f64::total_cmp);
    let threshold = 0.5 * 8f64.powi(-(m as i32));
    Ok(Outcome {
        checks: vec![
            Check::at_least("all_bulk_distances_below_threshold_fraction", fraction(below, per.len()), 1.0),
            Check::at_least("bad_count_within_bound_fraction", fraction(bad_ok, per.len()), 0.95),
        ],
        results: json!({
            "m": m,
            "box_length": n,
            "realizations": trials,
            "threshold": threshold,
            "worst_distance": worst,
            "median_fitted_c": cs[cs.len() / 2],
            "realizations_below_threshold": below,
            "realizations_bad_within_bound": bad_ok,
        }),
        tables: vec![entries_table, summary],
    })
}

#[allow(clippy::too_many_arguments)]
fn khinchin(
    d: &PotentialDistribution,
    interval: Interval,
    divergent: &ApproxSequence,
    convergent: &ApproxSequence,
    k_max: usize,
    margin: usize,
    trials: usize,
    seed: u64,
) -> Result<Outcome> {
    let rep = khinchin_experiment(d, d.essential_spectrum(), interval, divergent, convergent, k_max, margin, trials, seed)?;
    let min_cover = rep
        .trials
        .iter()
        .map(|t| t.divergent.last().unwrap().1)
        .fold(f64::INFINITY, f64::min)
        / interval.length();
    Ok(Outcome {
        checks: vec![
            Check::at_least("dominating_fraction", fraction(rep.dominating_trials, trials), 0.95),
            Check::at_least("tail_bound_fraction", fraction(rep.tail_bound_trials, trials), 1.0),
            Check::at_least("min_divergent_cover_fraction", min_cover, 0.5),
        ],
        tables: vec![rep.table()],
        results: json!(rep),
    })
}

fn jarnik(
    d: &PotentialDistribution,
    rho: &GaugeFunction,
    alpha: &ApproxSequence,
    k_max: usize,
    cover: Option<(Interval, usize, usize)>,
    seed: u64,
) -> Result<Outcome> {
    let series = series_test(rho, alpha, k_max)?;
    let integ = integrability_test(rho, 1e-12);
    let mut checks = Vec::new();
    let mut series_table = Table::new("jarnik_series", &["K", "partial_sum"]);
    for &(k, s) in &series.partial_sums {
        series_table.push(vec![k.into(), s.into()]);
    }
    let mut results = json!({ "series": series, "integrability": integ });
    if let approx::SequenceKind::Exponential { gamma_bar } = alpha.kind {
        // sum rho(exp(-2 g k)) diverges exactly when ∫_0 rho(t)/t dt does
        if let Some(v) = series.verdict {
            let expected = match integ.verdict {
                Integrability::Integrable => Some(SeriesVerdict::Convergent),
                Integrability::NonIntegrable => Some(SeriesVerdict::Divergent),
                Integrability::Inconclusive => None,
            };
            if let Some(expected) = expected {
                checks.push(Check::flag("series_verdict_matches_integrability", v == expected));
            }
        }
        if matches!(rho.kind, gauge::GaugeKind::ReciprocalLog) && k_max >= 100 && !alpha.clamped {
            let sums = partial_sums_of(|k| rho.value_at_log(alpha.ln_term(k).min(0.0)), &[k_max / 100, k_max]);
            let slope = (sums[1].1 - sums[0].1) / (100f64).ln();
            let target = 1.0 / (2.0 * gamma_bar);
            checks.push(Check::at_most("log_slope_relative_error", (slope / target - 1.0).abs(), 0.05));
            results["log_slope"] = json!({ "slope": slope, "target": target });
        }
    }
    let mut tables = vec![series_table];
    if let Some((interval, n, trials)) = cover {
        let reach = alpha.term(1);
        let window = Interval::new(interval.lo - reach, interval.hi + reach);
        let ks: Vec<usize> = (0..)
            .map(|j| 1usize << j)
            .take_while(|&k| k <= n)
            .filter(|&k| alpha.term(k) <= 1.0)
            .collect();
        let per: Vec<Vec<(usize, f64, usize, f64)>> = (0..trials as u64)
            .into_par_iter()
            .map(|r| {
                let v = d.sample(n, seed, r);
                let points = centers_in_window(&v, window, 1e-13).map_err(in_realization(seed, r))?;
                ks.iter()
                    .map(|&k0| {
                        let pieces: Vec<(f64, f64)> = points
                            .iter()
                            .filter(|p| p.0 >= k0)
                            .map(|&(k, e)| (e, alpha.term(k)))
                            .collect();
                        let target = IntervalUnion::new(pieces.iter().map(|&(c, w)| (c - w, c + w)).collect());
                        let eps = alpha.term(k0);
                        Ok((k0, eps, pieces.len(), cover_sum(&target, &pieces, rho, eps)?))
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut t = Table::new("jarnik_cover", &["realization", "K", "eps", "pieces", "estimate"]);
        for (r, rows) in per.iter().enumerate() {
            for &(k, eps, pieces, est) in rows {
                t.push(vec![r.into(), k.into(), eps.into(), pieces.into(), est.into()]);
            }
        }
        let monotone = per.iter().all(|rows| rows.windows(2).all(|w| w[1].3 <= w[0].3));
        checks.push(Check::flag("tail_cover_estimates_non_increasing", monotone));
        tables.push(t);
        results["cover_note"] = json!(
            "explicit covers give upper bounds only; an infinite gauge measure is not certified by any finite computation"
        );
    }
    Ok(Outcome { checks, results, tables })
}

#[allow(clippy::too_many_arguments)]
fn nonlyap(
    d: &PotentialDistribution,
    energies: &[f64],
    horizon: usize,
    tau: f64,
    trials: usize,
    gamma_ref: Option<f64>,
    gamma_trials: usize,
    seed: u64,
) -> Result<Outcome> {
    let refs: Vec<f64> = match gamma_ref {
        Some(g) => vec![g; energies.len()],
        None => energies
            .iter()
            .map(|&e| lyapunov_estimate(d, e, horizon, gamma_trials, reference_seed(seed)).map(|x| x.gamma_hat))
            .collect::<Result<_>>()?,
    };
    let rows: Vec<Vec<_>> = (0..trials as u64)
        .into_par_iter()
        .map(|r| {
            let v = d.sample(horizon, seed, r);
            energies
                .iter()
                .zip(&refs)
                .map(|(&e, &g)| {
                    let scan = non_lyapunov_scan(&v, e, horizon, tau, g)?;
                    let final_rate = transfer_product(&v, e)?.rate();
                    Ok((scan, final_rate))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "nonlyap",
        &["realization", "E", "gamma_ref", "min_rate", "argmin", "flag", "final_rate", "within_envelope"],
    );
    let (mut flagged, mut within, mut total) = (0, 0, 0);
    for (r, row) in rows.iter().enumerate() {
        for (scan, final_rate) in row {
            let ok = *final_rate <= 1.1 * scan.gamma_ref;
            total += 1;
            flagged += scan.flag as usize;
            within += ok as usize;
            t.push(vec![
                r.into(),
                scan.energy.into(),
                scan.gamma_ref.into(),
                scan.min_rate.into(),
                scan.argmin.into(),
                scan.flag.into(),
                (*final_rate).into(),
                ok.into(),
            ]);
        }
    }
    Ok(Outcome {
        checks: vec![Check::at_least("envelope_fraction", fraction(within, total), 1.0)],
        results: json!({
            "horizon": horizon,
            "tau": tau,
            "flagged_fraction": fraction(flagged, total),
            "envelope_fraction": fraction(within, total),
            "gamma_ref": refs,
        }),
        tables: vec![t],
    })
}

#[allow(clippy::too_many_arguments)]
fn propa(
    d: &PotentialDistribution,
    n: usize,
    (k_min, k_max): (usize, usize),
    trials: usize,
    tau: f64,
    markov_half_width: f64,
    g: &GammaPlan,
    tol: f64,
    seed: u64,
) -> Result<Outcome> {
    let curve = gamma_curve(d, g, seed)?;
    let gamma_bar = curve.max();
    let per: Vec<Vec<_>> = (0..trials as u64)
        .into_par_iter()
        .map(|r| {
            let v = d.sample(n, seed, r);
            let pairs = box_eigenpairs(&v, tol).map_err(in_realization(seed, r))?;
            pairs
                .iter()
                .filter(|p| (k_min..=k_max).contains(&p.center))
                .map(|p| prop_a_check(&v, p.energy, p.center, curve.at(p.energy), gamma_bar, tau, markov_half_width))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "propa",
        &[
            "realization",
            "center",
            "E",
            "gamma_k",
            "log_norm",
            "gamma_bound",
            "within_gamma_bound",
            "step_bound",
            "within_step_bound",
            "radius_resolved",
            "markov_log_derivative_bound",
        ],
    );
    let (mut within, mut total) = (0, 0);
    for (r, reports) in per.iter().enumerate() {
        for rep in reports {
            let p = &rep.points[0];
            total += 1;
            within += p.within_gamma_bound as usize;
            t.push(vec![
                r.into(),
                rep.center.into(),
                rep.eigenvalue.into(),
                rep.gamma_k.into(),
                p.log_norm.into(),
                rep.gamma_bound.into(),
                p.within_gamma_bound.into(),
                rep.step_bound.into(),
                p.within_step_bound.into(),
                rep.radius_resolved.into(),
                rep.markov_log_derivative_bound.into(),
            ]);
        }
    }
    Ok(Outcome {
        checks: vec![Check::at_least("within_gamma_bound_fraction", fraction(within, total), 0.8)],
        results: json!({
            "eigenpairs": total,
            "within_gamma_bound": within,
            "gamma_bar": gamma_bar,
            "tau": tau,
            "markov_half_width": markov_half_width,
        }),
        tables: vec![t],
    })
}
