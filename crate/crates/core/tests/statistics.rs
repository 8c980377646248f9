//! Monte Carlo properties at desk scale. Seeds are fixed; tolerances are
//! multiples of the reported standard errors where one is available.

use anderson_lab::approx::{bprime_chain, clamp_sequence, delta_set, ApproxSequence, Interval};
use anderson_lab::localization::{box_eigenpairs, spacing_check};
use anderson_lab::operator::{dyadic_block, eigenvalues_in, min_spacing, spacing_exponent, spectrum, TridiagonalBlock};
use anderson_lab::potential::{sample_potential, PotentialDistribution, PotentialSource};
use anderson_lab::spectralstats::{count_concentration, energy_grid, ids_estimate, lower_wegner_check};
use anderson_lab::transfer::{lyapunov_curve, non_lyapunov_scan};
use rayon::prelude::*;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

#[test]
fn uniform_samples_follow_the_law() {
    let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
    let v = sample_potential(&d, 1_000_000, 42, 0).unwrap();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
}

#[test]
fn block_spacing_exponent_is_moderate() {
    let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
    let mut cs: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|t| {
            let block = TridiagonalBlock::new(1, d.sample(256, 8, t)).unwrap();
            let spec = spectrum(&block, 1e-14, false).unwrap();
            spacing_exponent(min_spacing(&spec).unwrap(), 256)
        })
        .collect();
    cs.sort_by(f64::total_cmp);
    let worst = *cs.last().unwrap();
    println!("spacing exponent C over 200 blocks: median {:.3}, max {worst:.3}", quantile(&cs, 0.5));
    assert!(worst <= 4.0, "C = {worst}");
}

#[test]
fn localized_spacing_exponent_is_stable() {
    let d = PotentialDistribution::uniform(0.0, 5.0).unwrap();
    let mut cs: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|t| {
            let pairs = box_eigenpairs(&d.sample(256, 9, t), 1e-13).unwrap();
            let points: Vec<(usize, f64)> = pairs.iter().map(|p| (p.label, p.energy)).collect();
            spacing_check(&points, 16, 4.0).fitted_c
        })
        .collect();
    cs.sort_by(f64::total_cmp);
    let (q1, med, q3) = (quantile(&cs, 0.25), quantile(&cs, 0.5), quantile(&cs, 0.75));
    println!("fitted spacing exponent over 100 realizations: quartiles {q1:.3} {med:.3} {q3:.3}, max {:.3}", cs[99]);
    assert!(cs.iter().all(|c| c.is_finite() && *c >= 0.0));
    assert!(q3 - q1 < med, "spread {q1} .. {q3} around {med}");
}

#[test]
fn ids_density_is_positive_inside_the_spectrum() {
    let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
    let grid = energy_grid(-0.5, 1.5, 0.01).unwrap();
    let ids = ids_estimate(&d, &grid, 1024, 200, 10).unwrap();
    let lower = lower_wegner_check(&ids, Interval::new(0.0, 1.0), d.essential_spectrum()).unwrap();
    assert!(lower.positive, "a_I = {} +- {}", lower.a_i, lower.a_i_std_err);
}

#[test]
fn counts_concentrate_on_a_half_unit_interval() {
    let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
    let i = Interval::new(2.1, 2.6);
    let grid = energy_grid(-2.5, 3.5, 0.005).unwrap();
    let ids = ids_estimate(&d, &grid, 1024, 500, 11).unwrap();
    let lower = lower_wegner_check(&ids, i, d.essential_spectrum()).unwrap();
    let c = count_concentration(&d, 2048, i, lower.a_i, ids.a_emp, 500, 12).unwrap();
    println!(
        "a_I {:.4}, A_emp {:.4}, P(count >= {:.1}) = {:.3} +- {:.3} vs target {:.4}",
        lower.a_i, ids.a_emp, c.count_threshold, c.empirical, c.std_err, c.target
    );
    assert!(c.pass);
}

#[test]
fn block_neighbourhood_measure_is_count_times_width() {
    let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
    let i = Interval::new(0.2, 0.8);
    let alpha = clamp_sequence(&ApproxSequence::harmonic(0.5).unwrap());
    let m = 3;
    let width = alpha.term(2 * 4usize.pow(m));
    let per: Vec<(f64, usize)> = (0..100u64)
        .into_par_iter()
        .map(|t| {
            let v = d.sample(2 * 4usize.pow(m), 13, t);
            let block = dyadic_block(&v, m).unwrap();
            let inside = eigenvalues_in(&block, i.lo, i.hi, 1e-13);
            let spec = spectrum(&block, 1e-13, false).unwrap().eigenvalues;
            (delta_set(&spec, i, &alpha, m).unwrap().measure(), inside.len())
        })
        .collect();
    let mean_measure = per.iter().map(|p| p.0).sum::<f64>() / 100.0;
    let mean_count = per.iter().map(|p| p.1 as f64).sum::<f64>() / 100.0;
    let expected = width * mean_count;
    assert!(
        (mean_measure / expected - 1.0).abs() <= 0.2,
        "measure {mean_measure} vs {expected} (count {mean_count}, width {width})"
    );
}

#[test]
fn avoiding_set_rarely_stalls() {
    let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
    let i = Interval::new(0.2, 0.8);
    let alpha = clamp_sequence(&ApproxSequence::harmonic(1.0).unwrap());
    let levels = 2..=5u32;
    let n = 2 * 4usize.pow(*levels.end());
    let zeta = 0.05;
    let events: usize = (0..200u64)
        .into_par_iter()
        .map(|t| {
            let v = d.sample(n, 14, t);
            let spectra: Vec<(u32, Vec<f64>)> = levels
                .clone()
                .map(|m| (m, spectrum(&dyadic_block(&v, m).unwrap(), 1e-13, false).unwrap().eigenvalues))
                .collect();
            let chain = bprime_chain(&spectra, i, &alpha).unwrap();
            assert!(chain.is_nested());
            !chain.stall_levels(zeta).is_empty() as usize
        })
        .sum();
    assert!(events < 10, "{events} of 200 realizations stall");
}

/// At an eigenvalue with center `k` every entry of `Phi_2k` is a determinant of
/// a block holding the localized state, so the growth rate dips towards
/// `gamma / 2`; a nearby non-eigenvalue energy does not dip.
#[test]
fn growth_dips_at_eigenvalues() {
    let d = PotentialDistribution::uniform(0.0, 5.0).unwrap();
    let s = d.essential_spectrum();
    let grid: Vec<f64> = (0..=40).map(|i| s.lo + s.length() * i as f64 / 40.0).collect();
    let gamma = lyapunov_curve(&d, &grid, 20_000, 8, 16).unwrap();
    let rows: Vec<(f64, f64, bool)> = (0..4u64)
        .into_par_iter()
        .flat_map_iter(|r| {
            let v = d.sample(1024, 15, r);
            let pairs = box_eigenpairs(&v, 1e-13).unwrap();
            let gamma = &gamma;
            pairs
                .into_iter()
                .filter(|p| (100..=300).contains(&p.center))
                .map(move |p| {
                    let n = 2 * p.center;
                    let at = non_lyapunov_scan(&v, p.energy, n, 0.5, gamma.at(p.energy)).unwrap();
                    let e = p.energy + 0.05;
                    let off = non_lyapunov_scan(&v, e, n, 0.5, gamma.at(e)).unwrap();
                    (at.min_rate / at.gamma_ref, off.min_rate / off.gamma_ref, at.flag)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let median = |mut x: Vec<f64>| {
        x.sort_by(f64::total_cmp);
        x[x.len() / 2]
    };
    let at = median(rows.iter().map(|r| r.0).collect());
    let off = median(rows.iter().map(|r| r.1).collect());
    let flagged = rows.iter().filter(|r| r.2).count();
    println!(
        "{} eigenvalues: median min rate / gamma {at:.3} (controls {off:.3}); flagged at tau = 0.5: {flagged}",
        rows.len()
    );
    assert!(at <= 0.75, "{at}");
    assert!(at + 0.1 <= off, "{at} vs {off}");
    assert!(flagged > 0);
}
