//! Localization structure of box eigenpairs: centers, exponential decay,
//! level spacing, and the matching between box eigenvalues and the spectra of
//! dyadic blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{self, SpectrumResult, TridiagonalBlock};
use crate::table::Table;

/// Eigenpair of a box `[offset, offset + len)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizedEigenpair {
    pub energy: f64,
    pub psi: Vec<f64>,
    /// Site of the largest `|psi|`.
    pub center: usize,
    /// 1-based rank in center order; the k-th pair sits near site k.
    pub label: usize,
    /// Least-squares exponential decay rate of `|psi|` away from the center.
    pub decay_rate: f64,
    /// Coefficient of determination of that fit.
    pub fit_quality: f64,
    /// Site of `psi[0]`.
    pub offset: usize,
}

impl LocalizedEigenpair {
    pub fn at(&self, site: usize) -> f64 {
        if site < self.offset || site >= self.offset + self.psi.len() {
            0.0
        } else {
            self.psi[site - self.offset]
        }
    }
}

/// Counting check `|#{k : center_k <= L} - L| <= sqrt(L)/5` at one `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingBand {
    pub l: usize,
    pub count: usize,
    pub discrepancy: usize,
    pub band: f64,
    pub within: bool,
}

/// Eigenpairs ordered by center, ties broken by energy, with their labels.
pub fn localization_centers(spec: &SpectrumResult) -> Result<Vec<LocalizedEigenpair>> {
    let vectors = spec
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::invalid("localization centers need eigenvectors"))?;
    let mut pairs: Vec<LocalizedEigenpair> = spec
        .eigenvalues
        .iter()
        .zip(vectors)
        .map(|(&energy, ev)| {
            let argmax = ev
                .values
                .iter()
                .enumerate()
                .fold((0, -1.0), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
                .0;
            let center = spec.offset + argmax;
            let (decay_rate, fit_quality) =
                fit_decay(&ev.values, spec.offset, center, 1).unwrap_or((0.0, 0.0));
            LocalizedEigenpair {
                energy,
                psi: ev.values.clone(),
                center,
                label: 0,
                decay_rate: decay_rate.max(0.0),
                fit_quality,
                offset: spec.offset,
            }
        })
        .collect();
    pairs.sort_by(|a, b| a.center.cmp(&b.center).then(a.energy.total_cmp(&b.energy)));
    for (i, p) in pairs.iter_mut().enumerate() {
        p.label = spec.offset + i;
    }
    Ok(pairs)
}

/// Eigenpairs of the box `[1, v.len()]`, ordered by center.
pub fn box_eigenpairs(v: &[f64], tol: f64) -> Result<Vec<LocalizedEigenpair>> {
    let block = TridiagonalBlock::new(1, v.to_vec())?;
    localization_centers(&operator::spectrum(&block, tol, true)?)
}

/// Counting discrepancies at the given cut points.
pub fn counting_band(pairs: &[LocalizedEigenpair], ls: &[usize]) -> Vec<CountingBand> {
    let mut centers: Vec<usize> = pairs.iter().map(|p| p.center).collect();
    centers.sort_unstable();
    ls.iter()
        .map(|&l| {
            let count = centers.partition_point(|&c| c <= l);
            let discrepancy = count.abs_diff(l);
            let band = (l as f64).sqrt() / 5.0;
            CountingBand {
                l,
                count,
                discrepancy,
                band,
                within: discrepancy as f64 <= band,
            }
        })
        .collect()
}

/// `sup_L |#{k : center_k <= L} - L|` over all cut points of the box.
pub fn max_counting_discrepancy(pairs: &[LocalizedEigenpair]) -> usize {
    let n = pairs.len();
    let all: Vec<usize> = (1..=n).collect();
    counting_band(pairs, &all)
        .iter()
        .map(|c| c.discrepancy)
        .max()
        .unwrap_or(0)
}

/// Least-squares fit of `log|psi(x)| = a - rate * |x - center|` over sites with
/// `|x - center| >= min_dist` and `psi(x) != 0`. Returns `(rate, r^2)`.
fn fit_decay(psi: &[f64], offset: usize, center: usize, min_dist: usize) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = psi
        .iter()
        .enumerate()
        .filter_map(|(i, &x)| {
            let d = (offset + i).abs_diff(center);
            (d >= min_dist && x != 0.0).then(|| (d as f64, x.abs().ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((-slope, r2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub pass: bool,
    pub fitted_rate: f64,
    pub fit_quality: f64,
    /// `min_x [-(1 - tau) gamma |x - c| - log|psi(x)|]` over the range; the
    /// bound holds iff this is `>= 0`.
    pub margin: f64,
    pub min_distance: usize,
    pub points: usize,
}

/// Checks `|psi(x)| <= exp(-(1 - tau) gamma |x - c|)` for
/// `|x - c| >= max(sqrt(c), K)` and fits the decay rate there.
pub fn decay_fit(pair: &LocalizedEigenpair, gamma: f64, tau: f64, k_cut: usize) -> Result<DecayFit> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("decay check needs a positive Lyapunov exponent"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!("tau = {tau} outside (0, 1)")));
    }
    let min_distance = ((pair.center as f64).sqrt().ceil() as usize).max(k_cut);
    let mut margin = f64::INFINITY;
    let mut points = 0;
    for (i, &x) in pair.psi.iter().enumerate() {
        let d = (pair.offset + i).abs_diff(pair.center);
        if d >= min_distance {
            points += 1;
            let bound = -(1.0 - tau) * gamma * d as f64;
            margin = margin.min(bound - x.abs().ln());
        }
    }
    if points == 0 {
        return Err(Error::invalid(format!(
            "no sites at distance >= {min_distance} from center {}",
            pair.center
        )));
    }
    let (fitted_rate, fit_quality) =
        fit_decay(&pair.psi, pair.offset, pair.center, min_distance).unwrap_or((f64::NAN, 0.0));
    Ok(DecayFit {
        pass: margin >= 0.0,
        fitted_rate,
        fit_quality,
        margin,
        min_distance,
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingViolation {
    pub k: usize,
    pub k_prime: usize,
    pub gap: f64,
    pub required_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingCheck {
    /// Smallest `C >= 0` with `|E_k - E_k'| >= max(k, K)^-C` for all `k' < k`.
    pub fitted_c: f64,
    pub c_ref: f64,
    /// Pairs needing an exponent above `c_ref`.
    pub violations: Vec<SpacingViolation>,
}

/// Spacing exponent over `(label, energy)` points.
pub fn spacing_check(points: &[(usize, f64)], k_cut: usize, c_ref: f64) -> SpacingCheck {
    let mut sorted: Vec<(usize, f64)> = points.to_vec();
    sorted.sort_by_key(|p| p.0);
    let mut fitted_c: f64 = 0.0;
    let mut violations = Vec::new();
    // energies of smaller labels, kept sorted for nearest-neighbour lookup
    let mut seen: Vec<(f64, usize)> = Vec::with_capacity(sorted.len());
    for &(k, e) in &sorted {
        let p = seen.partition_point(|s| s.0 < e);
        let mut nearest: Option<(f64, usize)> = None;
        for q in [p.checked_sub(1), Some(p)].into_iter().flatten() {
            if let Some(&(e2, k2)) = seen.get(q) {
                let g = (e - e2).abs();
                if nearest.is_none_or(|n| g < n.0) {
                    nearest = Some((g, k2));
                }
            }
        }
        if let Some((gap, k_prime)) = nearest {
            let scale = k.max(k_cut) as f64;
            let required = if gap >= 1.0 {
                0.0
            } else if scale <= 1.0 || gap == 0.0 {
                f64::INFINITY
            } else {
                -gap.ln() / scale.ln()
            };
            fitted_c = fitted_c.max(required);
            if required > c_ref {
                violations.push(SpacingViolation {
                    k,
                    k_prime,
                    gap,
                    required_c: required,
                });
            }
        }
        seen.insert(p, (e, k));
    }
    SpacingCheck {
        fitted_c,
        c_ref,
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMatchEntry {
    pub label: usize,
    pub center: usize,
    pub energy: f64,
    pub distance: f64,
    /// `||(H_m - E_k) psi_k|_block||`.
    pub residual: f64,
    /// Residual divided by `||psi_k|_block||`, an upper bound for `distance`.
    pub normalized_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMatch {
    pub m: u32,
    pub block_offset: usize,
    pub block_len: usize,
    pub entries: Vec<BlockMatchEntry>,
    pub max_distance: f64,
    /// `c` with `max_distance = exp(-c 2^m)`.
    pub fitted_c: f64,
    /// `1/2 * 8^-m`.
    pub threshold: f64,
    pub all_below_threshold: bool,
    pub block_spectrum: Vec<f64>,
}

/// Labels `k` in the bulk window `[4^m + 2^m, 2 * 4^m - 2^m)`.
pub fn bulk_window(m: u32) -> (usize, usize) {
    let q = 4usize.pow(m);
    let h = 2usize.pow(m);
    (q + h, 2 * q - h)
}

/// Distances from box eigenvalues with labels in the bulk window to the
/// spectrum of the dyadic block `H_m`.
pub fn block_match(v: &[f64], m: u32, pairs: &[LocalizedEigenpair], tol: f64) -> Result<BlockMatch> {
    let block = operator::dyadic_block(v, m)?;
    block_match_on(&block, m, pairs, tol)
}

/// [`block_match`] against an arbitrary block.
pub fn block_match_on(
    block: &TridiagonalBlock,
    m: u32,
    pairs: &[LocalizedEigenpair],
    tol: f64,
) -> Result<BlockMatch> {
    block_match_window(block, m, pairs, bulk_window(m), tol)
}

/// [`block_match_on`] with an explicit label window `[lo, hi)`.
pub fn block_match_window(
    block: &TridiagonalBlock,
    m: u32,
    pairs: &[LocalizedEigenpair],
    (lo, hi): (usize, usize),
    tol: f64,
) -> Result<BlockMatch> {
    if lo >= hi {
        return Err(Error::invalid(format!("bulk window of level {m} is empty")));
    }
    let spec = operator::spectrum(block, tol, false)?;
    let (a, b) = (block.offset, block.end());
    let entries: Vec<BlockMatchEntry> = pairs
        .iter()
        .filter(|p| (lo..hi).contains(&p.label))
        .map(|p| {
            let restricted: Vec<f64> = (a..=b).map(|s| p.at(s)).collect();
            let residual = operator::norm(&block.apply_shifted(p.energy, &restricted));
            let mass = operator::norm(&restricted);
            BlockMatchEntry {
                label: p.label,
                center: p.center,
                energy: p.energy,
                distance: spec.distance_to(p.energy),
                residual,
                normalized_residual: residual / mass,
            }
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::invalid(format!("no eigenpairs in bulk window [{lo}, {hi})")));
    }
    let max_distance = entries.iter().map(|e| e.distance).fold(0.0, f64::max);
    let threshold = 0.5 * 8f64.powi(-(m as i32));
    Ok(BlockMatch {
        m,
        block_offset: a,
        block_len: block.len(),
        max_distance,
        fitted_c: -max_distance.ln() / 2f64.powi(m as i32),
        threshold,
        all_below_threshold: entries.iter().all(|e| e.distance < threshold),
        entries,
        block_spectrum: spec.eigenvalues,
    })
}

/// Block match on the four blocks `[4^m + a - 1, 2 * 4^m + b - 2]`,
/// `a, b in {1, 2}`, in the order `(1,1), (1,2), (2,1), (2,2)`.
pub fn block_match_variants(
    v: &[f64],
    m: u32,
    pairs: &[LocalizedEigenpair],
    tol: f64,
) -> Result<Vec<BlockMatch>> {
    let q = 4usize.pow(m);
    let mut out = Vec::with_capacity(4);
    for a in 1..=2 {
        for b in 1..=2 {
            let block = operator::restrict(v, q + a - 1, 2 * q + b - 2)?;
            out.push(block_match_on(&block, m, pairs, tol)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodBadSplit {
    pub threshold: f64,
    /// Indices into the block spectrum.
    pub good: Vec<usize>,
    pub bad: Vec<usize>,
    /// Good eigenvalues within the threshold of more than one box eigenvalue.
    pub ambiguous: usize,
    pub good_bound: usize,
    pub bad_bound: usize,
    pub good_ok: bool,
    pub bad_ok: bool,
}

/// Splits `sigma(H_m)` into eigenvalues within `threshold` of some bulk box
/// eigenvalue and the rest.
pub fn good_bad_split(block_spectrum: &[f64], bulk_energies: &[f64], m: u32, threshold: f64) -> GoodBadSplit {
    let mut sorted = bulk_energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut good = Vec::new();
    let mut bad = Vec::new();
    let mut ambiguous = 0;
    for (i, &e) in block_spectrum.iter().enumerate() {
        let lo = sorted.partition_point(|&x| x < e - threshold);
        let hi = sorted.partition_point(|&x| x <= e + threshold);
        let matches = hi - lo;
        if matches > 0 {
            good.push(i);
            if matches > 1 {
                ambiguous += 1;
            }
        } else {
            bad.push(i);
        }
    }
    let q = 4usize.pow(m);
    let bad_bound = 2usize.pow(m + 1);
    let good_bound = q.saturating_sub(bad_bound);
    GoodBadSplit {
        threshold,
        good_ok: good.len() >= good_bound,
        bad_ok: bad.len() <= bad_bound,
        good,
        bad,
        ambiguous,
        good_bound,
        bad_bound,
    }
}

/// Rows `(realization, m, k, E_k, dist_to_block_spectrum, residual, decay_rate, pass_flags)`.
pub fn block_match_table(rows: &[(u64, &BlockMatch, Vec<(f64, bool)>)]) -> Table {
    let mut t = Table::new(
        "blockmatch",
        &["realization", "m", "k", "E_k", "dist_to_block_spectrum", "residual", "decay_rate", "pass_flags"],
    );
    for (r, bm, extra) in rows {
        for (i, e) in bm.entries.iter().enumerate() {
            let (rate, decay_pass) = extra.get(i).copied().unwrap_or((f64::NAN, false));
            let flags = format!(
                "{}{}",
                if e.distance < bm.threshold { "T" } else { "t" },
                if decay_pass { "D" } else { "d" }
            );
            t.push(vec![
                (*r).into(),
                bm.m.into(),
                e.label.into(),
                e.energy.into(),
                e.distance.into(),
                e.residual.into(),
                rate.into(),
                flags.as_str().into(),
            ]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{PotentialDistribution, PotentialSource};

    fn synthetic(len: usize, c0: usize, rate: f64) -> LocalizedEigenpair {
        let psi: Vec<f64> = (1..=len).map(|x| 0.7 * (-rate * x.abs_diff(c0) as f64).exp()).collect();
        LocalizedEigenpair {
            energy: 0.0,
            psi,
            center: c0,
            label: c0,
            decay_rate: rate,
            fit_quality: 1.0,
            offset: 1,
        }
    }

    #[test]
    fn isolated_site_is_a_center() {
        let mut v = vec![0.0; 30];
        v[0] = 10.0;
        let pairs = box_eigenpairs(&v, 1e-12).unwrap();
        let top = pairs.iter().max_by(|a, b| a.energy.abs().total_cmp(&b.energy.abs())).unwrap();
        assert_eq!(top.center, 1);
        assert_eq!(pairs.len(), 30);
        let labels: Vec<usize> = pairs.iter().map(|p| p.label).collect();
        assert_eq!(labels, (1..=30).collect::<Vec<_>>());
        assert!(pairs.windows(2).all(|w| w[0].center <= w[1].center));
        for p in &pairs {
            assert!((operator::norm(&p.psi) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn decay_fit_recovers_exact_rate() {
        let p = synthetic(200, 100, 0.8);
        let f = decay_fit(&p, 1.0, 0.5, 5).unwrap();
        assert!((f.fitted_rate - 0.8).abs() < 1e-6);
        assert!(f.pass);
    }

    #[test]
    fn decay_pass_monotone_in_tau() {
        let p = synthetic(200, 100, 0.5);
        let taus = [0.05, 0.2, 0.4, 0.5, 0.6, 0.9];
        let passes: Vec<bool> = taus.iter().map(|&t| decay_fit(&p, 1.0, t, 1).unwrap().pass).collect();
        assert_eq!(passes, vec![false, false, false, true, true, true]);
        let tiny = synthetic(3, 2, 0.5);
        assert!(decay_fit(&tiny, 1.0, 0.5, 10).is_err());
    }

    #[test]
    fn spacing_closed_cases() {
        let s = spacing_check(&[(1, 1.0), (2, 1.25)], 1, 2.0);
        assert!((s.fitted_c - 2.0).abs() < 1e-12);
        assert!(s.violations.is_empty());
        let b = TridiagonalBlock::new(1, vec![0.0; 3]).unwrap();
        let sp = operator::spectrum(&b, 1e-13, false).unwrap();
        let pts: Vec<(usize, f64)> = sp.eigenvalues.iter().enumerate().map(|(i, &e)| (i + 1, e)).collect();
        assert_eq!(spacing_check(&pts, 1, 0.0).fitted_c, 0.0);
    }

    #[test]
    fn decoupled_block_matches_exactly() {
        let m = 2;
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let mut v = d.sample(64, 1, 0);
        // barriers right outside the block [16, 31]
        v[14] = 1e12;
        v[31] = 1e12;
        let pairs = box_eigenpairs(&v, 1e-12).unwrap();
        let bm = block_match(&v, m, &pairs, 1e-13).unwrap();
        assert!(bm.max_distance < 1e-8, "{}", bm.max_distance);
    }

    #[test]
    fn block_match_bounds_and_split() {
        let d = PotentialDistribution::uniform(0.0, 5.0).unwrap();
        let v = d.sample(512, 3, 0);
        let pairs = box_eigenpairs(&v, 1e-13).unwrap();
        let bm = block_match(&v, 3, &pairs, 1e-13).unwrap();
        assert_eq!(bm.entries.len(), 48);
        for e in &bm.entries {
            assert!(e.distance <= e.normalized_residual + 1e-9);
        }
        let bulk: Vec<f64> = bm.entries.iter().map(|e| e.energy).collect();
        let split = good_bad_split(&bm.block_spectrum, &bulk, 3, bm.max_distance);
        assert_eq!(split.good.len() + split.bad.len(), 64);
        let none = good_bad_split(&bm.block_spectrum, &bulk, 3, 0.0);
        assert!(none.good.is_empty() || bm.max_distance == 0.0);
        let all = good_bad_split(&bm.block_spectrum, &bm.block_spectrum, 3, 1e-12);
        assert!(all.bad.is_empty());
        assert_eq!(block_match_variants(&v, 3, &pairs, 1e-13).unwrap().len(), 4);
    }

    #[test]
    fn small_level_runs() {
        let d = PotentialDistribution::uniform(0.0, 5.0).unwrap();
        let v = d.sample(32, 3, 0);
        let pairs = box_eigenpairs(&v, 1e-13).unwrap();
        assert!(block_match(&v, 1, &pairs, 1e-13).is_err());
        let block = operator::dyadic_block(&v, 1).unwrap();
        let bm = block_match_window(&block, 1, &pairs, (5, 7), 1e-13).unwrap();
        assert_eq!(bm.entries.len(), 2);
    }

    #[test]
    fn counting_band_free_chain_fails() {
        let pairs = box_eigenpairs(&vec![0.0; 256], 1e-12).unwrap();
        let band = counting_band(&pairs, &[64, 128]);
        assert!(band.iter().any(|b| !b.within));
    }
}
