//! Integrated density of states and eigenvalue-count statistics of finite
//! boxes, all computed from Sturm counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::operator::sturm_counts;
use crate::potential::PotentialSource;
use crate::table::Table;
use crate::transfer::mean_and_std_err;

/// Monte Carlo estimate of `N(E)` on a grid with central-difference densities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdsEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub densities: Vec<f64>,
    pub density_std_errs: Vec<f64>,
    pub block_length: usize,
    pub trials: usize,
    pub seed: u64,
    /// Largest fitted density on the grid.
    pub a_emp: f64,
}

/// Central differences, one-sided at the ends.
fn differences(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (values[b] - values[a]) / (grid[b] - grid[a])
        })
        .collect()
}

impl IdsEstimate {
    /// Builds an estimate from per-trial count fractions `rows[t][i]`.
    pub fn from_trials(grid: Vec<f64>, rows: &[Vec<f64>], block_length: usize, seed: u64) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::invalid("IDS grid needs at least two points"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("IDS grid must be strictly increasing"));
        }
        if rows.is_empty() || rows.iter().any(|r| r.len() != grid.len()) {
            return Err(Error::invalid("trial rows must match the grid"));
        }
        let n = grid.len();
        let per_trial_density: Vec<Vec<f64>> = rows.iter().map(|r| differences(&grid, r)).collect();
        let mut values = Vec::with_capacity(n);
        let mut std_errs = Vec::with_capacity(n);
        let mut densities = Vec::with_capacity(n);
        let mut density_std_errs = Vec::with_capacity(n);
        let mut column = vec![0.0; rows.len()];
        for i in 0..n {
            for (c, r) in column.iter_mut().zip(rows) {
                *c = r[i];
            }
            let (m, s) = mean_and_std_err(&column);
            values.push(m);
            std_errs.push(s);
            for (c, r) in column.iter_mut().zip(&per_trial_density) {
                *c = r[i];
            }
            let (m, s) = mean_and_std_err(&column);
            densities.push(m);
            density_std_errs.push(s);
        }
        let a_emp = densities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            grid,
            values,
            std_errs,
            densities,
            density_std_errs,
            block_length,
            trials: rows.len(),
            seed,
            a_emp,
        })
    }

    /// Estimate from a deterministic IDS table (zero standard errors).
    pub fn from_values(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::from_trials(grid, &[values], 0, 0)
    }

    /// Interlacing slack `2 / L` between the block count fraction and the
    /// line IDS; zero for deterministic tables.
    pub fn boundary_slack(&self) -> f64 {
        if self.block_length == 0 {
            0.0
        } else {
            2.0 / self.block_length as f64
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Linear interpolation of `N` at `e`, clamped to the grid.
    pub fn value_at(&self, e: f64) -> f64 {
        let p = self.grid.partition_point(|&x| x <= e);
        if p == 0 {
            return self.values[0];
        }
        if p == self.grid.len() {
            return *self.values.last().unwrap();
        }
        let (x0, x1) = (self.grid[p - 1], self.grid[p]);
        let t = (e - x0) / (x1 - x0);
        self.values[p - 1] * (1.0 - t) + self.values[p] * t
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new("ids", &["E", "N", "std_err", "density", "density_std_err"]);
        for i in 0..self.grid.len() {
            t.push(vec![
                self.grid[i].into(),
                self.values[i].into(),
                self.std_errs[i].into(),
                self.densities[i].into(),
                self.density_std_errs[i].into(),
            ]);
        }
        t
    }
}

/// Evenly spaced grid with the given step covering `[lo, hi]`.
pub fn energy_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi > lo) {
        return Err(Error::invalid("grid needs hi > lo and a positive step"));
    }
    let n = ((hi - lo) / step).round() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// Mean of `(1/L) #{eigenvalues of H_[1,L] <= E}` over trials, trial `t` on
/// stream `t` of `seed`.
pub fn ids_estimate<S: PotentialSource>(
    source: &S,
    grid: &[f64],
    l: usize,
    trials: usize,
    seed: u64,
) -> Result<IdsEstimate> {
    if l < 16 {
        return Err(Error::invalid(format!("IDS block length must be >= 16, got {l}")));
    }
    if trials == 0 {
        return Err(Error::invalid("IDS estimate needs at least one trial"));
    }
    let rows: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let v = source.sample(l, seed, t);
            sturm_counts(&v, grid).into_iter().map(|c| c as f64 / l as f64).collect()
        })
        .collect();
    IdsEstimate::from_trials(grid.to_vec(), &rows, l, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WegnerCheck {
    pub pass: bool,
    pub max_density: f64,
    pub argmax: f64,
    pub bound: f64,
    pub tol: f64,
}

/// Default relative slack for finite-size and Monte Carlo error.
pub const WEGNER_TOL: f64 = 0.15;

/// Passes iff every fitted density is at most `A (1 + tol)`.
pub fn wegner_check(ids: &IdsEstimate, density_bound: f64, tol: f64) -> Result<WegnerCheck> {
    let spacing = ids.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if spacing > 0.01 + 1e-12 {
        return Err(Error::invalid(format!("grid spacing {spacing} exceeds 0.01")));
    }
    let (i, &max_density) = ids
        .densities
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    Ok(WegnerCheck {
        pass: max_density <= density_bound * (1.0 + tol),
        max_density,
        argmax: ids.grid[i],
        bound: density_bound,
        tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerWegner {
    pub interval: Interval,
    /// Smallest fitted density on grid points inside the interval.
    pub a_i: f64,
    pub a_i_std_err: f64,
    pub at: f64,
    /// `a_i > 3 * a_i_std_err`.
    pub positive: bool,
    pub a_emp: f64,
}

/// Smallest fitted density on `interval`, which must lie in the interior of `s`.
pub fn lower_wegner_check(ids: &IdsEstimate, interval: Interval, s: Interval) -> Result<LowerWegner> {
    if !interval.inside_interior_of(&s) {
        return Err(Error::invalid(format!(
            "interval [{}, {}] is not inside the interior of [{}, {}]",
            interval.lo, interval.hi, s.lo, s.hi
        )));
    }
    let idx: Vec<usize> = (0..ids.grid.len()).filter(|&i| interval.contains(ids.grid[i])).collect();
    let &i = idx
        .iter()
        .min_by(|&&a, &&b| ids.densities[a].total_cmp(&ids.densities[b]))
        .ok_or_else(|| Error::invalid("no grid points inside the interval"))?;
    let a_i = ids.densities[i];
    let se = ids.density_std_errs[i];
    Ok(LowerWegner {
        interval,
        a_i,
        a_i_std_err: se,
        at: ids.grid[i],
        positive: a_i > 3.0 * se && a_i > 0.0,
        a_emp: ids.a_emp,
    })
}

/// Eigenvalue counts of `H_[1,L]` in `(lo, hi]`, one per trial.
pub fn interval_counts<S: PotentialSource>(
    source: &S,
    l: usize,
    interval: Interval,
    trials: usize,
    seed: u64,
) -> Vec<usize> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let v = source.sample(l, seed, t);
            let c = sturm_counts(&v, &[interval.lo, interval.hi]);
            c[1] - c[0]
        })
        .collect()
}

/// Binomial proportion with its standard error.
fn proportion(hits: usize, trials: usize) -> (f64, f64) {
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinamiRow {
    pub r: usize,
    pub empirical: f64,
    pub std_err: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinamiTail {
    pub block_length: usize,
    pub interval: Interval,
    pub density_bound: f64,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<MinamiRow>,
}

impl MinamiTail {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new("minami", &["r", "empirical", "std_err", "bound", "pass"]);
        for r in &self.rows {
            t.push(vec![r.r.into(), r.empirical.into(), r.std_err.into(), r.bound.into(), r.pass.into()]);
        }
        t
    }
}

/// `(A |I| L)^r / r!`.
pub fn minami_bound(density_bound: f64, width: f64, l: usize, r: usize) -> f64 {
    let x = density_bound * width * l as f64;
    (1..=r).fold(1.0, |acc, j| acc * x / j as f64)
}

/// Empirical `P(#(sigma(H_L) ∩ I) >= r')` against the factorial bound for
/// `r'` in `{1, 2, r}`.
pub fn minami_tail<S: PotentialSource>(
    source: &S,
    density_bound: f64,
    l: usize,
    interval: Interval,
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<MinamiTail> {
    if trials < 1000 {
        return Err(Error::invalid(format!("Minami tail needs >= 1000 trials, got {trials}")));
    }
    let counts = interval_counts(source, l, interval, trials, seed);
    let mut orders = vec![1, 2, r];
    orders.sort_unstable();
    orders.dedup();
    let rows = orders
        .into_iter()
        .map(|k| {
            let hits = counts.iter().filter(|&&c| c >= k).count();
            let (p, se) = proportion(hits, trials);
            let bound = minami_bound(density_bound, interval.length(), l, k);
            MinamiRow {
                r: k,
                empirical: p,
                std_err: se,
                bound,
                pass: p <= bound + 3.0 * se,
            }
        })
        .collect();
    Ok(MinamiTail {
        block_length: l,
        interval,
        density_bound,
        trials,
        seed,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountConcentration {
    pub block_length: usize,
    pub interval: Interval,
    /// `a_I |I| L / 2`.
    pub count_threshold: f64,
    pub empirical: f64,
    pub std_err: f64,
    /// `a_I / (15 A_emp)`.
    pub target: f64,
    pub pass: bool,
}

/// Smallest `L` with `min(1, a_I^2) / A * |I| * L >= 100`.
pub fn min_concentration_length(a_i: f64, a_emp: f64, width: f64) -> usize {
    (100.0 * a_emp / (a_i.powi(2).min(1.0) * width)).ceil() as usize
}

/// Empirical probability that `H_[1,L]` has at least `a_I |I| L / 2`
/// eigenvalues in `I`.
pub fn count_concentration<S: PotentialSource>(
    source: &S,
    l: usize,
    interval: Interval,
    a_i: f64,
    a_emp: f64,
    trials: usize,
    seed: u64,
) -> Result<CountConcentration> {
    if !(a_i > 0.0 && a_emp >= a_i) {
        return Err(Error::invalid("need 0 < a_I <= A"));
    }
    let required = min_concentration_length(a_i, a_emp, interval.length());
    if l < required {
        return Err(Error::invalid(format!(
            "block length {l} below the concentration threshold; need L >= {required}"
        )));
    }
    if trials == 0 {
        return Err(Error::invalid("count concentration needs at least one trial"));
    }
    let count_threshold = a_i * interval.length() * l as f64 / 2.0;
    let counts = interval_counts(source, l, interval, trials, seed);
    let hits = counts.iter().filter(|&&c| c as f64 >= count_threshold).count();
    let (p, se) = proportion(hits, trials);
    let target = a_i / (15.0 * a_emp);
    Ok(CountConcentration {
        block_length: l,
        interval,
        count_threshold,
        empirical: p,
        std_err: se,
        target,
        pass: p >= target - 3.0 * se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{ConstantPotential, PotentialDistribution};
    use std::f64::consts::PI;

    #[test]
    fn free_chain_ids() {
        let grid = energy_grid(-3.0, 3.0, 0.01).unwrap();
        let ids = ids_estimate(&ConstantPotential(0.0), &grid, 1024, 1, 0).unwrap();
        assert!(ids.is_monotone());
        assert_eq!(ids.value_at(0.0), 0.5);
        for (&e, &n) in ids.grid.iter().zip(&ids.values) {
            let want = if e < -2.0 {
                0.0
            } else if e > 2.0 {
                1.0
            } else {
                1.0 - (e / 2.0).acos() / PI
            };
            assert!((n - want).abs() < 5e-3, "N({e}) = {n}, want {want}");
        }
    }

    #[test]
    fn free_block_counts_within_boundary_slack() {
        let grid = energy_grid(-1.99, 1.99, 0.01).unwrap();
        for l in [16, 17, 64] {
            let ids = ids_estimate(&ConstantPotential(0.0), &grid, l, 1, 0).unwrap();
            assert_eq!(ids.boundary_slack(), 2.0 / l as f64);
            for (&e, &n) in ids.grid.iter().zip(&ids.values) {
                let line = 1.0 - (e / 2.0).acos() / PI;
                assert!((n - line).abs() <= ids.boundary_slack(), "L {l}: N({e}) = {n} vs {line}");
            }
        }
    }

    #[test]
    fn ids_vanishes_outside_spectrum() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let s = d.essential_spectrum();
        let grid = vec![s.lo - 1.0, s.lo - 0.01, s.hi + 0.01, s.hi + 1.0];
        let ids = ids_estimate(&d, &grid, 64, 20, 1).unwrap();
        assert_eq!(ids.values, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn ids_seeds_agree_and_shift_covariant() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let grid = energy_grid(-2.5, 3.5, 1.0).unwrap();
        let a = ids_estimate(&d, &grid, 256, 200, 1).unwrap();
        let b = ids_estimate(&d, &grid, 256, 200, 2).unwrap();
        let shifted: Vec<f64> = grid.iter().map(|e| e + 1.5).collect();
        let c = ids_estimate(&d.shifted(1.5), &shifted, 256, 200, 3).unwrap();
        for i in 0..grid.len() {
            let tol_ab = 3.0 * a.std_errs[i].hypot(b.std_errs[i]) + 1e-12;
            assert!((a.values[i] - b.values[i]).abs() <= tol_ab);
            let tol_ac = 3.0 * a.std_errs[i].hypot(c.std_errs[i]) + 1e-12;
            assert!((a.values[i] - c.values[i]).abs() <= tol_ac);
        }
    }

    #[test]
    fn wegner_rejects_jump() {
        let grid = energy_grid(0.0, 1.0, 0.005).unwrap();
        let values: Vec<f64> = grid.iter().map(|&e| if e < 0.5 { 0.2 * e } else { 0.2 * e + 0.3 }).collect();
        let ids = IdsEstimate::from_values(grid, values).unwrap();
        assert!(!wegner_check(&ids, 1.0, WEGNER_TOL).unwrap().pass);
        let coarse = IdsEstimate::from_values(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert!(wegner_check(&coarse, 1.0, WEGNER_TOL).is_err());
    }

    #[test]
    fn lower_wegner_edge_rule() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let s = d.essential_spectrum();
        let grid = energy_grid(-3.0, 4.0, 0.05).unwrap();
        let ids = ids_estimate(&d, &grid, 128, 50, 4).unwrap();
        let touching = Interval::new(s.hi - 0.001, s.hi + 1.0);
        assert!(lower_wegner_check(&ids, touching, s).is_err());
        let lw = lower_wegner_check(&ids, Interval::new(0.0, 1.0), s).unwrap();
        assert!(lw.positive);
        assert!(lw.a_i <= lw.a_emp);
    }

    #[test]
    fn minami_bound_values() {
        assert!((minami_bound(1.0, 0.01, 64, 2) - 0.2048).abs() < 1e-15);
        assert_eq!(minami_bound(1.0, 0.01, 64, 0), 1.0);
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let m = minami_tail(&d, 1.0, 64, Interval::new(0.5, 0.51), 0, 2000, 5).unwrap();
        let r0 = m.rows.iter().find(|r| r.r == 0).unwrap();
        assert_eq!((r0.empirical, r0.bound), (1.0, 1.0));
        assert!(m.pass());
    }

    #[test]
    fn concentration_threshold_rejects_short_blocks() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let i = Interval::new(0.0, 0.5);
        assert_eq!(min_concentration_length(0.2, 1.0, 0.5), 5000);
        let err = count_concentration(&d, 2048, i, 0.2, 1.0, 10, 0).unwrap_err();
        assert!(err.to_string().contains("5000"));
    }

    #[test]
    fn concentration_full_spectrum() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let s = d.essential_spectrum();
        // all L eigenvalues lie in S, far above a_I |S| L / 2 for a_I = 0.15
        let c = count_concentration(&d, 1024, s, 0.15, 0.6, 50, 1).unwrap();
        assert_eq!(c.empirical, 1.0);
        assert!(c.pass);
    }
}
