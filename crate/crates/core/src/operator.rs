//! Finite restrictions of the Jacobi matrix with unit off-diagonals.
//!
//! Eigenvalues come from bisection on Sturm sign counts; eigenvectors from a
//! twisted factorization of `H - E`, which is one step of inverse iteration
//! started from the best coordinate vector. The twisted vector is built by
//! multiplying pivot ratios outward from the twist index, so exponentially
//! small tails keep their relative accuracy instead of drowning in a
//! round-off floor.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::Table;

/// Replacement for pivots that vanish during the Sturm recursion.
const PIVMIN: f64 = 1e-290;
/// Number of shifts carried through one Sturm sweep.
const LANES: usize = 16;

/// Restriction `H_[a, b]` of the operator to consecutive sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalBlock {
    /// Site index (1-based) of the first row.
    pub offset: usize,
    /// Potential values on the block.
    pub diag: Vec<f64>,
}

impl TridiagonalBlock {
    pub fn new(offset: usize, diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("a block needs at least one site"));
        }
        if offset == 0 {
            return Err(Error::Index("site indices start at 1".into()));
        }
        Ok(Self { offset, diag })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Last site index (inclusive).
    pub fn end(&self) -> usize {
        self.offset + self.diag.len() - 1
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let (lo, hi) = self
            .diag
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        if self.diag.len() == 1 {
            (lo, hi)
        } else {
            (lo - 2.0, hi + 2.0)
        }
    }

    /// `(H - e) x`.
    pub fn apply_shifted(&self, e: f64, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut y = (self.diag[i] - e) * x[i];
                if i > 0 {
                    y += x[i - 1];
                }
                if i + 1 < n {
                    y += x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Number of eigenvalues `<= e`.
    pub fn sturm_count(&self, e: f64) -> usize {
        sturm_count(&self.diag, e)
    }

    pub fn char_poly_value(&self, e: f64) -> f64 {
        char_poly(&self.diag, e).value()
    }

    pub fn char_poly_log(&self, e: f64) -> LogDet {
        char_poly(&self.diag, e)
    }
}

/// Block with offset `a` and diagonal `(v_a, ..., v_b)`; indices are 1-based
/// and inclusive.
pub fn restrict(v: &[f64], a: usize, b: usize) -> Result<TridiagonalBlock> {
    if a == 0 || a > b || b > v.len() {
        return Err(Error::Index(format!(
            "block [{a}, {b}] is not inside sites [1, {}]",
            v.len()
        )));
    }
    TridiagonalBlock::new(a, v[a - 1..b].to_vec())
}

/// The dyadic block on sites `[4^m, 2 * 4^m)`.
pub fn dyadic_block(v: &[f64], m: u32) -> Result<TridiagonalBlock> {
    let start = 4usize
        .checked_pow(m)
        .ok_or_else(|| Error::invalid(format!("level {m} too large")))?;
    let end = 2 * start - 1;
    if v.len() < end {
        return Err(Error::Index(format!(
            "level {m} needs {end} sites, potential has {}",
            v.len()
        )));
    }
    restrict(v, start, end)
}

/// Determinant in overflow-safe form `mantissa * 2^exp2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub mantissa: f64,
    pub exp2: i64,
}

impl LogDet {
    pub fn sign(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    pub fn log_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    /// Plain value; overflows to infinity when the determinant is not
    /// representable.
    pub fn value(&self) -> f64 {
        let mut m = self.mantissa;
        let mut e = self.exp2;
        while e > 0 {
            let step = e.min(1000);
            m *= 2f64.powi(step as i32);
            e -= step;
        }
        while e < 0 {
            let step = (-e).min(1000);
            m *= 2f64.powi(-(step as i32));
            e += step;
        }
        m
    }
}

/// `det(e - H)` by the three-term recursion `d_j = (e - v_j) d_{j-1} - d_{j-2}`,
/// rescaling by powers of two whenever `|d_j|` leaves `[2^-512, 2^512]`.
pub fn char_poly(diag: &[f64], e: f64) -> LogDet {
    const HI: f64 = 1.340_780_792_994_259_7e154; // 2^512
    const LO: f64 = 7.458_340_731_200_207e-155; // 2^-512
    let mut prev = 1.0; // d_{-1} placeholder scaled with d_0
    let mut cur = 1.0; // d_0
    let mut exp2: i64 = 0;
    for (j, &v) in diag.iter().enumerate() {
        let next = if j == 0 { e - v } else { (e - v) * cur - prev };
        prev = cur;
        cur = next;
        let a = cur.abs();
        if a > HI {
            cur *= LO;
            prev *= LO;
            exp2 += 512;
        } else if a < LO && a > 0.0 {
            cur *= HI;
            prev *= HI;
            exp2 -= 512;
        }
    }
    LogDet {
        mantissa: cur,
        exp2,
    }
}

/// Number of eigenvalues `<= e` (pivots within `PIVMIN` of zero are counted).
pub fn sturm_count(diag: &[f64], e: f64) -> usize {
    let mut count = 0;
    let mut q = f64::INFINITY;
    for &v in diag {
        q = (v - e) - 1.0 / q;
        if q.abs() < PIVMIN {
            q = -PIVMIN;
        }
        count += (q < 0.0) as usize;
    }
    count
}

/// Sturm counts for several shifts in one sweep; the independent recursions
/// interleave and hide the division latency.
pub fn sturm_counts(diag: &[f64], shifts: &[f64]) -> Vec<usize> {
    let mut out = Vec::with_capacity(shifts.len());
    for chunk in shifts.chunks(LANES) {
        let mut e = [0.0; LANES];
        e[..chunk.len()].copy_from_slice(chunk);
        let c = sturm_lanes(diag, e);
        out.extend_from_slice(&c[..chunk.len()]);
    }
    out
}

#[inline]
fn sturm_lanes(diag: &[f64], e: [f64; LANES]) -> [usize; LANES] {
    let mut q = [f64::INFINITY; LANES];
    let mut count = [0usize; LANES];
    for &v in diag {
        for l in 0..LANES {
            let mut t = (v - e[l]) - 1.0 / q[l];
            if t.abs() < PIVMIN {
                t = -PIVMIN;
            }
            count[l] += (t < 0.0) as usize;
            q[l] = t;
        }
    }
    count
}

/// Eigenvalues with 0-based ranks `ranks` (ascending), all inside `[lo, hi]`.
/// A grid of Sturm counts first narrows every bracket, then each rank is
/// bisected on its own bracket.
fn bisect_range(diag: &[f64], ranks: Range<usize>, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    let cells = ranks.len().next_power_of_two().clamp(1, 4096);
    let grid: Vec<f64> = (1..cells).map(|j| lo + (hi - lo) * j as f64 / cells as f64).collect();
    let counts = sturm_counts(diag, &grid);
    let brackets: Vec<(usize, f64, f64)> = ranks
        .map(|k| {
            // counts are non-decreasing along the grid
            let j = counts.partition_point(|&c| c <= k);
            let a = if j == 0 { lo } else { grid[j - 1] };
            let b = if j == grid.len() { hi } else { grid[j] };
            (k, a, b)
        })
        .collect();
    brackets
        .par_chunks(LANES * 8)
        .map(|r| bisect_ranks(diag, r, tol))
        .collect::<Vec<_>>()
        .concat()
}

/// Bisects each `(rank, lo, hi)` bracket, several ranks per sweep.
fn bisect_ranks(diag: &[f64], brackets: &[(usize, f64, f64)], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(brackets.len());
    for chunk in brackets.chunks(LANES) {
        let mut a = [0.0; LANES];
        let mut b = [0.0; LANES];
        let mut target = [usize::MAX; LANES];
        let mut active = [false; LANES];
        for (l, &(k, lo, hi)) in chunk.iter().enumerate() {
            target[l] = k;
            a[l] = lo;
            b[l] = hi;
            active[l] = true;
        }
        for _ in 0..256 {
            let mut mid = [0.0; LANES];
            let mut any = false;
            for l in 0..LANES {
                if active[l] {
                    let m = 0.5 * (a[l] + b[l]);
                    if b[l] - a[l] <= tol || m <= a[l] || m >= b[l] {
                        active[l] = false;
                    } else {
                        any = true;
                    }
                }
                mid[l] = 0.5 * (a[l] + b[l]);
            }
            if !any {
                break;
            }
            let c = sturm_lanes(diag, mid);
            for l in 0..LANES {
                if active[l] {
                    if c[l] > target[l] {
                        b[l] = mid[l];
                    } else {
                        a[l] = mid[l];
                    }
                }
            }
        }
        for l in 0..chunk.len() {
            out.push(0.5 * (a[l] + b[l]));
        }
    }
    out
}

/// Unit eigenvector with its residual `||(H - E) psi||`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvector {
    pub values: Vec<f64>,
    pub residual: f64,
}

/// Eigenvalues (ascending) of a block, optionally with eigenvectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub offset: usize,
    pub eigenvalues: Vec<f64>,
    pub residual_tol: f64,
    pub eigenvectors: Option<Vec<Eigenvector>>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.eigenvalues.windows(2).all(|w| w[0] < w[1])
    }

    /// Number of returned eigenvalues `<= e`.
    pub fn count_at_most(&self, e: f64) -> usize {
        self.eigenvalues.partition_point(|&x| x <= e)
    }

    /// Distance from `e` to the nearest eigenvalue, infinite if empty.
    pub fn distance_to(&self, e: f64) -> f64 {
        nearest_distance(&self.eigenvalues, e)
    }
}

/// Distance from `e` to a sorted list of points.
pub fn nearest_distance(sorted: &[f64], e: f64) -> f64 {
    let p = sorted.partition_point(|&x| x < e);
    let mut best = f64::INFINITY;
    if p < sorted.len() {
        best = best.min((sorted[p] - e).abs());
    }
    if p > 0 {
        best = best.min((e - sorted[p - 1]).abs());
    }
    best
}

/// All eigenvalues to absolute accuracy `tol`, plus eigenvectors on request.
pub fn spectrum(block: &TridiagonalBlock, tol: f64, want_vectors: bool) -> Result<SpectrumResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("bisection tolerance must be positive"));
    }
    let n = block.len();
    let (lo, hi) = block.gershgorin();
    let eigenvalues = if n == 1 {
        vec![block.diag[0]]
    } else {
        bisect_range(&block.diag, 0..n, lo - tol, hi + tol, tol)
    };
    let eigenvectors = if want_vectors {
        Some(eigenvectors_for(block, &eigenvalues, tol)?)
    } else {
        None
    };
    Ok(SpectrumResult {
        offset: block.offset,
        eigenvalues,
        residual_tol: 100.0 * attainable_tol(tol, lo.abs().max(hi.abs())),
        eigenvectors,
    })
}

/// Eigenvalues in the half-open window `(lo, hi]`, ascending.
pub fn eigenvalues_in(block: &TridiagonalBlock, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    if hi <= lo {
        return Vec::new();
    }
    let counts = sturm_counts(&block.diag, &[lo, hi]);
    if counts[0] == counts[1] {
        return Vec::new();
    }
    let (glo, ghi) = block.gershgorin();
    let (a, b) = (lo.max(glo - tol), hi.min(ghi + tol));
    bisect_range(&block.diag, counts[0]..counts[1], a, b, tol)
}

/// Bisection cannot resolve an eigenvalue below the float spacing at its magnitude.
fn attainable_tol(tol: f64, scale: f64) -> f64 {
    tol.max(4.0 * f64::EPSILON * scale)
}

/// Eigenvectors for already computed eigenvalues (ascending).
pub fn eigenvectors_for(
    block: &TridiagonalBlock,
    eigenvalues: &[f64],
    tol: f64,
) -> Result<Vec<Eigenvector>> {
    let mut vectors: Vec<Eigenvector> = eigenvalues
        .par_iter()
        .enumerate()
        .map(|(i, &e)| eigenvector(block, e, 100.0 * attainable_tol(tol, e.abs()), i))
        .collect::<Result<Vec<_>>>()?;

    // Near-degenerate eigenvalues get Gram-Schmidt against their cluster so
    // the basis stays orthonormal.
    let mut cluster_start = 0;
    for i in 1..eigenvalues.len() {
        let gap = eigenvalues[i] - eigenvalues[i - 1];
        if gap > 1e-7 * eigenvalues[i].abs().max(1.0) {
            cluster_start = i;
            continue;
        }
        let (done, rest) = vectors.split_at_mut(i);
        let v = &mut rest[0].values;
        for prev in &done[cluster_start..i] {
            let dot: f64 = prev.values.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (x, p) in v.iter_mut().zip(&prev.values) {
                *x -= dot * p;
            }
        }
        normalize(v);
        rest[0].residual = norm(&block.apply_shifted(eigenvalues[i], v));
    }
    Ok(vectors)
}

/// Eigenvector for an accurate eigenvalue `e` via the twisted factorization of
/// `H - e`, refined by inverse iteration if the residual is too large.
pub fn eigenvector(
    block: &TridiagonalBlock,
    e: f64,
    residual_tol: f64,
    index: usize,
) -> Result<Eigenvector> {
    let (dp, dm) = pivots(&block.diag, e);
    for r in best_twists(&block.diag, e, &dp, &dm, 3) {
        let mut z = twisted_vector(&dp, &dm, r);
        normalize(&mut z);
        let mut residual = norm(&block.apply_shifted(e, &z));
        let mut sweeps = 0;
        while !(residual <= residual_tol) && sweeps < 3 {
            z = solve_shifted(&block.diag, e, &z);
            normalize(&mut z);
            residual = norm(&block.apply_shifted(e, &z));
            sweeps += 1;
        }
        if residual <= residual_tol {
            return Ok(Eigenvector {
                values: z,
                residual,
            });
        }
    }
    Err(Error::Numeric {
        index,
        message: format!("inverse iteration did not converge for eigenvalue {e}"),
    })
}

fn guard(q: f64) -> f64 {
    if q.abs() < PIVMIN {
        -PIVMIN
    } else {
        q
    }
}

/// The `count` twist indices with smallest `|gamma_r|`, smallest first.
fn best_twists(diag: &[f64], e: f64, dp: &[f64], dm: &[f64], count: usize) -> Vec<usize> {
    let mut gamma: Vec<(f64, usize)> = (0..diag.len())
        .map(|r| ((dp[r] + dm[r] - (diag[r] - e)).abs(), r))
        .collect();
    let count = count.min(gamma.len());
    if count < gamma.len() {
        gamma.select_nth_unstable_by(count, |a, b| a.0.total_cmp(&b.0));
        gamma.truncate(count);
    }
    gamma.sort_by(|a, b| a.0.total_cmp(&b.0));
    gamma.into_iter().map(|g| g.1).collect()
}

/// Top-down and bottom-up pivots of `H - e`.
fn pivots(diag: &[f64], e: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut dp = vec![0.0; n];
    let mut dm = vec![0.0; n];
    dp[0] = guard(diag[0] - e);
    for i in 1..n {
        dp[i] = guard((diag[i] - e) - 1.0 / dp[i - 1]);
    }
    dm[n - 1] = guard(diag[n - 1] - e);
    for i in (0..n - 1).rev() {
        dm[i] = guard((diag[i] - e) - 1.0 / dm[i + 1]);
    }
    (dp, dm)
}

fn twisted_vector(dp: &[f64], dm: &[f64], r: usize) -> Vec<f64> {
    let n = dp.len();
    let mut z = vec![0.0; n];
    z[r] = 1.0;
    for i in (0..r).rev() {
        z[i] = -z[i + 1] / dp[i];
    }
    for i in r + 1..n {
        z[i] = -z[i - 1] / dm[i];
    }
    z
}

/// Solves `(H - e) x = b` by Gaussian elimination with partial pivoting.
fn solve_shifted(diag: &[f64], e: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|v| v - e).collect();
    let mut dl = vec![1.0f64; n.saturating_sub(1)];
    let mut du = vec![1.0; n.saturating_sub(1)];
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            d[i] = guard(d[i]);
            let f = dl[i] / d[i];
            dl[i] = f;
            d[i + 1] -= f * du[i];
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = f;
            let t = du[i];
            du[i] = d[i + 1];
            d[i + 1] = t - f * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
            swapped[i] = true;
        }
    }
    d[n - 1] = guard(d[n - 1]);
    let mut x = b.to_vec();
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            let t = x[i];
            x[i] = x[i + 1];
            x[i + 1] = t - dl[i] * x[i];
        } else {
            x[i + 1] -= dl[i] * x[i];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        if i + 1 < n {
            s -= du[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= du2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    x
}

/// Rows `(block_offset, block_length, index, eigenvalue)`.
pub fn spectrum_table(spectra: &[SpectrumResult]) -> Table {
    let mut t = Table::new("spectrum", &["block_offset", "block_length", "index", "eigenvalue"]);
    for s in spectra {
        for (i, &e) in s.eigenvalues.iter().enumerate() {
            t.push(vec![s.offset.into(), s.len().into(), i.into(), e.into()]);
        }
    }
    t
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let inv = 1.0 / scale;
    scale * x.iter().map(|v| (v * inv).powi(2)).sum::<f64>().sqrt()
}

fn normalize(x: &mut [f64]) {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return;
    }
    for v in x.iter_mut() {
        *v /= scale;
    }
    let n = norm(x);
    for v in x.iter_mut() {
        *v /= n;
    }
}

/// Smallest gap between consecutive eigenvalues.
pub fn min_spacing(spec: &SpectrumResult) -> Result<f64> {
    if spec.eigenvalues.len() < 2 {
        return Err(Error::invalid("spacing needs at least two eigenvalues"));
    }
    Ok(spec
        .eigenvalues
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min))
}

/// Exponent `C` with `min_spacing = len^-C`.
pub fn spacing_exponent(min_spacing: f64, len: usize) -> f64 {
    -min_spacing.ln() / (len as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{PotentialDistribution, PotentialSource};
    use std::f64::consts::PI;

    /// Dense determinant of `e - H` by Gaussian elimination with partial
    /// pivoting, independent of the three-term recursion.
    fn dense_det(diag: &[f64], e: f64) -> f64 {
        let n = diag.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = e - diag[i];
            if i + 1 < n {
                a[i][i + 1] = -1.0;
                a[i + 1][i] = -1.0;
            }
        }
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
            if a[p][c] == 0.0 {
                return 0.0;
            }
            if p != c {
                a.swap(p, c);
                det = -det;
            }
            det *= a[c][c];
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
        det
    }

    #[test]
    fn restrict_slices_one_based() {
        let v = [3.0, 1.0, 4.0];
        let b = restrict(&v, 2, 3).unwrap();
        assert_eq!((b.offset, b.diag.clone()), (2, vec![1.0, 4.0]));
        assert_eq!(restrict(&v, 1, 1).unwrap().len(), 1);
        assert!(matches!(restrict(&v, 2, 5), Err(Error::Index(_))));
        assert!(restrict(&v, 0, 1).is_err());
    }

    #[test]
    fn dyadic_levels() {
        let v: Vec<f64> = (1..=40).map(|x| x as f64).collect();
        let b0 = dyadic_block(&v, 0).unwrap();
        assert_eq!((b0.offset, b0.len()), (1, 1));
        let b1 = dyadic_block(&v, 1).unwrap();
        assert_eq!((b1.offset, b1.len(), b1.diag[0]), (4, 4, 4.0));
        let b2 = dyadic_block(&v, 2).unwrap();
        assert_eq!((b2.offset, b2.len(), b2.end()), (16, 16, 31));
        assert!(dyadic_block(&v, 3).is_err());
    }

    #[test]
    fn char_poly_small_cases() {
        let b = TridiagonalBlock::new(1, vec![0.7]).unwrap();
        assert_eq!(b.char_poly_value(2.0), 2.0 - 0.7);
        let b = TridiagonalBlock::new(1, vec![0.3, -1.2]).unwrap();
        let e = 0.9;
        assert!((b.char_poly_value(e) - ((e - 0.3) * (e + 1.2) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn char_poly_matches_dense_determinant() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        for s in 0..50 {
            let v = d.sample(8, 11, s);
            let b = TridiagonalBlock::new(1, v.clone()).unwrap();
            for e in [-2.5, -0.3, 0.41, 1.7, 3.2] {
                let want = dense_det(&v, e);
                let got = b.char_poly_value(e);
                assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-300), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn char_poly_log_survives_long_blocks() {
        let v = vec![0.0; 4096];
        let b = TridiagonalBlock::new(1, v).unwrap();
        // det(E - H) for the free chain at E = 3 is U_n(3/2) ~ lambda^(n+1)/(lambda - 1/lambda)
        let ld = b.char_poly_log(3.0);
        let lam: f64 = (3.0 + 5f64.sqrt()) / 2.0;
        let want = 4097.0 * lam.ln() - (lam - 1.0 / lam).ln();
        assert!(ld.sign() > 0.0);
        assert!((ld.log_abs() - want).abs() < 1e-9);
        assert!(b.char_poly_value(3.0).is_infinite());
    }

    #[test]
    fn free_laplacian_eigenvalues() {
        let b = TridiagonalBlock::new(1, vec![0.0; 3]).unwrap();
        let s = spectrum(&b, 1e-13, false).unwrap();
        let want = [-(2f64.sqrt()), 0.0, 2f64.sqrt()];
        for (g, w) in s.eigenvalues.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
        assert!((min_spacing(&s).unwrap() - 2f64.sqrt()).abs() < 1e-12);

        let n = 50;
        let b = TridiagonalBlock::new(1, vec![0.0; n]).unwrap();
        let s = spectrum(&b, 1e-13, false).unwrap();
        for (j, g) in s.eigenvalues.iter().enumerate() {
            let w = 2.0 * ((n - j) as f64 * PI / (n + 1) as f64).cos();
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_shift_moves_spectrum() {
        let base = spectrum(&TridiagonalBlock::new(1, vec![0.0; 17]).unwrap(), 1e-13, false).unwrap();
        let shifted = spectrum(&TridiagonalBlock::new(1, vec![2.5; 17]).unwrap(), 1e-13, false).unwrap();
        for (a, b) in base.eigenvalues.iter().zip(&shifted.eigenvalues) {
            assert!((b - a - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn min_spacing_simple() {
        let s = SpectrumResult {
            offset: 1,
            eigenvalues: vec![0.0, 1.0, 1.25],
            residual_tol: 1e-10,
            eigenvectors: None,
        };
        assert_eq!(min_spacing(&s).unwrap(), 0.25);
        let single = SpectrumResult {
            eigenvalues: vec![0.0],
            ..s
        };
        assert!(min_spacing(&single).is_err());
    }

    #[test]
    fn one_site_block() {
        let b = TridiagonalBlock::new(7, vec![0.3]).unwrap();
        let s = spectrum(&b, 1e-12, true).unwrap();
        assert_eq!(s.eigenvalues, vec![0.3]);
        assert_eq!(s.eigenvectors.unwrap()[0].values, vec![1.0]);
    }

    #[test]
    fn random_block_invariants() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        for seed in 0..4 {
            let v = d.sample(200, seed, 0);
            let b = TridiagonalBlock::new(1, v.clone()).unwrap();
            let s = spectrum(&b, 1e-12, true).unwrap();
            assert_eq!(s.len(), 200);
            assert!(s.is_strictly_increasing());
            let trace: f64 = v.iter().sum();
            let esum: f64 = s.eigenvalues.iter().sum();
            assert!((trace - esum).abs() <= 1e-9 * trace.abs());
            let (glo, ghi) = b.gershgorin();
            assert!(s.eigenvalues.iter().all(|&e| e >= glo && e <= ghi));
            let vecs = s.eigenvectors.as_ref().unwrap();
            for ev in vecs {
                assert!(ev.residual <= s.residual_tol);
            }
            for i in 0..200 {
                for j in i..200 {
                    let dot: f64 = vecs[i].values.iter().zip(&vecs[j].values).map(|(a, b)| a * b).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-8, "gram[{i},{j}] = {dot}");
                }
            }
        }
    }

    #[test]
    fn eigenvalues_in_window_match_full_spectrum() {
        let d = PotentialDistribution::uniform(0.0, 5.0).unwrap();
        let v = d.sample(300, 3, 0);
        let b = TridiagonalBlock::new(1, v).unwrap();
        let full = spectrum(&b, 1e-12, false).unwrap();
        let part = eigenvalues_in(&b, 1.0, 2.0, 1e-12);
        let want: Vec<f64> = full.eigenvalues.iter().cloned().filter(|&e| e > 1.0 && e <= 2.0).collect();
        assert_eq!(part.len(), want.len());
        for (a, b) in part.iter().zip(&want) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn sturm_counts_batch_matches_scalar() {
        let d = PotentialDistribution::uniform(-1.0, 1.0).unwrap();
        let v = d.sample(100, 9, 0);
        let shifts: Vec<f64> = (0..11).map(|i| -3.0 + 0.6 * i as f64).collect();
        let batch = sturm_counts(&v, &shifts);
        for (s, c) in shifts.iter().zip(batch) {
            assert_eq!(sturm_count(&v, *s), c);
        }
    }

    /// Roots of the dense determinant by sign-change scan and bisection,
    /// refining the grid until all `n` roots are bracketed.
    fn dense_roots(diag: &[f64]) -> Vec<f64> {
        let n = diag.len();
        let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.5;
        let hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.5;
        let mut cells = 4096;
        loop {
            let h = (hi - lo) / cells as f64;
            let mut roots = Vec::new();
            let mut prev = dense_det(diag, lo);
            for k in 1..=cells {
                let x = lo + k as f64 * h;
                let cur = dense_det(diag, x);
                if prev.signum() != cur.signum() {
                    let (mut a, mut b) = (x - h, x);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if m <= a || m >= b {
                            break;
                        }
                        if dense_det(diag, m).signum() == dense_det(diag, a).signum() {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    roots.push(0.5 * (a + b));
                }
                prev = cur;
            }
            if roots.len() == n {
                return roots;
            }
            cells *= 8;
            assert!(cells < 1 << 26, "grid scan could not separate roots");
        }
    }

    #[test]
    fn bisection_matches_dense_root_scan() {
        let d = PotentialDistribution::uniform(-1.0, 2.0).unwrap();
        for s in 0..10 {
            let v = d.sample(12, 21, s);
            let b = TridiagonalBlock::new(1, v.clone()).unwrap();
            let got = spectrum(&b, 1e-13, false).unwrap().eigenvalues;
            let want = dense_roots(&v);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "{g} vs {w}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn sturm_count_equals_eigenvalues_below(seed in 0u64..1000, e in -3.0f64..4.0) {
            let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
            let v = d.sample(60, seed, 0);
            let b = TridiagonalBlock::new(1, v).unwrap();
            let s = spectrum(&b, 1e-13, false).unwrap();
            let gap = s.distance_to(e);
            proptest::prop_assume!(gap > 1e-10);
            proptest::prop_assert_eq!(b.sturm_count(e), s.count_at_most(e));
        }
    }

    #[test]
    fn localized_tails_are_resolved() {
        // strong disorder: tails must decay far below machine epsilon
        let d = PotentialDistribution::uniform(0.0, 5.0).unwrap();
        let v = d.sample(400, 5, 0);
        let b = TridiagonalBlock::new(1, v).unwrap();
        let s = spectrum(&b, 1e-12, true).unwrap();
        let vecs = s.eigenvectors.unwrap();
        let tiny = vecs
            .iter()
            .filter(|ev| ev.values.iter().any(|x| x.abs() > 0.0 && x.abs() < 1e-30))
            .count();
        assert!(tiny > 300, "only {tiny} eigenvectors reach 1e-30");
    }
}
