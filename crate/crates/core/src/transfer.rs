//! Transfer matrices `T_n(E) = [[E - v_n, -1], [1, 0]]`, their ordered
//! products `Phi_n = T_n ... T_1`, and Lyapunov-exponent estimates.
//!
//! Products are kept as a 2x2 matrix times `2^exp2`. Rescaling uses exact
//! powers of two, so renormalization introduces no rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialSource;
use crate::table::Table;

pub type Mat2 = [[f64; 2]; 2];

const RENORM_HI: f64 = 18_446_744_073_709_551_616.0; // 2^64
const RENORM_LO: f64 = 1.0 / RENORM_HI;

pub fn transfer_step(e: f64, v: f64) -> Mat2 {
    [[e - v, -1.0], [1.0, 0.0]]
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Largest singular value of a 2x2 matrix.
pub fn norm2(m: &Mat2) -> f64 {
    let [[a, b], [c, d]] = *m;
    let s = ((a + d).powi(2) + (b - c).powi(2)).sqrt();
    let t = ((a - d).powi(2) + (b + c).powi(2)).sqrt();
    0.5 * (s + t)
}

pub fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        [
            x[0][0] * y[0][0] + x[0][1] * y[1][0],
            x[0][0] * y[0][1] + x[0][1] * y[1][1],
        ],
        [
            x[1][0] * y[0][0] + x[1][1] * y[1][0],
            x[1][0] * y[0][1] + x[1][1] * y[1][1],
        ],
    ]
}

fn max_abs(m: &Mat2) -> f64 {
    m[0][0].abs().max(m[0][1].abs()).max(m[1][0].abs()).max(m[1][1].abs())
}

/// Binary exponent `e` with `x = f * 2^e`, `f` in `[1/2, 1)`, for finite normal `x > 0`.
fn binary_exponent(x: f64) -> i64 {
    ((x.to_bits() >> 52) & 0x7ff) as i64 - 1022
}

fn scale_pow2(m: &mut Mat2, k: i64) {
    let f = 2f64.powi(k as i32);
    for row in m.iter_mut() {
        for x in row.iter_mut() {
            *x *= f;
        }
    }
}

/// `Phi_n(E) = matrix * 2^exp2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferProduct {
    pub matrix: Mat2,
    /// Natural-log scale factor, `exp2 * ln 2`.
    pub log_scale: f64,
    pub exp2: i64,
    pub n: usize,
    pub energy: f64,
}

impl TransferProduct {
    pub fn identity(energy: f64) -> Self {
        Self {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
            log_scale: 0.0,
            exp2: 0,
            n: 0,
            energy,
        }
    }

    /// Left-multiplies by `T(E, v)`.
    #[inline]
    pub fn push(&mut self, v: f64) {
        let a = self.energy - v;
        let m = &mut self.matrix;
        let r0 = [a * m[0][0] - m[1][0], a * m[0][1] - m[1][1]];
        m[1] = m[0];
        m[0] = r0;
        self.n += 1;
        let big = max_abs(m);
        if !(RENORM_LO..=RENORM_HI).contains(&big) {
            self.rescale(big);
        }
    }

    fn rescale(&mut self, big: f64) {
        if big == 0.0 || !big.is_finite() {
            return;
        }
        let k = binary_exponent(big);
        scale_pow2(&mut self.matrix, -k);
        self.exp2 += k;
        self.log_scale = self.exp2 as f64 * std::f64::consts::LN_2;
    }

    /// Scales the stored matrix so its largest entry lies in `[1/2, 1)`.
    pub fn normalize(&mut self) {
        let big = max_abs(&self.matrix);
        self.rescale(big);
    }

    pub fn log_norm(&self) -> f64 {
        norm2(&self.matrix).ln() + self.log_scale
    }

    /// `(1/n) log ||Phi_n||`.
    pub fn rate(&self) -> f64 {
        self.log_norm() / self.n as f64
    }

    /// Scale-invariant defect of the determinant identity,
    /// `|det(matrix) - exp(-2 log_scale)| / ||matrix||^2`. Stays at round-off
    /// level for every `n`, while the relative form is only meaningful while
    /// `||Phi_n||` is moderate.
    pub fn determinant_defect(&self) -> f64 {
        let target = (-2.0 * self.log_scale).exp();
        (det2(&self.matrix) - target).abs() / norm2(&self.matrix).powi(2)
    }

    /// `det(matrix) * exp(2 log_scale)`, equal to 1 in exact arithmetic.
    pub fn determinant(&self) -> f64 {
        det2(&self.matrix) * (2.0 * self.log_scale).exp()
    }

    /// Plain matrix value; overflows when `||Phi_n||` is not representable.
    pub fn value(&self) -> Mat2 {
        let mut m = self.matrix;
        let f = std::f64::consts::LN_2 * self.exp2 as f64;
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                *x *= f.exp();
            }
        }
        m
    }
}

/// `Phi_n(E)` for the whole sequence.
pub fn transfer_product(v: &[f64], e: f64) -> Result<TransferProduct> {
    if v.is_empty() {
        return Err(Error::invalid("transfer product needs at least one site"));
    }
    Ok(product_from_iter(v.iter().copied(), e))
}

/// Product of the supplied factors, normalized at the end.
pub fn product_from_iter(v: impl IntoIterator<Item = f64>, e: f64) -> TransferProduct {
    let mut p = TransferProduct::identity(e);
    for x in v {
        p.push(x);
    }
    p.normalize();
    p
}

/// `Phi_n(E)` together with `log ||Phi_j(E)||` for every `j = 1..=n`.
pub fn transfer_product_traced(v: &[f64], e: f64) -> Result<(TransferProduct, Vec<f64>)> {
    if v.is_empty() {
        return Err(Error::invalid("transfer product needs at least one site"));
    }
    let mut p = TransferProduct::identity(e);
    let mut trace = Vec::with_capacity(v.len());
    for &x in v {
        p.push(x);
        trace.push(p.log_norm());
    }
    p.normalize();
    Ok((p, trace))
}

/// Monte Carlo estimate of the Lyapunov exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub gamma_hat: f64,
    pub std_err: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Mean of `(1/n) log ||Phi_n(E)||` over independent trials; trial `t` draws its
/// potential from stream `t` of `seed`.
pub fn lyapunov_estimate<S: PotentialSource>(
    source: &S,
    e: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if n < 1000 {
        return Err(Error::invalid(format!("lyapunov estimate needs n >= 1000, got {n}")));
    }
    if trials < 2 {
        return Err(Error::invalid(format!("lyapunov estimate needs at least 2 trials, got {trials}")));
    }
    let rates: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| product_from_iter(source.sampler(seed, t).take(n), e).rate())
        .collect();
    let (mean, std_err) = mean_and_std_err(&rates);
    Ok(LyapunovEstimate {
        energy: e,
        gamma_hat: mean,
        std_err,
        n,
        trials,
        seed,
    })
}

/// Lyapunov estimates on an energy grid, linearly interpolated in between and
/// held constant outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCurve {
    pub estimates: Vec<LyapunovEstimate>,
}

impl LyapunovCurve {
    pub fn at(&self, e: f64) -> f64 {
        let est = &self.estimates;
        let j = est.partition_point(|x| x.energy < e);
        if j == 0 {
            return est[0].gamma_hat;
        }
        if j == est.len() {
            return est[j - 1].gamma_hat;
        }
        let (a, b) = (&est[j - 1], &est[j]);
        a.gamma_hat + (b.gamma_hat - a.gamma_hat) * (e - a.energy) / (b.energy - a.energy)
    }

    pub fn max(&self) -> f64 {
        self.estimates.iter().map(|x| x.gamma_hat).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.estimates.iter().map(|x| x.gamma_hat).fold(f64::INFINITY, f64::min)
    }
}

/// [`lyapunov_estimate`] at each energy of a strictly increasing grid.
pub fn lyapunov_curve<S: PotentialSource>(
    source: &S,
    energies: &[f64],
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovCurve> {
    if energies.is_empty() || energies.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("energy grid must be non-empty and strictly increasing"));
    }
    let estimates = energies
        .iter()
        .map(|&e| lyapunov_estimate(source, e, n, trials, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(LyapunovCurve { estimates })
}

/// Sample mean and standard error of the mean, folded in index order.
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `(n, (1/n) log ||Phi_n(E)||)` at each checkpoint, from one sweep.
pub fn growth_profile(v: &[f64], e: f64, checkpoints: &[usize]) -> Result<Vec<(usize, f64)>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("checkpoints must be strictly increasing"));
    }
    if let Some(&last) = checkpoints.last() {
        if checkpoints[0] == 0 || last > v.len() {
            return Err(Error::Index(format!(
                "checkpoints must lie in [1, {}]",
                v.len()
            )));
        }
    }
    let mut p = TransferProduct::identity(e);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for &x in v {
        let Some(&&c) = next.peek() else { break };
        p.push(x);
        if p.n == c {
            out.push((c, p.rate()));
            next.next();
        }
    }
    Ok(out)
}

/// Finite-horizon proxy for membership in the non-Lyapunov set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonLyapunovScan {
    pub energy: f64,
    pub horizon: usize,
    pub tau: f64,
    pub gamma_ref: f64,
    /// `min_{sqrt(N) <= n <= N} (1/n) log ||Phi_n(E)||`.
    pub min_rate: f64,
    /// Step at which the minimum is attained.
    pub argmin: usize,
    pub flag: bool,
}

pub fn non_lyapunov_scan(
    v: &[f64],
    e: f64,
    horizon: usize,
    tau: f64,
    gamma_ref: f64,
) -> Result<NonLyapunovScan> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau = {tau} violates 0 ≤ τ < 1")));
    }
    if !(gamma_ref > 0.0) {
        return Err(Error::invalid("reference Lyapunov exponent must be positive"));
    }
    if horizon == 0 || horizon > v.len() {
        return Err(Error::Index(format!(
            "horizon {horizon} outside [1, {}]",
            v.len()
        )));
    }
    let start = ((horizon as f64).sqrt().ceil() as usize).max(1);
    let mut p = TransferProduct::identity(e);
    let mut best = (f64::INFINITY, start);
    for &x in &v[..horizon] {
        p.push(x);
        if p.n >= start {
            let r = p.rate();
            if r < best.0 {
                best = (r, p.n);
            }
        }
    }
    Ok(NonLyapunovScan {
        energy: e,
        horizon,
        tau,
        gamma_ref,
        min_rate: best.0,
        argmin: best.1,
        flag: best.0 <= tau * gamma_ref,
    })
}

/// One energy probed by [`prop_a_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropAPoint {
    pub label: String,
    pub energy: f64,
    pub log_norm: f64,
    /// Within `12 tau gamma_k k`.
    pub within_gamma_bound: bool,
    /// Within `6 tau n` with `n = 2k`.
    pub within_step_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropAReport {
    pub eigenvalue: f64,
    pub center: usize,
    pub gamma_k: f64,
    pub gamma_bar: f64,
    pub tau: f64,
    /// `exp(-2 gamma_bar k)`.
    pub radius: f64,
    /// False when `E_k +- radius` rounds to `E_k`; only `E_k` is probed then.
    pub radius_resolved: bool,
    pub gamma_bound: f64,
    pub step_bound: f64,
    pub points: Vec<PropAPoint>,
    /// Energy outside the hypothesis, reported without a verdict.
    pub control: PropAPoint,
    /// Half-width of the Markov interval around `E_k`.
    pub markov_half_width: f64,
    /// `max log ||Phi_{2k}||` over a grid on the Markov interval.
    pub markov_max_log_norm: f64,
    /// `log(n^2 / w) + max log ||Phi_{2k}||`, a bound for the log of the
    /// derivative of every entry on the interval.
    pub markov_log_derivative_bound: f64,
}

/// Evaluates `log ||Phi_{2k}(E)||` near an eigenvalue with localization center
/// `k` against both normalizations of the growth bound.
#[allow(clippy::too_many_arguments)]
pub fn prop_a_check(
    v: &[f64],
    e_k: f64,
    k: usize,
    gamma_k: f64,
    gamma_bar: f64,
    tau: f64,
    markov_half_width: f64,
) -> Result<PropAReport> {
    if !(gamma_k > 0.0 && gamma_bar >= gamma_k) {
        return Err(Error::invalid("need gamma_bar >= gamma_k > 0"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau = {tau} outside [0, 1]")));
    }
    if !(markov_half_width > 0.0) {
        return Err(Error::invalid("Markov half-width must be positive"));
    }
    let n = 2 * k;
    if k == 0 || n > v.len() {
        return Err(Error::Index(format!("2k = {n} outside [2, {}]", v.len())));
    }
    let sites = &v[..n];
    let gamma_bound = 12.0 * tau * gamma_k * k as f64;
    let step_bound = 6.0 * tau * n as f64;
    let probe = |label: &str, e: f64| {
        let ln = product_from_iter(sites.iter().copied(), e).log_norm();
        PropAPoint {
            label: label.to_string(),
            energy: e,
            log_norm: ln,
            within_gamma_bound: ln <= gamma_bound,
            within_step_bound: ln <= step_bound,
        }
    };
    let radius = (-2.0 * gamma_bar * k as f64).exp();
    let radius_resolved = e_k + radius != e_k && e_k - radius != e_k;
    let mut points = vec![probe("E_k", e_k)];
    if radius_resolved {
        points.push(probe("E_k - r", e_k - radius));
        points.push(probe("E_k + r", e_k + radius));
    }
    let control = probe(
        "control",
        e_k + 10.0 * radius * (gamma_k * k as f64).exp(),
    );
    let grid = 201;
    let markov_max_log_norm = (0..grid)
        .map(|i| {
            let e = e_k - markov_half_width + 2.0 * markov_half_width * i as f64 / (grid - 1) as f64;
            product_from_iter(sites.iter().copied(), e).log_norm()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let markov_log_derivative_bound =
        ((n * n) as f64 / markov_half_width).ln() + markov_max_log_norm;
    Ok(PropAReport {
        eigenvalue: e_k,
        center: k,
        gamma_k,
        gamma_bar,
        tau,
        radius,
        radius_resolved,
        gamma_bound,
        step_bound,
        points,
        control,
        markov_half_width,
        markov_max_log_norm,
        markov_log_derivative_bound,
    })
}

/// Rows `(E, gamma_hat, std_err, n, trials, seed)`.
pub fn lyapunov_table(estimates: &[LyapunovEstimate]) -> Table {
    let mut t = Table::new("lyapunov", &["E", "gamma_hat", "std_err", "n", "trials", "seed"]);
    for est in estimates {
        t.push(vec![
            est.energy.into(),
            est.gamma_hat.into(),
            est.std_err.into(),
            est.n.into(),
            est.trials.into(),
            est.seed.into(),
        ]);
    }
    t
}

/// Rows `(E, n, rate)` for a set of growth profiles.
pub fn profile_table(profiles: &[(f64, Vec<(usize, f64)>)]) -> Table {
    let mut t = Table::new("profile", &["E", "n", "rate"]);
    for (e, prof) in profiles {
        for &(n, r) in prof {
            t.push(vec![(*e).into(), n.into(), r.into()]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::char_poly;
    use crate::potential::{ConstantPotential, PotentialDistribution};

    /// `det(E - H_[a, b])` on 1-based sites with the empty-block convention.
    fn block_det(v: &[f64], a: usize, b: usize, e: f64) -> f64 {
        if b + 1 == a {
            1.0
        } else if b + 2 == a {
            0.0
        } else {
            char_poly(&v[a - 1..b], e).value()
        }
    }

    fn naive_product(v: &[f64], e: f64) -> Mat2 {
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        for &x in v {
            m = mat_mul(&transfer_step(e, x), &m);
        }
        m
    }

    #[test]
    fn step_matrices() {
        assert_eq!(transfer_step(0.0, 0.0), [[0.0, -1.0], [1.0, 0.0]]);
        assert_eq!(transfer_step(3.0, 1.0), [[2.0, -1.0], [1.0, 0.0]]);
        let d = PotentialDistribution::uniform(-5.0, 5.0).unwrap();
        let xs = crate::potential::PotentialSource::sample(&d, 200, 1, 0);
        for w in xs.chunks(2) {
            assert!((det2(&transfer_step(w[0], w[1])) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_factor_and_free_rotation() {
        let p = transfer_product(&[0.4], 1.5).unwrap();
        let m = p.value();
        let t = transfer_step(1.5, 0.4);
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - t[i][j]).abs() < 1e-15);
            }
        }
        for n in [1, 2, 7, 1000] {
            let p = transfer_product(&vec![0.0; n], 0.0).unwrap();
            assert!(p.log_norm().abs() < 1e-14);
        }
    }

    #[test]
    fn norm2_matches_closed_cases() {
        assert!((norm2(&[[3.0, 0.0], [0.0, -2.0]]) - 3.0).abs() < 1e-15);
        assert!((norm2(&[[1.0, 1.0], [0.0, 1.0]]) - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    /// Derives the sign and shift pattern linking the entries of `Phi_n` to
    /// block determinants by brute force over small `n`, then checks it at
    /// `n = 200`.
    #[test]
    fn entries_are_block_determinants() {
        let d = PotentialDistribution::uniform(-1.0, 2.0).unwrap();
        // candidate: entry (i, j) = sign * det(E - H_[1 + j, n + s - i])
        let mut pattern = [[None; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                'cand: for s in [-1i64, 0, 1] {
                    for sign in [1.0, -1.0] {
                        let ok = (2..=5).all(|n| {
                            (0..20).all(|t| {
                                let v = crate::potential::PotentialSource::sample(&d, n + 2, 3, t);
                                let e = -2.0 + 0.37 * t as f64;
                                let m = naive_product(&v[..n], e);
                                let b = (n as i64 + s - i as i64) as usize;
                                let want = sign * block_det(&v, 1 + j, b, e);
                                (m[i][j] - want).abs() < 1e-12
                            })
                        });
                        if ok {
                            pattern[i][j] = Some((s, sign));
                            break 'cand;
                        }
                    }
                }
            }
        }
        let pattern = pattern.map(|r| r.map(|p| p.expect("no pattern fits")));
        // Phi_n = [[D(1,n), -D(2,n)], [D(1,n-1), -D(2,n-1)]]
        assert_eq!(pattern, [[(0, 1.0), (0, -1.0)], [(0, 1.0), (0, -1.0)]]);

        for t in 0..100 {
            let n = 200;
            let v = crate::potential::PotentialSource::sample(&d, n, 17, t);
            let e = -3.0 + 0.07 * t as f64;
            let p = transfer_product(&v, e).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let (s, sign) = pattern[i][j];
                    let b = (n as i64 + s - i as i64) as usize;
                    let ld = char_poly(&v[j..b], e);
                    let got = p.matrix[i][j];
                    assert_eq!(got.signum(), sign * ld.mantissa.signum());
                    let rel = (got.abs().ln() + p.log_scale - ld.log_abs()).abs();
                    assert!(rel < 1e-9, "entry ({i},{j}) at n={n}: {rel}");
                }
            }
        }
    }

    #[test]
    fn determinant_identity_small_and_scale_free() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        for t in 0..20 {
            let v = crate::potential::PotentialSource::sample(&d, 20_000, 5, t);
            let (p, _) = transfer_product_traced(&v[..8], 0.5).unwrap();
            assert!((p.determinant() - 1.0).abs() < 1e-8);
            let p = transfer_product(&v, 0.5 + 0.1 * t as f64).unwrap();
            assert!(p.determinant_defect() < 1e-14);
            let big = max_abs(&p.matrix);
            assert!((0.5..1.0).contains(&big));
        }
    }

    #[test]
    fn submultiplicative_split() {
        let d = PotentialDistribution::uniform(0.0, 3.0).unwrap();
        for t in 0..20 {
            let v = crate::potential::PotentialSource::sample(&d, 500, 8, t);
            let e = 1.3;
            let m = 137 + t as usize;
            let whole = transfer_product(&v, e).unwrap().log_norm();
            let prefix = transfer_product(&v[..m], e).unwrap().log_norm();
            let suffix = transfer_product(&v[m..], e).unwrap().log_norm();
            assert!(whole <= prefix + suffix + 1e-10);
        }
    }

    #[test]
    fn constant_potential_closed_form() {
        let est = lyapunov_estimate(&ConstantPotential(0.25), 3.25, 100_000, 2, 0).unwrap();
        let want = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((est.gamma_hat - want).abs() < 1e-3);
        assert_eq!(est.std_err, 0.0);
    }

    #[test]
    fn lyapunov_preconditions() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        assert!(lyapunov_estimate(&d, 0.5, 999, 4, 0).is_err());
        assert!(lyapunov_estimate(&d, 0.5, 1000, 1, 0).is_err());
    }

    #[test]
    fn lyapunov_seeds_agree_and_shift_covariant() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let a = lyapunov_estimate(&d, 0.5, 20_000, 16, 1).unwrap();
        let b = lyapunov_estimate(&d, 0.5, 20_000, 16, 2).unwrap();
        let s = lyapunov_estimate(&d.shifted(2.0), 2.5, 20_000, 16, 3).unwrap();
        let comb = |x: &LyapunovEstimate, y: &LyapunovEstimate| x.std_err.hypot(y.std_err);
        assert!(a.gamma_hat > 0.0);
        assert!((a.gamma_hat - b.gamma_hat).abs() < 4.0 * comb(&a, &b));
        assert!((a.gamma_hat - s.gamma_hat).abs() < 4.0 * comb(&a, &s));
    }

    #[test]
    fn profile_matches_independent_sweeps() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let v = crate::potential::PotentialSource::sample(&d, 1000, 4, 0);
        let prof = growth_profile(&v, 0.7, &[100, 200, 1000]).unwrap();
        for &(n, r) in &prof {
            let direct = transfer_product(&v[..n], 0.7).unwrap().rate();
            assert!((r - direct).abs() < 1e-14);
        }
        let zero = growth_profile(&vec![0.0; 50], 0.0, &[1, 10, 50]).unwrap();
        assert!(zero.iter().all(|&(_, r)| r.abs() < 1e-15));
        assert!(growth_profile(&v, 0.7, &[10, 5]).is_err());
    }

    #[test]
    fn non_lyapunov_scan_cases() {
        let z = non_lyapunov_scan(&vec![0.0; 400], 0.0, 400, 0.0, 1.0).unwrap();
        assert!(z.flag && z.min_rate.abs() < 1e-14);
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let v = crate::potential::PotentialSource::sample(&d, 4000, 2, 0);
        let far = non_lyapunov_scan(&v, 11.0, 4000, 0.5, 2.4).unwrap();
        assert!(!far.flag);
        assert!(non_lyapunov_scan(&v, 0.0, 100, 1.5, 1.0).is_err());
    }

    #[test]
    fn prop_a_trivial_ceiling() {
        let d = PotentialDistribution::uniform(0.0, 1.0).unwrap();
        let v = crate::potential::PotentialSource::sample(&d, 400, 2, 0);
        let r = prop_a_check(&v, 0.5, 20, 0.2, 0.3, 1.0, 0.05).unwrap();
        assert_eq!(r.points.len(), 3);
        assert!(r.points.iter().all(|p| p.within_gamma_bound));
        assert!(r.markov_log_derivative_bound > r.markov_max_log_norm);
        let big = prop_a_check(&v, 0.5, 200, 0.2, 0.3, 1.0, 0.05).unwrap();
        // radius e^{-120} is below the resolution of E_k = 0.5
        assert!(!big.radius_resolved);
        assert_eq!(big.points.len(), 1);
    }
}
