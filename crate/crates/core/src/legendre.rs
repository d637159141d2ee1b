//! Normalized associated Legendre functions, the latitude eigenfunctions
//! `v_{n,l}(x) = Pbar_l^n(sin x)` and the equator-concentrating family `w_n`.
//!
//! `Pbar_l^n` is normalized so that `∫_{-1}^{1} Pbar_l^n(t)^2 dt = 1` and carries
//! the Condon–Shortley phase, so `Pbar_n^n` has sign `(-1)^n` on `(-1, 1)`.
//! Evaluation never forms `(l ± n)!`: the diagonal seed is built by the
//! product `Pbar_k^k = -sqrt((2k+1)/(2k)) · cos x · Pbar_{k-1}^{k-1}` and the
//! columns by the normalized three-term recurrence in `l`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{inner_weighted, QuadratureRule};

/// `λ_{l,n} = l(l+1) − n²`.
pub fn eigenvalue(l: i64, n: i64) -> Result<i64> {
    if l < n.abs() {
        return Err(Error::DegreeBelowOrder { l, n });
    }
    Ok(l * (l + 1) - n * n)
}

/// `ln(k!)` by direct summation.
pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `Pbar_l^n(t)` for `l = n..=l_max`, with `s = sqrt(1 − t²)` supplied by the
/// caller (so that `s = cos x` can be passed without cancellation).
fn column(l_max: usize, n: usize, t: f64, s: f64) -> Vec<f64> {
    let mut seed = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..=n {
        let kf = k as f64;
        seed *= -((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
    }
    let mut out = Vec::with_capacity(l_max + 1 - n);
    out.push(seed);
    if l_max == n {
        return out;
    }
    let nf = n as f64;
    out.push((2.0 * nf + 3.0).sqrt() * t * seed);
    for l in n + 2..=l_max {
        let lf = l as f64;
        let denom = lf * lf - nf * nf;
        let a = ((4.0 * lf * lf - 1.0) / denom).sqrt();
        let b = ((2.0 * lf + 1.0) * (lf - 1.0 - nf) * (lf - 1.0 + nf) / ((2.0 * lf - 3.0) * denom))
            .sqrt();
        let k = out.len();
        let next = a * t * out[k - 1] - b * out[k - 2];
        out.push(next);
    }
    out
}

/// Fully normalized associated Legendre function `Pbar_l^n(t)`.
pub fn normalized_legendre(l: usize, n: usize, t: f64) -> Result<f64> {
    if n > l {
        return Err(Error::DegreeBelowOrder {
            l: l as i64,
            n: n as i64,
        });
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::OutOfDomain(t));
    }
    let s = (1.0 - t * t).max(0.0).sqrt();
    Ok(*column(l, n, t, s).last().unwrap())
}

fn phase(n: i64) -> f64 {
    if n < 0 && n % 2 != 0 {
        -1.0
    } else {
        1.0
    }
}

fn check_degree(l: i64, n: i64) -> Result<()> {
    if l < n.abs() {
        return Err(Error::DegreeBelowOrder { l, n });
    }
    Ok(())
}

/// `v_{n,l}(x)` at a single latitude. Negative `n` maps to `(-1)^n v_{|n|,l}`.
pub fn eigenfunction_value(l: i64, n: i64, x: f64) -> Result<f64> {
    check_degree(l, n)?;
    let m = n.unsigned_abs() as usize;
    let col = column(l as usize, m, x.sin(), x.cos());
    Ok(phase(n) * col[col.len() - 1])
}

/// `dv_{n,l}/dx` at an interior latitude.
///
/// Uses `(1 − t²) dPbar_l^n/dt = −l t Pbar_l^n + sqrt((2l+1)/(2l−1)·(l² − n²)) Pbar_{l−1}^n`.
pub fn eigenfunction_derivative(l: i64, n: i64, x: f64) -> Result<f64> {
    check_degree(l, n)?;
    let m = n.unsigned_abs() as usize;
    let lu = l as usize;
    let (t, c) = (x.sin(), x.cos());
    let col = column(lu, m, t, c);
    let p = col[col.len() - 1];
    let lf = l as f64;
    let mf = m as f64;
    let prev = if lu > m {
        ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt() * col[col.len() - 2]
    } else {
        0.0
    };
    Ok(phase(n) * (-lf * t * p + prev) / c)
}

/// Samples of `v_{n,l}` at the rule's nodes.
pub fn eigenfunction_vnl(l: i64, n: i64, rule: &QuadratureRule) -> Result<Vec<f64>> {
    check_degree(l, n)?;
    rule.nodes()
        .iter()
        .map(|&x| eigenfunction_value(l, n, x))
        .collect()
}

/// `W_{l,n}(x, y) = v_{n,l}(x) e^{iny} / sqrt(2π)`.
pub fn spherical_harmonic(l: i64, n: i64, x: f64, y: f64) -> Result<Complex64> {
    let v = eigenfunction_value(l, n, x)?;
    Ok(Complex64::from_polar(1.0, n as f64 * y) * (v / (2.0 * PI).sqrt()))
}

/// Eigenvalues and sampled orthonormal eigenfunctions for one frequency.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    n: i64,
    l_max: i64,
    eigenvalues: Vec<i64>,
    samples: Vec<Vec<f64>>,
    rule: QuadratureRule,
}

impl ModeBasis {
    /// Basis `v_{n,l}`, `|n| ≤ l ≤ l_max`, sampled on `rule`.
    pub fn new(n: i64, l_max: i64, rule: QuadratureRule) -> Result<Self> {
        check_degree(l_max, n)?;
        let m = n.unsigned_abs() as usize;
        let mut samples = vec![Vec::with_capacity(rule.len()); (l_max as usize) + 1 - m];
        for &x in rule.nodes() {
            let col = column(l_max as usize, m, x.sin(), x.cos());
            for (row, v) in samples.iter_mut().zip(col) {
                row.push(phase(n) * v);
            }
        }
        let eigenvalues = (n.abs()..=l_max).map(|l| l * (l + 1) - n * n).collect();
        Ok(Self {
            n,
            l_max,
            eigenvalues,
            samples,
            rule,
        })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn l_max(&self) -> i64 {
        self.l_max
    }

    pub fn l_min(&self) -> i64 {
        self.n.abs()
    }

    /// Number of basis functions, `l_max − |n| + 1`.
    pub fn dim(&self) -> usize {
        self.samples.len()
    }

    pub fn degrees(&self) -> impl Iterator<Item = i64> {
        self.l_min()..=self.l_max
    }

    pub fn eigenvalues(&self) -> &[i64] {
        &self.eigenvalues
    }

    pub fn eigenvalue_f64(&self, k: usize) -> f64 {
        self.eigenvalues[k] as f64
    }

    /// Samples of the `k`-th basis function (degree `|n| + k`).
    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k]
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Gram matrix under the weighted inner product, row-major.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut g = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in i..d {
                let v = inner_weighted(&self.samples[i], &self.samples[j], &self.rule)
                    .expect("basis samples match their rule");
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        g
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.gram();
        let mut worst: f64 = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// Per-degree Gram deviation: max over the row of `|G_{lj} − δ_{lj}|`.
    pub fn gram_row_deviation(&self) -> Vec<f64> {
        self.gram()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Samples of `Σ c_k v_k`.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rule.len()];
        for (c, row) in coeffs.iter().zip(&self.samples) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += c * v;
            }
        }
        out
    }
}

/// `ln` of the printed constant `sqrt((2n+1)!) / (2^n n!)` in front of `cos^n x`.
pub fn wn_printed_log_constant(n: u64) -> f64 {
    0.5 * ln_factorial(2 * n + 1) - n as f64 * std::f64::consts::LN_2 - ln_factorial(n)
}

/// `∫ w_n² cos x dx` over the full interval for the printed constant, computed
/// from `∫_{-1}^{1} (1 − t²)^n dt = 2^{2n+1} (n!)² / (2n+1)!` in log space.
/// Equals 2 for every `n`.
pub fn wn_printed_norm_sq(n: u64) -> f64 {
    let ln_int = (2 * n + 1) as f64 * std::f64::consts::LN_2 + 2.0 * ln_factorial(n)
        - ln_factorial(2 * n + 1);
    (2.0 * wn_printed_log_constant(n) + ln_int).exp()
}

fn wn_log_normalizer(n: u64) -> f64 {
    // Exact for (1 - t^2)^n with n + 1 points.
    let rule = QuadratureRule::sine_gauss_on(-FRAC_PI_2, FRAC_PI_2, (n as usize + 2).max(2))
        .expect("valid order");
    let lc = wn_printed_log_constant(n);
    let sq: f64 = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(x, w)| w * (2.0 * (lc + n as f64 * x.cos().ln())).exp())
        .sum();
    lc - 0.5 * sq.ln()
}

fn wn_sign(n: u64) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Normalized `w_n(x) ∝ (-1)^n cos^n x` at a single latitude.
pub fn concentrating_wn_value(n: i64, x: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::FrequencyTooSmall { n, min: 1 });
    }
    let nu = n as u64;
    let lc = wn_log_normalizer(nu);
    Ok(wn_sign(nu) * (lc + n as f64 * x.cos().ln()).exp())
}

/// Samples of `w_n`, rescaled so that `∫ w_n² cos x dx = 1`.
pub fn concentrating_wn(n: i64, rule: &QuadratureRule) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::FrequencyTooSmall { n, min: 1 });
    }
    let nu = n as u64;
    let lc = wn_log_normalizer(nu);
    let sign = wn_sign(nu);
    Ok(rule
        .nodes()
        .iter()
        .map(|x| sign * (lc + n as f64 * x.cos().ln()).exp())
        .collect())
}

/// `|v_{n,l}(pi/2 − δ)| / sqrt(cos(pi/2 − δ))`; tends to 0 with δ for `n ≠ 0`.
pub fn endpoint_decay_check(l: i64, n: i64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::FrequencyTooSmall { n, min: 1 });
    }
    if !(delta > 0.0 && delta < 0.1) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 0.1)")));
    }
    let x = FRAC_PI_2 - delta;
    Ok(eigenfunction_value(l, n, x)?.abs() / x.cos().sqrt())
}

/// `|v'_{0,l}(pi/2 − δ)|`; tends to 0 with δ.
pub fn endpoint_slope_n0(l: i64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.1) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 0.1)")));
    }
    Ok(eigenfunction_derivative(l, 0, FRAC_PI_2 - delta)?.abs())
}
