//! Per-mode observability Gramians and constants, the highest-weight
//! minimal-time experiment, and the large-time window bound.

use crate::error::{Error, Result};
use crate::legendre::{concentrating_wn, eigenfunction_vnl, ln_factorial, ModeBasis};
use crate::numerics::QuadratureRule;
use crate::spectral::{Field2D, Part};
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

/// Directions whose terminal factor `e^{−2λT}` falls below this are dropped.
pub const TERMINAL_FLOOR: f64 = 1e-300;

/// Relative ridge added to the equilibrated Gramian before whitening.
pub const RIDGE: f64 = 1e-14;

/// The band `ω = (−b, −a) ∪ (a, b)` with `0 < a < b ≤ pi/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlRegion {
    a: f64,
    b: f64,
}

/// Which components of `ω` enter the spatial integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Crowns {
    #[default]
    Both,
    Upper,
}

impl ControlRegion {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a < b && b <= FRAC_PI_2 + 1e-15) {
            return Err(Error::InvalidRegion(format!(
                "need 0 < a < b <= pi/2, got a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b: b.min(FRAC_PI_2) })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Lower latitude of the band on the unit sphere, `sin a`.
    pub fn alpha(&self) -> f64 {
        self.a.sin()
    }

    /// Upper latitude of the band on the unit sphere, `sin b`.
    pub fn beta(&self) -> f64 {
        self.b.sin()
    }

    pub fn contains(&self, x: f64) -> bool {
        let ax = x.abs();
        ax > self.a && ax < self.b
    }

    pub fn intervals(&self, crowns: Crowns) -> Vec<(f64, f64)> {
        match crowns {
            Crowns::Both => vec![(-self.b, -self.a), (self.a, self.b)],
            Crowns::Upper => vec![(self.a, self.b)],
        }
    }

    /// Sine-Gauss rule on `ω`, exact for weighted integrals of polynomials in
    /// `sin x` of degree below `2 order`.
    pub fn rule(&self, crowns: Crowns, order: usize) -> Result<QuadratureRule> {
        let parts = self
            .intervals(crowns)
            .into_iter()
            .map(|(lo, hi)| QuadratureRule::sine_gauss_on(lo, hi, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(QuadratureRule::union(&parts))
    }
}

fn exact_order(basis: &ModeBasis) -> usize {
    basis.l_max() as usize + 8
}

/// `S_{ll'} = ∫_ω v_{n,l} v_{n,l'} cos x dx`, exact up to rounding.
pub fn spatial_overlap_matrix(basis: &ModeBasis, region: &ControlRegion) -> Result<DMatrix<f64>> {
    spatial_overlap_matrix_with(basis, region, Crowns::Both)
}

pub fn spatial_overlap_matrix_with(
    basis: &ModeBasis,
    region: &ControlRegion,
    crowns: Crowns,
) -> Result<DMatrix<f64>> {
    let rule = region.rule(crowns, exact_order(basis))?;
    let samples = basis
        .degrees()
        .map(|l| eigenfunction_vnl(l, basis.n(), &rule))
        .collect::<Result<Vec<_>>>()?;
    let w = rule.weights();
    let d = basis.dim();
    let mut s = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v: f64 = samples[i]
                .iter()
                .zip(&samples[j])
                .zip(w)
                .map(|((a, b), w)| a * b * w)
                .sum();
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}

/// `∫_0^T e^{−(λ + λ')t} dt`, equal to `T` when the sum vanishes.
pub fn time_factor(lambda_sum: f64, horizon: f64) -> f64 {
    if lambda_sum == 0.0 {
        horizon
    } else {
        -(-lambda_sum * horizon).exp_m1() / lambda_sum
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidHorizon(horizon));
    }
    Ok(())
}

fn hadamard_time(s: &DMatrix<f64>, basis: &ModeBasis, horizon: f64) -> DMatrix<f64> {
    let d = basis.dim();
    DMatrix::from_fn(d, d, |i, j| {
        s[(i, j)] * time_factor(basis.eigenvalue_f64(i) + basis.eigenvalue_f64(j), horizon)
    })
}

/// `M = S ∘ Θ`: `cᵀ M c = ∫_0^T ∫_ω |Σ c_l e^{−λ_l t} v_l|² cos x dx dt`.
pub fn observability_gramian(
    basis: &ModeBasis,
    region: &ControlRegion,
    horizon: f64,
) -> Result<DMatrix<f64>> {
    check_horizon(horizon)?;
    let s = spatial_overlap_matrix(basis, region)?;
    Ok(hadamard_time(&s, basis, horizon))
}

pub fn observability_gramian_with(
    basis: &ModeBasis,
    region: &ControlRegion,
    horizon: f64,
    crowns: Crowns,
) -> Result<DMatrix<f64>> {
    check_horizon(horizon)?;
    let s = spatial_overlap_matrix_with(basis, region, crowns)?;
    Ok(hadamard_time(&s, basis, horizon))
}

/// Norm used on the terminal state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TerminalNorm {
    /// `∫ |g(T)|² cos x dx`.
    #[default]
    Weighted,
    /// `∫ |g(T)|² dx`.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObsOptions {
    pub crowns: Crowns,
    pub terminal: TerminalNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObsConstant {
    pub value: f64,
    /// Number of directions kept after the terminal floor.
    pub effective_dim: usize,
    /// `λ_max / λ_min` of the equilibrated, ridged Gramian.
    pub condition: f64,
}

fn terminal_matrix(basis: &ModeBasis, horizon: f64, norm: TerminalNorm) -> Result<DMatrix<f64>> {
    let d = basis.dim();
    let decay: Vec<f64> = (0..d)
        .map(|k| {
            let f = (-2.0 * basis.eigenvalue_f64(k) * horizon).exp();
            if f < TERMINAL_FLOOR {
                0.0
            } else {
                (-basis.eigenvalue_f64(k) * horizon).exp()
            }
        })
        .collect();
    match norm {
        TerminalNorm::Weighted => Ok(DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                decay[i] * decay[i]
            } else {
                0.0
            }
        })),
        TerminalNorm::Plain => {
            let order = 2 * basis.l_max() as usize + 96;
            let rule = QuadratureRule::latitude_gauss(order)?;
            let pw = rule.plain_weights();
            let samples = basis
                .degrees()
                .map(|l| eigenfunction_vnl(l, basis.n(), &rule))
                .collect::<Result<Vec<_>>>()?;
            Ok(DMatrix::from_fn(d, d, |i, j| {
                if decay[i] == 0.0 || decay[j] == 0.0 {
                    return 0.0;
                }
                let p: f64 = samples[i]
                    .iter()
                    .zip(&samples[j])
                    .zip(&pw)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                decay[i] * decay[j] * p
            }))
        }
    }
}

/// Largest `λ` with `D c = λ M c`, by equilibration, ridge and whitening of `M`.
pub fn max_generalized_eigenvalue(m: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<(f64, f64)> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n || d.nrows() != n || d.ncols() != n {
        return Err(Error::InvalidArgument("matrix shapes differ".into()));
    }
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let v = m[(i, i)];
        if !(v > 0.0) {
            return Err(Error::Singular(f64::INFINITY));
        }
        scale.push(1.0 / v.sqrt());
    }
    let mut mt = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * scale[i] * scale[j]);
    let dt = DMatrix::from_fn(n, n, |i, j| d[(i, j)] * scale[i] * scale[j]);
    let kappa = RIDGE * mt.trace();
    for i in 0..n {
        mt[(i, i)] += kappa;
    }
    let eig = SymmetricEigen::new(mt);
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    if !(lo > 0.0) {
        return Err(Error::Singular(hi / lo.abs().max(f64::MIN_POSITIVE)));
    }
    let mut w = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let f = 1.0 / lam.sqrt();
        w.column_mut(j).scale_mut(f);
    }
    let mut a = w.transpose() * dt * &w;
    a = (&a + a.transpose()) * 0.5;
    let top = SymmetricEigen::new(a).eigenvalues.max();
    Ok((top.max(0.0), hi / lo))
}

/// `C_n(T) = sup_c cᵀ D c / cᵀ M c`: the smallest constant in the per-mode
/// observability inequality restricted to the span of `basis`.
pub fn obs_constant_mode(
    basis: &ModeBasis,
    region: &ControlRegion,
    horizon: f64,
) -> Result<ObsConstant> {
    obs_constant_mode_with(basis, region, horizon, ObsOptions::default())
}

pub fn obs_constant_mode_with(
    basis: &ModeBasis,
    region: &ControlRegion,
    horizon: f64,
    opts: ObsOptions,
) -> Result<ObsConstant> {
    let m = observability_gramian_with(basis, region, horizon, opts.crowns)?;
    let d = terminal_matrix(basis, horizon, opts.terminal)?;
    let effective_dim = (0..basis.dim())
        .filter(|&k| (-2.0 * basis.eigenvalue_f64(k) * horizon).exp() >= TERMINAL_FLOOR)
        .count();
    let (value, condition) = max_generalized_eigenvalue(&m, &d)?;
    Ok(ObsConstant {
        value,
        effective_dim,
        condition,
    })
}

/// `∫_ω ŵ_n² cos x dx` for the unit-norm highest-weight profile.
pub fn wn_region_mass(n: i64, region: &ControlRegion, crowns: Crowns) -> Result<f64> {
    let rule = region.rule(crowns, n.max(1) as usize + 4)?;
    let w = concentrating_wn(n, &rule)?;
    rule.integrate_weighted(&w.iter().map(|v| v * v).collect::<Vec<_>>())
}

/// `ln` of `∫_0^T ∫_ω |g_n|² / ∫ |g_n(T)|²` for `g_n = e^{−nt} ŵ_n`.
pub fn mintime_log_ratio(n: i64, horizon: f64, region: &ControlRegion, crowns: Crowns) -> Result<f64> {
    if n < 1 {
        return Err(Error::FrequencyTooSmall { n, min: 1 });
    }
    check_horizon(horizon)?;
    let nf = n as f64;
    let mass = wn_region_mass(n, region, crowns)?;
    Ok((2.0 * nf * horizon).exp_m1().ln() - (2.0 * nf).ln() + mass.ln())
}

pub fn mintime_ratio(n: i64, horizon: f64, region: &ControlRegion) -> Result<f64> {
    Ok(mintime_log_ratio(n, horizon, region, Crowns::Both)?.exp())
}

/// Log-space terms of the highest-weight bound at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallisRow {
    pub n: i64,
    pub log_ratio: f64,
    /// `ln(e^{2nT}/(2n) ∫_a^b w_n² cos x dx)` with the printed `w_n`.
    pub log_lhs: f64,
    /// `ln` of `e^{2n(T + ln cos a)} (2n+1)!/(n 2^{2n+1} (n!)²) (b − a) cos a`.
    pub log_bound: f64,
    /// `ln` of `e^{2n(T + ln cos a)} (b − a) cos a (2n+1) / (2 sqrt(pi) n^{3/2})`.
    pub log_envelope: f64,
}

impl WallisRow {
    pub fn holds(&self) -> bool {
        self.log_ratio <= self.log_lhs && self.log_lhs <= self.log_bound
    }

    /// `bound / envelope`, which tends to 1 like `1 − 1/(8n)`.
    pub fn envelope_ratio(&self) -> f64 {
        (self.log_bound - self.log_envelope).exp()
    }
}

pub fn wallis_row(n: i64, horizon: f64, region: &ControlRegion) -> Result<WallisRow> {
    let log_ratio = mintime_log_ratio(n, horizon, region, Crowns::Both)?;
    let nf = n as f64;
    let nu = n as u64;
    // Printed w_n has norm² 2, so one crown of it equals both crowns of ŵ_n.
    let log_lhs = 2.0 * nf * horizon - (2.0 * nf).ln()
        + wn_region_mass(n, region, Crowns::Both)?.ln();
    let (a, b) = (region.a(), region.b());
    let common = 2.0 * nf * (horizon + a.cos().ln()) + (b - a).ln() + a.cos().ln();
    let log_bound = common + ln_factorial(2 * nu + 1)
        - nf.ln()
        - (2.0 * nf + 1.0) * LN_2
        - 2.0 * ln_factorial(nu);
    let log_envelope = common + (2.0 * nf + 1.0).ln() - (2.0 * PI.sqrt()).ln() - 1.5 * nf.ln();
    Ok(WallisRow {
        n,
        log_ratio,
        log_lhs,
        log_bound,
        log_envelope,
    })
}

/// `(ln(1/cos a), ln(1/sqrt(1 − α²)))` with `α = sin a`.
pub fn mintime_lower_bound(region: &ControlRegion) -> (f64, f64) {
    let a = region.a();
    let alpha = region.alpha();
    (-a.cos().ln(), -0.5 * ((-alpha).ln_1p() + alpha.ln_1p()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Bounded,
    Growing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: i64,
    pub constant: ObsConstant,
    /// Highest-weight ratio, absent for `n = 0`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityReport {
    pub horizon: f64,
    pub l_max: i64,
    pub rows: Vec<ScanRow>,
    pub max_constant: f64,
    pub trend: Trend,
    /// Slope of `ln C_n` against `n` over the upper half of the scan.
    pub log_slope: f64,
    pub below_threshold: bool,
}

/// Growth rate of `ln C_n` per unit `n` above which the scan is reported as growing.
pub const GROWTH_SLOPE: f64 = 0.05;

fn log_slope(rows: &[ScanRow]) -> f64 {
    let half = &rows[rows.len() / 2..];
    if half.len() < 2 {
        return 0.0;
    }
    let pts: Vec<(f64, f64)> = half
        .iter()
        .map(|r| (r.n as f64, r.constant.value.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// `C_n(T)` for `n = 0..=n_max` in the span `l ≤ l_max`; diagnostic only.
pub fn uniform_scan(
    region: &ControlRegion,
    horizon: f64,
    n_max: i64,
    l_max: i64,
) -> Result<ObservabilityReport> {
    check_horizon(horizon)?;
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let rule = QuadratureRule::sine_gauss_on(-FRAC_PI_2, FRAC_PI_2, l_max as usize + 8)?;
        let basis = ModeBasis::new(n, l_max.max(n), rule)?;
        let constant = obs_constant_mode(&basis, region, horizon)?;
        let ratio = if n >= 1 {
            Some(mintime_ratio(n, horizon, region)?)
        } else {
            None
        };
        rows.push(ScanRow { n, constant, ratio });
    }
    let max_constant = rows.iter().map(|r| r.constant.value).fold(0.0, f64::max);
    let slope = log_slope(&rows);
    Ok(ObservabilityReport {
        horizon,
        l_max,
        rows,
        max_constant,
        trend: if slope > GROWTH_SLOPE {
            Trend::Growing
        } else {
            Trend::Bounded
        },
        log_slope: slope,
        below_threshold: horizon < mintime_lower_bound(region).0,
    })
}

/// `Σ_modes cᵀ M c`: the observed energy `∫_0^T ∫_ω ∫ |g|² cos x dy dx dt`
/// of the free solution started at `field`.
pub fn observed_energy(field: &Field2D, region: &ControlRegion, horizon: f64) -> Result<f64> {
    let mut total = 0.0;
    for n in 0..=field.n_max() {
        let basis = field.mode(n, Part::Cos).basis().clone();
        let m = observability_gramian(&basis, region, horizon)?;
        for part in [Part::Cos, Part::Sin] {
            if n == 0 && part == Part::Sin {
                continue;
            }
            let c = nalgebra::DVector::from_column_slice(field.mode(n, part).coeffs());
            total += c.dot(&(&m * &c));
        }
    }
    Ok(total)
}

/// The two regimes of the large-time argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowCase {
    /// `n < 1 + 1/T`, `s = R₀(T + T²)`.
    LowFrequency,
    /// `n ≥ 1 + 1/T`, `s = R₀ T² n`.
    HighFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowBound {
    pub case: WindowCase,
    pub s: f64,
    /// `ln` of `T/3`, the factor on the terminal energy.
    pub log_lhs_factor: f64,
    /// `ln` of `(T⁶/64)(6/(8 s³ β_*³)) e^{−2nT/3} e^{9 s β*/T²}`.
    pub log_rhs_factor: f64,
    /// `−2nT/3 + 9 s β*/T²`; in the high-frequency case it is `n (9 R₀ β* − 2T/3)`.
    pub exponent: f64,
}

/// Window bound from integrating the Carleman estimate over `(T/3, 2T/3)`.
pub fn dissipation_window_bound(
    n: i64,
    horizon: f64,
    r0: f64,
    beta_min: f64,
    beta_max: f64,
) -> Result<WindowBound> {
    check_horizon(horizon)?;
    if n < 1 {
        return Err(Error::FrequencyTooSmall { n, min: 1 });
    }
    let t = horizon;
    let nf = n as f64;
    let (case, s) = if nf < 1.0 + 1.0 / t {
        (WindowCase::LowFrequency, r0 * (t + t * t))
    } else {
        (WindowCase::HighFrequency, r0 * t * t * nf)
    };
    let exponent = -2.0 * nf * t / 3.0 + 9.0 * s * beta_max / (t * t);
    let log_rhs_factor = 6.0 * t.ln() - 64f64.ln() + (6.0f64 / 8.0).ln()
        - 3.0 * (s * beta_min).ln()
        + exponent;
    Ok(WindowBound {
        case,
        s,
        log_lhs_factor: (t / 3.0).ln(),
        log_rhs_factor,
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::TimeGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(n: i64, l_max: i64) -> ModeBasis {
        let rule = QuadratureRule::sine_gauss_on(-FRAC_PI_2, FRAC_PI_2, 64).unwrap();
        ModeBasis::new(n, l_max, rule).unwrap()
    }

    #[test]
    fn region_validation() {
        assert!(ControlRegion::new(0.0, 1.0).is_err());
        assert!(ControlRegion::new(1.0, 0.5).is_err());
        assert!(ControlRegion::new(0.5, 2.0).is_err());
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        assert!(r.contains(-0.7) && r.contains(1.1) && !r.contains(0.3) && !r.contains(1.3));
        assert_eq!(r.alpha(), 0.6f64.sin());
    }

    #[test]
    fn overlap_examples() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        let s = spatial_overlap_matrix(&basis(0, 0), &r).unwrap();
        assert!((s[(0, 0)] - (1.2f64.sin() - 0.6f64.sin())).abs() < 1e-14);

        let wide = ControlRegion::new(1e-12, FRAC_PI_2).unwrap();
        for n in [0, 2, 5] {
            let s = spatial_overlap_matrix(&basis(n, 12), &wide).unwrap();
            let d = s.nrows();
            let dev = (s - DMatrix::<f64>::identity(d, d)).abs().max();
            assert!(dev < 1e-10, "n={n}: {dev}");
        }

        let s = spatial_overlap_matrix(&basis(3, 20), &r).unwrap();
        assert!((&s - s.transpose()).abs().max() < 1e-15);
        assert!(SymmetricEigen::new(s).eigenvalues.min() > -1e-12);
    }

    #[test]
    fn time_factor_examples() {
        assert_eq!(time_factor(0.0, 1.7), 1.7);
        assert!((time_factor(2.0, 1.0) - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-16);
    }

    #[test]
    fn gramian_matches_brute_force() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        let horizon = 0.8;
        let b = basis(2, 10);
        let m = observability_gramian(&b, &r, horizon).unwrap();
        let rule = r.rule(Crowns::Both, 24).unwrap();
        let samples: Vec<Vec<f64>> = b.degrees().map(|l| eigenfunction_vnl(l, 2, &rule).unwrap()).collect();
        let grid = TimeGrid::full(horizon, 400).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let c: Vec<f64> = (0..b.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let brute = grid.integrate(|t| {
                let g: Vec<f64> = (0..rule.len())
                    .map(|i| (0..b.dim()).map(|k| c[k] * (-b.eigenvalue_f64(k) * t).exp() * samples[k][i]).sum())
                    .collect();
                rule.integrate_weighted(&g.iter().map(|v| v * v).collect::<Vec<_>>()).unwrap()
            });
            let cv = nalgebra::DVector::from_vec(c);
            let alg = cv.dot(&(&m * &cv));
            assert!((alg - brute).abs() < 1e-8 * brute.max(1e-3), "{alg} {brute}");
        }
        assert!(observability_gramian(&b, &r, 0.0).is_err());
    }

    #[test]
    fn one_dimensional_constant() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        for horizon in [0.5, 1.0, 3.0] {
            let c = obs_constant_mode(&basis(0, 0), &r, horizon).unwrap();
            let exact = 1.0 / (horizon * (1.2f64.sin() - 0.6f64.sin()));
            assert!((c.value - exact).abs() < 1e-12 * exact);
            assert_eq!(c.effective_dim, 1);
        }
    }

    #[test]
    fn constant_decreases_with_time() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        let b = basis(3, 15);
        let mut prev = f64::INFINITY;
        for horizon in [0.2, 0.5, 1.0, 2.0] {
            let c = obs_constant_mode(&b, &r, horizon).unwrap().value;
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn constant_dominates_highest_weight() {
        let r = ControlRegion::new(PI / 3.0, 1.2).unwrap();
        for horizon in [0.3, 1.4] {
            for n in [1, 4, 9] {
                let c = obs_constant_mode(&basis(n, n + 12), &r, horizon).unwrap().value;
                let ratio = mintime_ratio(n, horizon, &r).unwrap();
                assert!(c * ratio >= 1.0 - 1e-10, "n={n} T={horizon}: {}", c * ratio);
            }
        }
    }

    #[test]
    fn threshold_examples() {
        let r = ControlRegion::new(PI / 3.0, 1.2).unwrap();
        let (t1, t2) = mintime_lower_bound(&r);
        assert!((t1 - LN_2).abs() < 1e-12);
        assert!((t1 - t2).abs() < 1e-15);
        let tiny = ControlRegion::new(1e-9, 1.0).unwrap();
        assert!(mintime_lower_bound(&tiny).0 < 1e-17);
    }

    #[test]
    fn ratio_decays_below_threshold() {
        let r = ControlRegion::new(PI / 3.0, 1.2).unwrap();
        let ratios: Vec<f64> = [10, 20, 40, 80].iter().map(|&n| mintime_ratio(n, 0.6, &r).unwrap()).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
        for n in 1..=100 {
            let row = wallis_row(n, 0.6, &r).unwrap();
            assert!(row.holds(), "n={n}: {row:?}");
        }
        let env = wallis_row(100, 0.6, &r).unwrap().envelope_ratio();
        assert!((env - (1.0 - 1.0 / 800.0)).abs() < 1e-4, "{env}");
        // One crown carries half of the mass.
        let both = wn_region_mass(7, &r, Crowns::Both).unwrap();
        let one = wn_region_mass(7, &r, Crowns::Upper).unwrap();
        assert!((both - 2.0 * one).abs() < 1e-15);
    }

    #[test]
    fn window_bound_examples() {
        let (r0, bmin, bmax) = (2.0, 1.0, 3.0);
        let tstar = 27.0 * r0 * bmax / 2.0;
        let w = dissipation_window_bound(5, tstar, r0, bmin, bmax).unwrap();
        assert_eq!(w.case, WindowCase::HighFrequency);
        assert!(w.exponent.abs() < 1e-9 * tstar);
        let w2 = dissipation_window_bound(5, 2.0 * tstar, r0, bmin, bmax).unwrap();
        assert!(w2.exponent < 0.0);
        let low = dissipation_window_bound(1, 0.5, r0, bmin, bmax).unwrap();
        assert_eq!(low.case, WindowCase::LowFrequency);
        assert!((low.s - r0 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn plain_terminal_norm_differs() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        let b = basis(2, 8);
        let w = obs_constant_mode(&b, &r, 1.0).unwrap().value;
        let opts = ObsOptions { terminal: TerminalNorm::Plain, ..Default::default() };
        let p = obs_constant_mode_with(&b, &r, 1.0, opts).unwrap().value;
        assert!(w > 0.0 && p > 0.0 && (w - p).abs() > 1e-6 * w);
    }
}
