//! Mode decomposition, exact semigroup evolution and Duhamel integration.
//!
//! A single longitude frequency is a [`ModeState`]: coefficients on the
//! orthonormal basis `v_{n,l}`, evolved by `c_l ← e^{−λ_{l,n} t} c_l`.
//!
//! Real 2D fields ([`Field2D`]) use the orthonormal real harmonics
//! `v_{0,l}/sqrt(2π)`, `v_{n,l} cos(ny)/sqrt(π)` and `v_{n,l} sin(ny)/sqrt(π)`,
//! which is the conjugate-symmetric pairing of the `±n` complex modes. The
//! squared 2D norm is then the plain sum of squared coefficients.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::legendre::ModeBasis;
use crate::numerics::{inner_weighted, QuadratureRule, TimeGrid};

/// Coefficients of one latitude mode on its eigenbasis.
#[derive(Debug, Clone)]
pub struct ModeState {
    n: i64,
    coeffs: Vec<f64>,
    basis: Arc<ModeBasis>,
}

impl ModeState {
    pub fn new(basis: Arc<ModeBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::LengthMismatch {
                expected: basis.dim(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            n: basis.n(),
            coeffs,
            basis,
        })
    }

    pub fn zeros(basis: Arc<ModeBasis>) -> Self {
        let coeffs = vec![0.0; basis.dim()];
        Self {
            n: basis.n(),
            coeffs,
            basis,
        }
    }

    /// Unit vector on degree `l`.
    pub fn pure(basis: Arc<ModeBasis>, l: i64) -> Result<Self> {
        let k = l - basis.l_min();
        if k < 0 || l > basis.l_max() {
            return Err(Error::DegreeBelowOrder { l, n: basis.n() });
        }
        let mut s = Self::zeros(basis);
        s.coeffs[k as usize] = 1.0;
        Ok(s)
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    /// Coefficient of degree `l`, zero outside the truncation.
    pub fn coeff(&self, l: i64) -> f64 {
        let k = l - self.basis.l_min();
        if k < 0 || l > self.basis.l_max() {
            0.0
        } else {
            self.coeffs[k as usize]
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Samples of the represented function on the basis rule.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.basis.reconstruct(&self.coeffs)
    }

    pub fn evolve(&self, t: f64) -> Result<Self> {
        evolve_mode(self, t)
    }

    fn scaled_add(&mut self, other: &ModeState, alpha: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
    }
}

/// H_n-orthogonal projection of samples onto the basis span.
pub fn project_mode(f: &[f64], basis: &Arc<ModeBasis>) -> Result<ModeState> {
    let rule = basis.rule();
    rule.check_len(f)?;
    let coeffs = basis
        .samples()
        .iter()
        .map(|v| inner_weighted(f, v, rule))
        .collect::<Result<Vec<_>>>()?;
    ModeState::new(basis.clone(), coeffs)
}

/// Exact semigroup action `e^{t L_n}` on a mode.
pub fn evolve_mode(state: &ModeState, t: f64) -> Result<ModeState> {
    if !(t >= 0.0) {
        return Err(Error::InvalidTime {
            t,
            range: "[0, inf)",
        });
    }
    let coeffs = state
        .coeffs
        .iter()
        .zip(state.basis.eigenvalues())
        .map(|(c, &lam)| c * (-(lam as f64) * t).exp())
        .collect();
    Ok(ModeState {
        n: state.n,
        coeffs,
        basis: state.basis.clone(),
    })
}

/// How [`apply_ln`] differentiates.
#[derive(Debug, Clone, Copy)]
pub enum DiffScheme<'a> {
    /// Expand in the mode basis and use `L_n v_{n,l} = −λ_{l,n} v_{n,l}`.
    Spectral(&'a ModeBasis),
    /// Barycentric collocation on the rule's nodes.
    Collocation,
}

/// Samples of `L_n f = (1/cos x)(cos x f')' − n² tan² x f` at the nodes.
pub fn apply_ln(f: &[f64], n: i64, rule: &QuadratureRule, scheme: DiffScheme<'_>) -> Result<Vec<f64>> {
    rule.check_len(f)?;
    match scheme {
        DiffScheme::Spectral(basis) => {
            if basis.rule() != rule || basis.n().abs() != n.abs() {
                return Err(Error::InvalidArgument(
                    "spectral differentiation needs the basis of the same mode and rule".into(),
                ));
            }
            let coeffs: Vec<f64> = basis
                .samples()
                .iter()
                .zip(basis.eigenvalues())
                .map(|(v, &lam)| inner_weighted(f, v, rule).map(|c| -(lam as f64) * c))
                .collect::<Result<_>>()?;
            Ok(basis.reconstruct(&coeffs))
        }
        DiffScheme::Collocation => {
            let d = rule.differentiator()?;
            let lap = d.weighted_laplacian(f)?;
            let n2 = (n * n) as f64;
            Ok(lap
                .iter()
                .zip(f)
                .zip(rule.nodes())
                .map(|((l, v), x)| l - n2 * x.tan().powi(2) * v)
                .collect())
        }
    }
}

/// `(‖g_n(T)‖, e^{−|n|(T−t)} ‖g_n(t)‖)` for the mode started from `state0` at time 0.
pub fn dissipation_check(state0: &ModeState, t: f64, horizon: f64) -> Result<(f64, f64)> {
    if !(t > 0.0 && t < horizon) {
        return Err(Error::InvalidTime { t, range: "(0, T)" });
    }
    let at_t = evolve_mode(state0, t)?;
    let at_end = evolve_mode(state0, horizon)?;
    let rate = state0.n.abs() as f64;
    Ok((at_end.norm(), (-rate * (horizon - t)).exp() * at_t.norm()))
}

/// Which real harmonic a [`Field2D`] component multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Cos,
    Sin,
}

/// Real field on the sphere chart, stored per frequency `n = 0..=N`.
#[derive(Debug, Clone)]
pub struct Field2D {
    cos: Vec<ModeState>,
    sin: Vec<ModeState>,
    l_max: i64,
}

impl Field2D {
    /// Zero field over the bases `bases[n]`, `n = 0..=N`.
    pub fn zeros(bases: &[Arc<ModeBasis>]) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::TruncationMismatch("no modes".into()));
        }
        let l_max = bases[0].l_max();
        for (n, b) in bases.iter().enumerate() {
            if b.n() != n as i64 || b.l_max() != l_max {
                return Err(Error::TruncationMismatch(format!(
                    "basis {n} has n = {}, L = {}",
                    b.n(),
                    b.l_max()
                )));
            }
        }
        Ok(Self {
            cos: bases.iter().map(|b| ModeState::zeros(b.clone())).collect(),
            sin: bases.iter().map(|b| ModeState::zeros(b.clone())).collect(),
            l_max,
        })
    }

    pub fn n_max(&self) -> i64 {
        self.cos.len() as i64 - 1
    }

    pub fn l_max(&self) -> i64 {
        self.l_max
    }

    pub fn mode(&self, n: i64, part: Part) -> &ModeState {
        match part {
            Part::Cos => &self.cos[n as usize],
            Part::Sin => &self.sin[n as usize],
        }
    }

    pub fn mode_mut(&mut self, n: i64, part: Part) -> &mut ModeState {
        match part {
            Part::Cos => &mut self.cos[n as usize],
            Part::Sin => &mut self.sin[n as usize],
        }
    }

    /// Sets one coefficient. The `n = 0` sine part does not exist and is rejected.
    pub fn set(&mut self, n: i64, part: Part, l: i64, value: f64) -> Result<()> {
        if n < 0 || n > self.n_max() {
            return Err(Error::TruncationMismatch(format!("frequency {n} not stored")));
        }
        if n == 0 && part == Part::Sin {
            return Err(Error::InvalidArgument("n = 0 has no sine part".into()));
        }
        let state = self.mode_mut(n, part);
        let k = l - state.basis.l_min();
        if k < 0 || l > state.basis.l_max() {
            return Err(Error::DegreeBelowOrder { l, n });
        }
        state.coeffs[k as usize] = value;
        Ok(())
    }

    /// Modes in ascending `n`, cosine before sine.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Part, &ModeState)> {
        self.cos.iter().enumerate().flat_map(move |(n, c)| {
            let mut v = vec![(n as i64, Part::Cos, c)];
            if n > 0 {
                v.push((n as i64, Part::Sin, &self.sin[n]));
            }
            v
        })
    }

    /// Squared norm in `L²(Ω, cos x dx dy)`; ascending-n reduction.
    pub fn norm_sq(&self) -> f64 {
        self.modes().map(|(_, _, m)| m.norm_sq()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn evolve(&self, t: f64) -> Result<Self> {
        let mut out = self.clone();
        for (a, b) in out.cos.iter_mut().zip(&self.cos) {
            *a = evolve_mode(b, t)?;
        }
        for (a, b) in out.sin.iter_mut().zip(&self.sin) {
            *a = evolve_mode(b, t)?;
        }
        Ok(out)
    }

    /// Values `g(x_i, y)` at the nodes of the shared basis rule.
    pub fn evaluate_at(&self, y: f64) -> Vec<f64> {
        let rule_len = self.cos[0].basis.rule().len();
        let mut out = vec![0.0; rule_len];
        for (n, part, m) in self.modes() {
            let factor = match (n, part) {
                (0, _) => 1.0 / (2.0 * PI).sqrt(),
                (_, Part::Cos) => (n as f64 * y).cos() / PI.sqrt(),
                (_, Part::Sin) => (n as f64 * y).sin() / PI.sqrt(),
            };
            if factor == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(m.reconstruct()) {
                *o += factor * v;
            }
        }
        out
    }

    fn check_compatible(&self, other: &Field2D) -> Result<()> {
        if self.n_max() != other.n_max() || self.l_max != other.l_max {
            return Err(Error::TruncationMismatch(format!(
                "(N, L) = ({}, {}) vs ({}, {})",
                self.n_max(),
                self.l_max,
                other.n_max(),
                other.l_max
            )));
        }
        Ok(())
    }
}

/// Piecewise-constant-in-time source `1_ω u`, one [`Field2D`] per panel.
#[derive(Debug, Clone)]
pub struct ControlTrajectory {
    pub panels: Vec<(f64, f64)>,
    pub values: Vec<Field2D>,
}

/// `(1 − e^{−λΔ})/λ`, with the limit `Δ` at `λ = 0`.
pub fn exp_integral(lambda: f64, delta: f64) -> f64 {
    if lambda == 0.0 {
        delta
    } else {
        -(-lambda * delta).exp_m1() / lambda
    }
}

/// Duhamel evolution of one mode under piecewise-constant coefficients.
///
/// `panels` must lie in `[0, T]` in ascending order; time outside the panels
/// carries no source.
pub fn duhamel_evolve_mode(
    state0: &ModeState,
    panels: &[(f64, f64)],
    sources: &[Vec<f64>],
    horizon: f64,
) -> Result<ModeState> {
    if panels.len() != sources.len() {
        return Err(Error::LengthMismatch {
            expected: panels.len(),
            found: sources.len(),
        });
    }
    let lambdas: Vec<f64> = state0.basis.eigenvalues().iter().map(|&l| l as f64).collect();
    let mut c = state0.coeffs.clone();
    let mut now = 0.0;
    for (&(a, b), u) in panels.iter().zip(sources) {
        if a < now - 1e-12 || b > horizon + 1e-12 || b < a {
            return Err(Error::InvalidArgument(format!(
                "panel ({a}, {b}) out of order or outside [0, {horizon}]"
            )));
        }
        if u.len() != c.len() {
            return Err(Error::LengthMismatch {
                expected: c.len(),
                found: u.len(),
            });
        }
        let gap = a - now;
        let width = b - a;
        for ((ci, ui), lam) in c.iter_mut().zip(u).zip(&lambdas) {
            *ci = *ci * (-lam * (gap + width)).exp() + ui * exp_integral(*lam, width);
        }
        now = b;
    }
    for (ci, lam) in c.iter_mut().zip(&lambdas) {
        *ci *= (-lam * (horizon - now)).exp();
    }
    ModeState::new(state0.basis.clone(), c)
}

/// Final state at `T` of `∂_t f − L f = 1_ω u`, mode by mode.
pub fn duhamel_evolve(
    f0: &Field2D,
    control: &ControlTrajectory,
    horizon: f64,
    grid: &TimeGrid,
) -> Result<Field2D> {
    if (grid.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "grid horizon {} does not match T = {horizon}",
            grid.horizon()
        )));
    }
    if control.panels.len() != control.values.len() {
        return Err(Error::LengthMismatch {
            expected: control.panels.len(),
            found: control.values.len(),
        });
    }
    for v in &control.values {
        f0.check_compatible(v)?;
    }
    let mut out = f0.clone();
    for n in 0..=f0.n_max() {
        for part in [Part::Cos, Part::Sin] {
            if n == 0 && part == Part::Sin {
                continue;
            }
            let sources: Vec<Vec<f64>> = control
                .values
                .iter()
                .map(|v| v.mode(n, part).coeffs.clone())
                .collect();
            *out.mode_mut(n, part) =
                duhamel_evolve_mode(f0.mode(n, part), &control.panels, &sources, horizon)?;
        }
    }
    Ok(out)
}

/// Uniform longitude grid `y_j = 2πj/ny`.
pub fn longitude_grid(ny: usize) -> Vec<f64> {
    (0..ny).map(|j| 2.0 * PI * j as f64 / ny as f64).collect()
}

/// `g_n(x_i) = Σ_j g(x_i, y_j) e^{−iny_j} Δy` on a uniform longitude grid.
///
/// `values[i][j]` holds `g(x_i, y_j)`; `n_max` is the largest frequency the
/// caller intends to resolve.
pub fn fourier_component(values: &[Vec<Complex64>], n: i64, n_max: i64) -> Result<Vec<Complex64>> {
    let ny = values.first().map_or(0, |r| r.len());
    let needed = (2 * n_max.max(n.abs()) + 2) as usize;
    if ny < needed {
        return Err(Error::TooFewSamples { needed, found: ny });
    }
    let dy = 2.0 * PI / ny as f64;
    let phases: Vec<Complex64> = (0..ny)
        .map(|j| Complex64::from_polar(dy, -(n as f64) * dy * j as f64))
        .collect();
    values
        .iter()
        .map(|row| {
            if row.len() != ny {
                return Err(Error::LengthMismatch {
                    expected: ny,
                    found: row.len(),
                });
            }
            Ok(row.iter().zip(&phases).map(|(g, p)| g * p).sum())
        })
        .collect()
}

/// `g(x_i, y) = (1/2π) Σ_n g_n(x_i) e^{iny}` from components `n = −N..=N`.
pub fn fourier_reconstruct(components: &[(i64, Vec<Complex64>)], y: f64) -> Vec<Complex64> {
    let len = components.first().map_or(0, |c| c.1.len());
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (n, comp) in components {
        let p = Complex64::from_polar(1.0 / (2.0 * PI), *n as f64 * y);
        for (o, c) in out.iter_mut().zip(comp) {
            *o += c * p;
        }
    }
    out
}

/// Complex Fourier component `g_n` (n ≥ 0) of a [`Field2D`] on the basis rule.
pub fn field_component(field: &Field2D, n: i64) -> Vec<Complex64> {
    let c = field.mode(n, Part::Cos).reconstruct();
    if n == 0 {
        return c
            .into_iter()
            .map(|a| Complex64::new(a * (2.0 * PI).sqrt(), 0.0))
            .collect();
    }
    let s = field.mode(n, Part::Sin).reconstruct();
    c.into_iter()
        .zip(s)
        .map(|(a, b)| Complex64::new(a, -b) * PI.sqrt())
        .collect()
}

/// Accumulates `alpha · other` into `target` (same truncation).
pub fn field_axpy(target: &mut Field2D, other: &Field2D, alpha: f64) -> Result<()> {
    target.check_compatible(other)?;
    for (a, b) in target.cos.iter_mut().zip(&other.cos) {
        a.scaled_add(b, alpha);
    }
    for (a, b) in target.sin.iter_mut().zip(&other.sin) {
        a.scaled_add(b, alpha);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::eigenfunction_vnl;
    use crate::numerics::{make_latitude_rule, QuadratureRule};

    fn basis(n: i64, l: i64) -> Arc<ModeBasis> {
        Arc::new(ModeBasis::new(n, l, make_latitude_rule(64).unwrap()).unwrap())
    }

    #[test]
    fn projection_examples() {
        let b = basis(0, 8);
        let rule = b.rule().clone();
        let v3 = eigenfunction_vnl(3, 0, &rule).unwrap();
        let s = project_mode(&v3, &b).unwrap();
        for (k, c) in s.coeffs().iter().enumerate() {
            let e = if k == 3 { 1.0 } else { 0.0 };
            assert!((c - e).abs() < 1e-12);
        }
        let v1 = eigenfunction_vnl(1, 0, &rule).unwrap();
        let v2 = eigenfunction_vnl(2, 0, &rule).unwrap();
        let f: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| 3.0 * a + 4.0 * b).collect();
        let s = project_mode(&f, &b).unwrap();
        assert!((s.coeff(1) - 3.0).abs() < 1e-12 && (s.coeff(2) - 4.0).abs() < 1e-12);
        assert!((s.norm() - 5.0).abs() < 1e-12);
        let outside = eigenfunction_vnl(9, 0, &rule).unwrap();
        assert!(project_mode(&outside, &b)
            .unwrap()
            .coeffs()
            .iter()
            .all(|c| c.abs() < 1e-8));
    }

    #[test]
    fn evolution_examples() {
        let b = basis(0, 5);
        let s = ModeState::new(b.clone(), vec![1.0, 0.5, -0.2, 0.1, 0.0, 0.3]).unwrap();
        let same = evolve_mode(&s, 0.0).unwrap();
        assert_eq!(same.coeffs(), s.coeffs());
        let later = evolve_mode(&s, 7.0).unwrap();
        assert_eq!(later.coeff(0), 1.0);
        assert!(evolve_mode(&s, -1.0).is_err());

        let b3 = basis(3, 6);
        let p = ModeState::pure(b3, 3).unwrap();
        let e = evolve_mode(&p, 1.7).unwrap();
        assert!((e.coeff(3) - (-3.0f64 * 1.7).exp()).abs() < 1e-15);
    }

    #[test]
    fn apply_ln_examples() {
        let rule = QuadratureRule::latitude_gauss(96).unwrap();
        let ones = vec![1.0; rule.len()];
        let z = apply_ln(&ones, 0, &rule, DiffScheme::Collocation).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-7));
        let s = rule.sample(f64::sin);
        let ls = apply_ln(&s, 0, &rule, DiffScheme::Collocation).unwrap();
        for (x, v) in rule.nodes().iter().zip(&ls) {
            assert!((v + 2.0 * x.sin()).abs() < 1e-6, "x={x}: {v}");
        }
        let b = ModeBasis::new(2, 12, rule.clone()).unwrap();
        let v = eigenfunction_vnl(7, 2, &rule).unwrap();
        let lv = apply_ln(&v, 2, &rule, DiffScheme::Spectral(&b)).unwrap();
        for (a, c) in lv.iter().zip(&v) {
            assert!((a + 52.0 * c).abs() < 1e-10);
        }
    }

    #[test]
    fn dissipation_examples() {
        let b = basis(4, 9);
        let pure = ModeState::pure(b.clone(), 4).unwrap();
        let (l, r) = dissipation_check(&pure, 0.3, 1.0).unwrap();
        assert!((l - r).abs() < 1e-15);
        let mixed = ModeState::new(b, vec![1.0, 0.3, 0.0, 0.0, 0.2, 0.0]).unwrap();
        let (l, r) = dissipation_check(&mixed, 0.3, 1.0).unwrap();
        assert!(l < r);
        let b0 = basis(0, 0);
        let (l, r) = dissipation_check(&ModeState::pure(b0, 0).unwrap(), 0.2, 2.0).unwrap();
        assert_eq!(l, r);
        assert!(dissipation_check(&mixed_zero(), 1.0, 1.0).is_err());
    }

    fn mixed_zero() -> ModeState {
        ModeState::zeros(basis(1, 2))
    }

    #[test]
    fn duhamel_zero_control_is_semigroup() {
        let bases: Vec<_> = (0..=2).map(|n| basis(n, 4)).collect();
        let mut f0 = Field2D::zeros(&bases).unwrap();
        f0.set(0, Part::Cos, 2, 1.0).unwrap();
        f0.set(2, Part::Sin, 3, -0.5).unwrap();
        let grid = TimeGrid::full(1.5, 7).unwrap();
        let zero = Field2D::zeros(&bases).unwrap();
        let ctl = ControlTrajectory {
            panels: grid.panels().to_vec(),
            values: vec![zero; 7],
        };
        let out = duhamel_evolve(&f0, &ctl, 1.5, &grid).unwrap();
        let direct = f0.evolve(1.5).unwrap();
        for ((_, _, a), (_, _, b)) in out.modes().zip(direct.modes()) {
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
        assert!(duhamel_evolve(&f0, &ctl, 2.0, &grid).is_err());
    }

    #[test]
    fn duhamel_constant_control_closed_form() {
        let b = basis(0, 2);
        let s0 = ModeState::new(b, vec![0.7, -0.4, 0.25]).unwrap();
        let u = vec![0.3, 1.1, -0.6];
        let horizon = 0.8;
        let panels: Vec<(f64, f64)> = (0..5).map(|k| (k as f64 * 0.16, (k + 1) as f64 * 0.16)).collect();
        let out = duhamel_evolve_mode(&s0, &panels, &vec![u.clone(); 5], horizon).unwrap();
        // Fine-step reference: exact per-step exponential update of c' = -λc + u.
        let steps = 100_000;
        let dt = horizon / steps as f64;
        let mut c = s0.coeffs().to_vec();
        let lams = [0.0, 2.0, 6.0];
        for _ in 0..steps {
            for k in 0..3 {
                // Midpoint (RK2) step.
                let k1 = -lams[k] * c[k] + u[k];
                let mid = c[k] + 0.5 * dt * k1;
                c[k] += dt * (-lams[k] * mid + u[k]);
            }
        }
        for k in 0..3 {
            assert!((out.coeffs()[k] - c[k]).abs() < 1e-8, "k={k}");
        }
        assert!((exp_integral(0.0, 0.25) - 0.25).abs() < 1e-16);
    }

    #[test]
    fn fourier_examples() {
        let rule = make_latitude_rule(16).unwrap();
        let v = eigenfunction_vnl(3, 2, &rule).unwrap();
        let ys = longitude_grid(12);
        let g: Vec<Vec<Complex64>> = v
            .iter()
            .map(|&vx| ys.iter().map(|&y| Complex64::from_polar(vx, 2.0 * y)).collect())
            .collect();
        let c2 = fourier_component(&g, 2, 4).unwrap();
        for (c, vx) in c2.iter().zip(&v) {
            assert!((c - Complex64::new(2.0 * PI * vx, 0.0)).norm() < 1e-12);
        }
        for n in [-4, -2, 0, 1, 3, 4] {
            assert!(fourier_component(&g, n, 4).unwrap().iter().all(|c| c.norm() < 1e-12));
        }
        assert_eq!(
            fourier_component(&g, 2, 6).unwrap_err(),
            Error::TooFewSamples { needed: 14, found: 12 }
        );
        let flat: Vec<Vec<Complex64>> = v.iter().map(|&vx| vec![Complex64::new(vx, 0.0); 12]).collect();
        for n in 1..=4 {
            assert!(fourier_component(&flat, n, 4).unwrap().iter().all(|c| c.norm() < 1e-12));
        }
    }
}
