//! Penalized HUM null controls, mode by mode, and their 2D assembly.
//!
//! For a mode with initial coefficients `f0`, the adjoint state is
//! `φ(t) = Σ p_l e^{−λ_l (T − t)} v_l` and the control is `u = 1_ω φ`. The
//! final state is `D f0 + G p` with `D = diag(e^{−λ T})` and `G` the
//! controllability Gramian; `p` solves `(G + ε I) p = −D f0`, so the final
//! state equals `−ε p`.

use crate::error::{Error, Result};
use crate::legendre::{eigenfunction_vnl, ModeBasis};
use crate::numerics::TimeGrid;
use crate::observability::{spatial_overlap_matrix, time_factor, ControlRegion};
use crate::spectral::{exp_integral, ControlTrajectory, Field2D, ModeState, Part};
use nalgebra::{Cholesky, DMatrix, DVector};
use std::sync::Arc;

/// `G_{ll'} = ∫_0^T ∫_ω e^{−λ_l (T−t)} e^{−λ_l' (T−t)} v_l v_l' cos x dx dt`.
pub fn hum_gramian(basis: &ModeBasis, region: &ControlRegion, horizon: f64) -> Result<DMatrix<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidHorizon(horizon));
    }
    let s = spatial_overlap_matrix(basis, region)?;
    let d = basis.dim();
    // Backward time τ = T − t runs over the same interval.
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let sigma = basis.eigenvalue_f64(i) + basis.eigenvalue_f64(j);
        s[(i, j)] * time_factor(sigma, horizon)
    }))
}

/// `ε` scaled by the mean diagonal of `G`.
pub fn relative_epsilon(gramian: &DMatrix<f64>, eps_rel: f64) -> f64 {
    eps_rel * gramian.trace() / gramian.nrows().max(1) as f64
}

/// Synthesized control of one mode.
#[derive(Debug, Clone)]
pub struct ModeControl {
    pub basis: Arc<ModeBasis>,
    pub horizon: f64,
    pub epsilon: f64,
    /// Terminal adjoint coefficients `p`.
    pub adjoint: Vec<f64>,
    /// `D f0 + G p`.
    pub predicted_final: Vec<f64>,
    /// `pᵀ G p = ∫_0^T ∫_ω |φ|²`.
    pub cost: f64,
    /// Energy of `1_ω φ` outside the span of the basis, integrated in time.
    pub projection_loss: f64,
    pub panels: Vec<(f64, f64)>,
    /// Per-panel source coefficients for [`crate::spectral::duhamel_evolve_mode`].
    pub sources: Vec<Vec<f64>>,
    overlap: DMatrix<f64>,
    region: ControlRegion,
}

impl ModeControl {
    pub fn final_norm(&self) -> f64 {
        self.predicted_final.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn region(&self) -> &ControlRegion {
        &self.region
    }

    /// `φ(t, x)` at latitude `x`, without the mask.
    pub fn adjoint_at(&self, t: f64, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (k, l) in self.basis.degrees().enumerate() {
            let lam = self.basis.eigenvalue_f64(k);
            acc += self.adjoint[k]
                * (-lam * (self.horizon - t)).exp()
                * crate::legendre::eigenfunction_value(l, self.basis.n(), x)?;
        }
        Ok(acc)
    }

    /// `u(t, x) = 1_ω(x) φ(t, x)`.
    pub fn control_at(&self, t: f64, x: f64) -> Result<f64> {
        if !self.region.contains(x) {
            return Ok(0.0);
        }
        self.adjoint_at(t, x)
    }

    /// Coefficients of the projection of `u(t)` on the basis, `S E(t) p`.
    pub fn projected_coefficients(&self, t: f64) -> Vec<f64> {
        let d = self.basis.dim();
        let e = DVector::from_fn(d, |k, _| {
            self.adjoint[k] * (-self.basis.eigenvalue_f64(k) * (self.horizon - t)).exp()
        });
        (&self.overlap * e).iter().copied().collect()
    }
}

fn check_panels(panels: &[(f64, f64)], horizon: f64) -> Result<()> {
    let mut now = 0.0;
    for &(a, b) in panels {
        if (a - now).abs() > 1e-12 * horizon.max(1.0) || b <= a {
            return Err(Error::InvalidArgument(
                "control panels must tile [0, T] contiguously".into(),
            ));
        }
        now = b;
    }
    if (now - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::InvalidArgument(
            "control panels must tile [0, T] contiguously".into(),
        ));
    }
    Ok(())
}

/// Penalized HUM control of one mode.
///
/// Each panel carries the constant coefficient that produces the same effect
/// on the final state as the exact exponential control over that panel:
/// `ū_l = ∫_panel e^{−λ_l (b − t)} u_l(t) dt / ∫_panel e^{−λ_l (b − t)} dt`.
pub fn solve_mode_control(
    f0: &ModeState,
    region: &ControlRegion,
    horizon: f64,
    epsilon: f64,
    grid: &TimeGrid,
) -> Result<ModeControl> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    check_panels(grid.panels(), horizon)?;
    let basis = f0.basis().clone();
    let d = basis.dim();
    let s = spatial_overlap_matrix(&basis, region)?;
    let g = hum_gramian(&basis, region, horizon)?;
    let lam: Vec<f64> = (0..d).map(|k| basis.eigenvalue_f64(k)).collect();
    let free = DVector::from_fn(d, |k, _| f0.coeffs()[k] * (-lam[k] * horizon).exp());

    let mut a = g.clone();
    for i in 0..d {
        a[(i, i)] += epsilon;
    }
    let chol = Cholesky::new(a).ok_or_else(|| Error::Singular(g.trace() / epsilon))?;
    let p = chol.solve(&(-&free));
    let gp = &g * &p;
    let predicted = &free + &gp;
    let cost = p.dot(&gp);

    let ss = s.transpose() * &s;
    let kept = DMatrix::from_fn(d, d, |i, j| ss[(i, j)] * time_factor(lam[i] + lam[j], horizon));
    let projected = p.dot(&(&kept * &p));

    let mut sources = Vec::with_capacity(grid.panels().len());
    for &(ta, tb) in grid.panels() {
        let width = tb - ta;
        // w_j = p_j e^{−λ_j (T − b)} ∫_0^Δ e^{−(λ_l + λ_j) τ} dτ, then S w row by row.
        let mut u = vec![0.0; d];
        for (l, ul) in u.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..d {
                if s[(l, j)] == 0.0 || p[j] == 0.0 {
                    continue;
                }
                acc += s[(l, j)]
                    * p[j]
                    * (-lam[j] * (horizon - tb)).exp()
                    * time_factor(lam[l] + lam[j], width);
            }
            *ul = acc / exp_integral(lam[l], width);
        }
        sources.push(u);
    }

    Ok(ModeControl {
        basis,
        horizon,
        epsilon,
        adjoint: p.iter().copied().collect(),
        predicted_final: predicted.iter().copied().collect(),
        cost,
        projection_loss: (cost - projected).max(0.0),
        panels: grid.panels().to_vec(),
        sources,
        overlap: s,
        region: *region,
    })
}

/// HUM control of a full field, one solve per `(n, part)`.
#[derive(Debug, Clone)]
pub struct FieldControl {
    pub modes: Vec<(i64, Part, ModeControl)>,
    pub trajectory: ControlTrajectory,
    pub predicted_final: Field2D,
}

impl FieldControl {
    /// `∫_0^T ∫ |u|² dσ dt`, the sum of the per-mode costs.
    pub fn cost(&self) -> f64 {
        self.modes.iter().map(|(_, _, m)| m.cost).sum()
    }

    /// `u(t, x, y)` in the orthonormal real harmonics of [`Field2D`].
    pub fn sample(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let mut acc = 0.0;
        for (n, part, m) in &self.modes {
            let ang = match (n, part) {
                (0, _) => 1.0 / (2.0 * std::f64::consts::PI).sqrt(),
                (_, Part::Cos) => (*n as f64 * y).cos() / sqrt_pi,
                (_, Part::Sin) => (*n as f64 * y).sin() / sqrt_pi,
            };
            acc += ang * m.control_at(t, x)?;
        }
        Ok(acc)
    }
}

/// Controls for every `(n, part)` of `f0`.
pub fn solve_field_control(
    f0: &Field2D,
    region: &ControlRegion,
    horizon: f64,
    epsilon: f64,
    grid: &TimeGrid,
) -> Result<FieldControl> {
    let mut modes = Vec::new();
    for (n, part, state) in f0.modes() {
        modes.push((n, part, solve_mode_control(state, region, horizon, epsilon, grid)?));
    }
    let mut predicted = f0.clone();
    for (n, part, m) in &modes {
        predicted.mode_mut(*n, *part).coeffs_mut().copy_from_slice(&m.predicted_final);
    }
    let trajectory = assemble_control_2d(f0, &modes)?;
    Ok(FieldControl {
        modes,
        trajectory,
        predicted_final: predicted,
    })
}

/// Per-panel [`Field2D`] sources from per-mode controls sharing the panels.
pub fn assemble_control_2d(
    template: &Field2D,
    modes: &[(i64, Part, ModeControl)],
) -> Result<ControlTrajectory> {
    let panels = match modes.first() {
        Some((_, _, m)) => m.panels.clone(),
        None => return Err(Error::EmptyFamily),
    };
    let mut values = Vec::with_capacity(panels.len());
    for k in 0..panels.len() {
        let mut field = template.clone();
        for n in 0..=field.n_max() {
            for part in [Part::Cos, Part::Sin] {
                field.mode_mut(n, part).coeffs_mut().fill(0.0);
            }
        }
        for (n, part, m) in modes {
            if m.panels != panels {
                return Err(Error::TruncationMismatch("controls use different panels".into()));
            }
            if *n > template.n_max() || m.basis.l_max() != template.l_max() {
                return Err(Error::TruncationMismatch(format!(
                    "mode n = {n} does not fit the field truncation"
                )));
            }
            field
                .mode_mut(*n, *part)
                .coeffs_mut()
                .copy_from_slice(&m.sources[k]);
        }
        values.push(field);
    }
    Ok(ControlTrajectory { panels, values })
}

/// Samples of `u(t, ·)` on latitude nodes; zero off `ω`.
pub fn control_samples(control: &ModeControl, t: f64, nodes: &[f64]) -> Result<Vec<f64>> {
    nodes.iter().map(|&x| control.control_at(t, x)).collect()
}

/// Samples of `v_{n,l}` restricted to `ω` on latitude nodes.
pub fn masked_eigenfunction(l: i64, n: i64, region: &ControlRegion, rule: &crate::numerics::QuadratureRule) -> Result<Vec<f64>> {
    let v = eigenfunction_vnl(l, n, rule)?;
    Ok(v.iter()
        .zip(rule.nodes())
        .map(|(a, x)| if region.contains(*x) { *a } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::QuadratureRule;
    use crate::observability::observability_gramian;
    use crate::spectral::duhamel_evolve_mode;
    use std::f64::consts::FRAC_PI_2;

    fn basis(n: i64, l_max: i64) -> Arc<ModeBasis> {
        let rule = QuadratureRule::sine_gauss_on(-FRAC_PI_2, FRAC_PI_2, 64).unwrap();
        Arc::new(ModeBasis::new(n, l_max, rule).unwrap())
    }

    #[test]
    fn gramian_duality() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        for n in [0, 2, 5] {
            let b = basis(n, 18);
            let g = hum_gramian(&b, &r, 1.3).unwrap();
            let m = observability_gramian(&b, &r, 1.3).unwrap();
            assert!((&g - &m).abs().max() < 1e-12);
        }
        let b = basis(0, 3);
        let g = hum_gramian(&b, &r, 2.0).unwrap();
        let s = spatial_overlap_matrix(&b, &r).unwrap();
        assert!((g[(0, 0)] - 2.0 * s[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn zero_data_gives_zero_control() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        let grid = TimeGrid::full(1.0, 10).unwrap();
        let f0 = ModeState::zeros(basis(1, 10));
        let c = solve_mode_control(&f0, &r, 1.0, 1e-4, &grid).unwrap();
        assert!(c.adjoint.iter().all(|v| *v == 0.0));
        assert_eq!(c.final_norm(), 0.0);
        assert_eq!(c.cost, 0.0);
    }

    #[test]
    fn simulation_matches_prediction() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        let grid = TimeGrid::full(1.0, 20).unwrap();
        let b = basis(1, 16);
        let f0 = ModeState::pure(b, 3).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6] {
            let c = solve_mode_control(&f0, &r, 1.0, eps, &grid).unwrap();
            let sim = duhamel_evolve_mode(&f0, &c.panels, &c.sources, 1.0).unwrap();
            for (a, b) in sim.coeffs().iter().zip(&c.predicted_final) {
                assert!((a - b).abs() < 1e-8, "{a} {b}");
            }
            for (a, b) in c.predicted_final.iter().zip(&c.adjoint) {
                assert!((a + eps * b).abs() < 1e-10 * (1.0 + a.abs()));
            }
            assert!(c.final_norm() < prev);
            assert!(c.projection_loss >= 0.0 && c.projection_loss <= c.cost);
            prev = c.final_norm();
        }
    }

    #[test]
    fn control_vanishes_off_region() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        let grid = TimeGrid::full(1.0, 4).unwrap();
        let f0 = ModeState::pure(basis(0, 6), 0).unwrap();
        let c = solve_mode_control(&f0, &r, 1.0, 1e-3, &grid).unwrap();
        let nodes = [-1.4, -0.3, 0.0, 0.59, 0.7, 1.1, 1.25];
        let u = control_samples(&c, 0.5, &nodes).unwrap();
        for (x, v) in nodes.iter().zip(&u) {
            assert_eq!(*v == 0.0, !r.contains(*x), "{x}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let r = ControlRegion::new(0.6, 1.2).unwrap();
        let f0 = ModeState::pure(basis(0, 4), 0).unwrap();
        let grid = TimeGrid::full(1.0, 4).unwrap();
        assert!(solve_mode_control(&f0, &r, 1.0, 0.0, &grid).is_err());
        assert!(solve_mode_control(&f0, &r, 2.0, 1e-3, &grid).is_err());
        assert!(hum_gramian(&f0.basis().clone(), &r, -1.0).is_err());
    }
}
