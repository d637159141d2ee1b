//! Quadrature rules, time grids and inner products on the latitude interval
//! `(-pi/2, pi/2)`.
//!
//! Every [`QuadratureRule`] stores *cos-weighted* weights: applying the rule to
//! samples `f(x_i)` approximates `∫ f(x) cos x dx`. Unweighted integrals divide
//! the weights by `cos x_i`, which is safe because nodes never sit on `±pi/2`.
//!
//! Two node families are provided:
//!
//! * [`RuleKind::SineGauss`]: Gauss–Legendre in `t = sin x`. Under this
//!   substitution `∫ f(x) cos x dx = ∫ f(arcsin t) dt`, so the weighted integral
//!   of any polynomial in `sin x` of degree `≤ 2·order − 1` is exact. This is the
//!   natural rule for products of eigenfunctions of the same frequency.
//! * [`RuleKind::LatitudeGauss`]: Gauss–Legendre directly in `x`. Integrands
//!   that are entire in `x` but carry no `cos x` factor (plain integrals such as
//!   `∫ 1 dx`) converge spectrally here, whereas the sine rule sees an
//!   `(1 − t²)^(-1/2)` endpoint singularity.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// How a [`QuadratureRule`] was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Gauss–Legendre in `t = sin x` on a single panel.
    SineGauss,
    /// Gauss–Legendre in `x` on a single panel.
    LatitudeGauss,
    /// Concatenation of several panels (composite or multi-component rules).
    Composite,
}

/// Nodes and cos-weighted weights on a subset of `(-pi/2, pi/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: RuleKind,
    interval: (f64, f64),
}

impl QuadratureRule {
    /// Gauss rule of `order` points in `t = sin x` over `(lo, hi)`.
    pub fn sine_gauss_on(lo: f64, hi: f64, order: usize) -> Result<Self> {
        check_interval(lo, hi)?;
        if order < 2 {
            return Err(Error::OrderTooSmall(order));
        }
        let (xi, w) = gauss_legendre(order);
        let (tl, th) = (lo.sin(), hi.sin());
        let half = 0.5 * (th - tl);
        let mid = 0.5 * (th + tl);
        let nodes = xi.iter().map(|&s| (mid + half * s).asin()).collect();
        let weights = w.iter().map(|&wi| wi * half).collect();
        Ok(Self {
            nodes,
            weights,
            kind: RuleKind::SineGauss,
            interval: (lo, hi),
        })
    }

    /// Gauss rule of `order` points in `x` over `(lo, hi)`.
    pub fn latitude_gauss_on(lo: f64, hi: f64, order: usize) -> Result<Self> {
        check_interval(lo, hi)?;
        if order < 2 {
            return Err(Error::OrderTooSmall(order));
        }
        let (xi, w) = gauss_legendre(order);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let nodes: Vec<f64> = xi.iter().map(|&s| mid + half * s).collect();
        let weights = w
            .iter()
            .zip(&nodes)
            .map(|(&wi, &x)| wi * half * x.cos())
            .collect();
        Ok(Self {
            nodes,
            weights,
            kind: RuleKind::LatitudeGauss,
            interval: (lo, hi),
        })
    }

    /// Gauss rule in `x` over the full latitude interval.
    pub fn latitude_gauss(order: usize) -> Result<Self> {
        Self::latitude_gauss_on(-FRAC_PI_2, FRAC_PI_2, order)
    }

    /// Composite Gauss rule in `x`: `panels` equal panels with `points` nodes each.
    pub fn composite_latitude(lo: f64, hi: f64, panels: usize, points: usize) -> Result<Self> {
        check_interval(lo, hi)?;
        if panels == 0 {
            return Err(Error::InvalidArgument("need at least one panel".into()));
        }
        let width = (hi - lo) / panels as f64;
        let parts = (0..panels)
            .map(|k| {
                let a = lo + k as f64 * width;
                let b = if k + 1 == panels { hi } else { a + width };
                Self::latitude_gauss_on(a, b, points)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::union(&parts))
    }

    /// Concatenates rules over disjoint, ordered intervals.
    pub fn union(parts: &[QuadratureRule]) -> Self {
        let mut sorted: Vec<&QuadratureRule> = parts.iter().collect();
        sorted.sort_by(|a, b| a.interval.0.total_cmp(&b.interval.0));
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for p in &sorted {
            nodes.extend_from_slice(&p.nodes);
            weights.extend_from_slice(&p.weights);
        }
        let interval = match (sorted.first(), sorted.last()) {
            (Some(f), Some(l)) => (f.interval.0, l.interval.1),
            _ => (0.0, 0.0),
        };
        Self {
            nodes,
            weights,
            kind: RuleKind::Composite,
            interval,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cos-weighted weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights for `∫ f dx` (no `cos x` factor).
    pub fn plain_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.nodes)
            .map(|(w, x)| w / x.cos())
            .collect()
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Samples `f` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// `∫ f(x) cos x dx`.
    pub fn integrate_weighted(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(f.iter().zip(&self.weights).map(|(a, w)| a * w).sum())
    }

    /// `∫ f(x) dx`.
    pub fn integrate_plain(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(f
            .iter()
            .zip(&self.weights)
            .zip(&self.nodes)
            .map(|((a, w), x)| a * w / x.cos())
            .sum())
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                found: f.len(),
            });
        }
        Ok(())
    }

    /// Collocation differentiation on this rule. Only single-panel rules
    /// carry a global interpolant.
    pub fn differentiator(&self) -> Result<Differentiator> {
        Differentiator::new(self)
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    let tol = 1e-14;
    if !(lo < hi) || lo < -FRAC_PI_2 - tol || hi > FRAC_PI_2 + tol {
        return Err(Error::InvalidArgument(format!(
            "interval ({lo}, {hi}) not inside [-pi/2, pi/2]"
        )));
    }
    Ok(())
}

/// Gauss rule of the requested order in `t = sin x` over `(-pi/2, pi/2)`.
pub fn make_latitude_rule(order: usize) -> Result<QuadratureRule> {
    QuadratureRule::sine_gauss_on(-FRAC_PI_2, FRAC_PI_2, order)
}

/// Default order for a basis with maximal degree `l_max` and frequency `n_max`.
pub fn default_order(l_max: usize, n_max: usize) -> usize {
    64.max(2 * (l_max + n_max))
}

/// Order of an `x`-Gauss rule on which collocation second derivatives of the
/// degree-`l_max` eigenfunctions are resolved to about `1e-8`.
pub fn collocation_order(l_max: usize, n_max: usize) -> usize {
    96.max(3 * (l_max + n_max))
}

/// `∫ f g cos x dx`.
pub fn inner_weighted(f: &[f64], g: &[f64], rule: &QuadratureRule) -> Result<f64> {
    rule.check_len(f)?;
    rule.check_len(g)?;
    Ok(f.iter()
        .zip(g)
        .zip(rule.weights())
        .map(|((a, b), w)| a * b * w)
        .sum())
}

/// `∫ f g dx`.
pub fn inner_plain(f: &[f64], g: &[f64], rule: &QuadratureRule) -> Result<f64> {
    rule.check_len(f)?;
    rule.check_len(g)?;
    Ok(f.iter()
        .zip(g)
        .zip(rule.weights().iter().zip(rule.nodes()))
        .map(|((a, b), (w, x))| a * b * w / x.cos())
        .sum())
}

pub fn norm_weighted(f: &[f64], rule: &QuadratureRule) -> Result<f64> {
    Ok(inner_weighted(f, f, rule)?.max(0.0).sqrt())
}

pub fn norm_plain(f: &[f64], rule: &QuadratureRule) -> Result<f64> {
    Ok(inner_plain(f, f, rule)?.max(0.0).sqrt())
}

/// Barycentric collocation derivative on a single-panel Gauss rule.
///
/// For [`RuleKind::SineGauss`] the interpolant is a polynomial in `t = sin x`
/// and `d/dx = cos x · d/dt`; for [`RuleKind::LatitudeGauss`] it is a
/// polynomial in `x`.
#[derive(Debug, Clone)]
pub struct Differentiator {
    kind: RuleKind,
    matrix: DMatrix<f64>,
    cos: Vec<f64>,
}

impl Differentiator {
    pub fn new(rule: &QuadratureRule) -> Result<Self> {
        let coords: Vec<f64> = match rule.kind() {
            RuleKind::SineGauss => rule.nodes().iter().map(|x| x.sin()).collect(),
            RuleKind::LatitudeGauss => rule.nodes().to_vec(),
            RuleKind::Composite => {
                return Err(Error::InvalidArgument(
                    "collocation differentiation needs a single-panel rule".into(),
                ))
            }
        };
        let n = coords.len();
        // Gauss-Legendre barycentric weights: (-1)^j sqrt((1 - xi_j^2) w_j).
        let (xi, w) = gauss_legendre(n);
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * ((1.0 - xi[j] * xi[j]) * w[j]).sqrt()
            })
            .collect();
        let mut matrix = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let d = (bary[j] / bary[i]) / (coords[i] - coords[j]);
                    matrix[(i, j)] = d;
                    diag -= d;
                }
            }
            matrix[(i, i)] = diag;
        }
        Ok(Self {
            kind: rule.kind(),
            matrix,
            cos: rule.nodes().iter().map(|x| x.cos()).collect(),
        })
    }

    /// Derivative with respect to the interpolation coordinate (`t` or `x`).
    pub fn raw(&self, f: &[f64]) -> Vec<f64> {
        let n = self.cos.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * f[j]).sum())
            .collect()
    }

    /// `df/dx` at the nodes.
    pub fn dx(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.cos.len() {
            return Err(Error::LengthMismatch {
                expected: self.cos.len(),
                found: f.len(),
            });
        }
        let d = self.raw(f);
        Ok(match self.kind {
            RuleKind::SineGauss => d.iter().zip(&self.cos).map(|(a, c)| a * c).collect(),
            _ => d,
        })
    }

    /// `(1/cos x) d/dx (cos x · df/dx)` at the nodes.
    pub fn weighted_laplacian(&self, f: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            RuleKind::SineGauss => {
                // In t: d/dt((1 - t^2) df/dt).
                let ft = self.raw(f);
                let inner: Vec<f64> = ft
                    .iter()
                    .zip(&self.cos)
                    .map(|(d, c)| d * c * c)
                    .collect();
                Ok(self.raw(&inner))
            }
            _ => {
                let fx = self.dx(f)?;
                let inner: Vec<f64> = fx.iter().zip(&self.cos).map(|(d, c)| d * c).collect();
                let outer = self.raw(&inner);
                Ok(outer.iter().zip(&self.cos).map(|(d, c)| d / c).collect())
            }
        }
    }
}

/// Integration nodes over a time horizon, strictly inside `(0, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: Vec<(f64, f64)>,
}

/// Gauss points per panel used by [`make_time_grid`].
pub const TIME_POINTS_PER_PANEL: usize = 4;

/// Default relative clearance from the endpoints of `(0, T)`.
pub const DEFAULT_CLEARANCE: f64 = 1e-3;

/// Composite Gauss rule over `[clearance·T, (1 − clearance)·T]`.
pub fn make_time_grid(horizon: f64, steps: usize, clearance: f64) -> Result<TimeGrid> {
    if !(clearance > 0.0 && clearance < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "clearance {clearance} outside (0, 1/2)"
        )));
    }
    TimeGrid::on_interval(
        horizon,
        clearance * horizon,
        (1.0 - clearance) * horizon,
        steps,
        TIME_POINTS_PER_PANEL,
    )
}

impl TimeGrid {
    /// Composite Gauss rule with `steps` equal panels over `[lo, hi] ⊂ [0, T]`.
    pub fn on_interval(horizon: f64, lo: f64, hi: f64, steps: usize, points: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidHorizon(horizon));
        }
        if steps == 0 {
            return Err(Error::NoSteps);
        }
        if !(lo >= 0.0 && hi <= horizon && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "time interval [{lo}, {hi}] not inside [0, {horizon}]"
            )));
        }
        let (xi, w) = gauss_legendre(points.max(1));
        let width = (hi - lo) / steps as f64;
        let mut nodes = Vec::with_capacity(steps * xi.len());
        let mut weights = Vec::with_capacity(steps * xi.len());
        let mut panels = Vec::with_capacity(steps);
        for k in 0..steps {
            let a = lo + k as f64 * width;
            let b = if k + 1 == steps { hi } else { a + width };
            panels.push((a, b));
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (s, wi) in xi.iter().zip(&w) {
                nodes.push(mid + half * s);
                weights.push(wi * half);
            }
        }
        Ok(Self {
            horizon,
            nodes,
            weights,
            panels,
        })
    }

    /// Panels covering all of `[0, T]`, as used for piecewise-constant controls.
    pub fn full(horizon: f64, steps: usize) -> Result<Self> {
        Self::on_interval(horizon, 0.0, horizon, steps, TIME_POINTS_PER_PANEL)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn panels(&self) -> &[(f64, f64)] {
        &self.panels
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, w)| w * f(t))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_is_symmetric_and_sums_to_two() {
        for n in [2, 3, 7, 64, 201] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-15);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn latitude_rule_examples() {
        let rule = make_latitude_rule(16).unwrap();
        let one = rule.sample(|_| 1.0);
        assert!((rule.integrate_weighted(&one).unwrap() - 2.0).abs() < 1e-14);
        let s2 = rule.sample(|x| x.sin().powi(2));
        assert!((rule.integrate_weighted(&s2).unwrap() - 2.0 / 3.0).abs() < 1e-14);

        // Wallis with n = 2: ∫_0^{pi/2} cos^5 = 8/15.
        let half = QuadratureRule::sine_gauss_on(0.0, FRAC_PI_2, 16).unwrap();
        let c4 = half.sample(|x| x.cos().powi(4));
        assert!((half.integrate_weighted(&c4).unwrap() - 8.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_order() {
        assert_eq!(make_latitude_rule(1), Err(Error::OrderTooSmall(1)));
    }

    #[test]
    fn even_sine_powers_are_exact() {
        let order = 40;
        let rule = make_latitude_rule(order).unwrap();
        for k in (0..=2 * order - 2).step_by(2) {
            let f = rule.sample(|x| x.sin().powi(k as i32));
            let got = rule.integrate_weighted(&f).unwrap();
            assert!((got - 2.0 / (k as f64 + 1.0)).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn plain_products_on_latitude_rule() {
        let rule = QuadratureRule::latitude_gauss(64).unwrap();
        let c = rule.sample(f64::cos);
        let s = rule.sample(f64::sin);
        let one = rule.sample(|_| 1.0);
        assert!((inner_plain(&c, &c, &rule).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!(inner_plain(&c, &s, &rule).unwrap().abs() < 1e-14);
        assert!((inner_plain(&one, &one, &rule).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let rule = make_latitude_rule(8).unwrap();
        let err = inner_weighted(&[1.0; 7], &[1.0; 8], &rule).unwrap_err();
        assert_eq!(
            err,
            Error::LengthMismatch {
                expected: 8,
                found: 7
            }
        );
        let zero = vec![0.0; 8];
        assert_eq!(inner_weighted(&zero, &zero, &rule).unwrap(), 0.0);
    }

    #[test]
    fn refinement_is_stable() {
        // Smooth in t = sin x.
        let f = |x: f64| (3.0 * x.sin()).sin() * x.cos().powi(2) + x.sin().exp() * 0.1;
        let g = |x: f64| (x.sin() * x.sin()).cos();
        let a = make_latitude_rule(64).unwrap();
        let b = make_latitude_rule(128).unwrap();
        let ia = inner_weighted(&a.sample(f), &a.sample(g), &a).unwrap();
        let ib = inner_weighted(&b.sample(f), &b.sample(g), &b).unwrap();
        assert!((ia - ib).abs() < 1e-10, "{ia} vs {ib}");
    }

    #[test]
    fn differentiation_on_both_kinds() {
        for rule in [
            make_latitude_rule(48).unwrap(),
            QuadratureRule::latitude_gauss(48).unwrap(),
        ] {
            let d = rule.differentiator().unwrap();
            let f = rule.sample(|x| x.sin().powi(3));
            let df = d.dx(&f).unwrap();
            for (x, v) in rule.nodes().iter().zip(df) {
                assert!((v - 3.0 * x.sin().powi(2) * x.cos()).abs() < 1e-9);
            }
            // sin x under (1/cos)(cos f')' gives -2 sin x.
            let lap = d.weighted_laplacian(&rule.sample(f64::sin)).unwrap();
            for (x, v) in rule.nodes().iter().zip(lap) {
                assert!((v + 2.0 * x.sin()).abs() < 1e-7, "{x} {v}");
            }
        }
    }

    #[test]
    fn time_grid_examples() {
        let g = make_time_grid(1.0, 10, DEFAULT_CLEARANCE).unwrap();
        assert_eq!(g.panels().len(), 10);
        assert!((g.panels()[0].0 - 1e-3).abs() < 1e-15);
        assert!((g.panels()[9].1 - (1.0 - 1e-3)).abs() < 1e-15);
        assert!(g.nodes().iter().all(|&t| t > 0.0 && t < 1.0));
        assert!(g.nodes().windows(2).all(|p| p[0] < p[1]));
        let v = g.integrate(|t| t * (1.0 - t));
        assert!((v - 1.0 / 6.0).abs() < 1e-6);

        let mid = TimeGrid::on_interval(3.0, 1.0, 2.0, 3, 4).unwrap();
        assert!((mid.integrate(|_| 1.0) - 1.0).abs() < 1e-14);

        assert_eq!(make_time_grid(0.0, 3, 1e-3), Err(Error::InvalidHorizon(0.0)));
        assert_eq!(make_time_grid(1.0, 0, 1e-3), Err(Error::NoSteps));
    }
}
