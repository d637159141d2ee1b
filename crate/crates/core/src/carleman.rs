//! Carleman weights `φ(t, x) = s θ(t) β(x)`, the conjugated operator splitting,
//! the kernels of the integrated identity, and the Carleman estimate as a
//! measured diagnostic on spectral solutions of `∂_t − M_n`.
//!
//! The latitude interval splits into `ω_deg = [−a', a']`, the two connecting
//! bands `ω_con = (−b', −a') ∪ (a', b')` and `ω_bdy = {|x| ≥ b'}`. On `ω_deg`
//! and `ω_bdy` the weight is given in closed form; on each band of `ω_con` it is
//! the degree-9 polynomial matching derivatives 0–4 at both ends.

use crate::error::{Error, Result};
use crate::legendre::{eigenfunction_derivative, eigenfunction_value};
use crate::numerics::gauss_legendre;
use crate::observability::ControlRegion;
use crate::transforms::PotentialQn;
use nalgebra::{Matrix5, Vector5};
use std::f64::consts::FRAC_PI_2;

/// Points of the uniform grid used to measure the weight invariants.
pub const WEIGHT_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    Deg,
    Con,
    Bdy,
}

/// Degree-9 polynomial in `σ = (x − x0)/h` matching derivatives 0–4 at both ends.
#[derive(Debug, Clone, PartialEq)]
struct Blend {
    x0: f64,
    h: f64,
    c: [f64; 10],
}

fn falling(k: usize, j: usize) -> f64 {
    (0..j).map(|i| (k - i) as f64).product()
}

impl Blend {
    fn new(x0: f64, x1: f64, left: [f64; 5], right: [f64; 5]) -> Result<Self> {
        let h = x1 - x0;
        let mut c = [0.0; 10];
        let mut fact = 1.0;
        for j in 0..5 {
            if j > 0 {
                fact *= j as f64;
            }
            c[j] = h.powi(j as i32) * left[j] / fact;
        }
        let mut m = Matrix5::zeros();
        let mut rhs = Vector5::zeros();
        for j in 0..5 {
            let mut known = 0.0;
            for (k, ck) in c.iter().enumerate().take(5) {
                if k >= j {
                    known += ck * falling(k, j);
                }
            }
            rhs[j] = h.powi(j as i32) * right[j] - known;
            for k in 5..10 {
                m[(j, k - 5)] = falling(k, j);
            }
        }
        let sol = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidWeight("singular blend system".into()))?;
        c[5..10].copy_from_slice(sol.as_slice());
        Ok(Self { x0, h, c })
    }

    fn derivative(&self, x: f64, j: usize) -> f64 {
        let s = (x - self.x0) / self.h;
        let mut acc = 0.0;
        for k in (j..10).rev() {
            acc = acc * s + self.c[k] * falling(k, j);
        }
        acc / self.h.powi(j as i32)
    }
}

/// Constants of the closed-form pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConstants {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanWeight {
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
    pub constants: WeightConstants,
    pub eta1: f64,
    pub eta2: f64,
    /// `β_* = min β`.
    pub beta_min: f64,
    pub beta_min_at: f64,
    /// `β* = max β`.
    pub beta_max: f64,
    left: Blend,
    right: Blend,
}

fn deg_derivs(x: f64, a3: f64) -> [f64; 5] {
    let (c, t) = (x.cos(), x.tan());
    let sec2 = 1.0 / (c * c);
    [
        c.ln() - 0.5 * x * x + a3 * (x + 1.0),
        -t - x + a3,
        -sec2 - 1.0,
        -2.0 * sec2 * t,
        -4.0 * sec2 * t * t - 2.0 * sec2 * sec2,
    ]
}

fn bdy_derivs(x: f64, a1: f64, a2: f64) -> [f64; 5] {
    let s = x.sin();
    let cot = x.cos() / s;
    let csc2 = 1.0 / (s * s);
    [
        s.abs().ln() + a1 * x.abs() + a2,
        cot + a1 * x.signum(),
        -csc2,
        2.0 * csc2 * cot,
        -4.0 * csc2 * cot * cot - 2.0 * csc2 * csc2,
    ]
}

fn check_ordering(a: f64, b: f64, ap: f64, bp: f64) -> Result<()> {
    if !(0.0 < a && a < ap && ap < bp && bp < b && b <= FRAC_PI_2 + 1e-15) {
        return Err(Error::InvalidWeight(format!(
            "need 0 < a < a' < b' < b <= pi/2, got a = {a}, a' = {ap}, b' = {bp}, b = {b}"
        )));
    }
    Ok(())
}

fn uniform_grid(count: usize) -> impl Iterator<Item = f64> {
    (0..=count).map(move |i| -FRAC_PI_2 + std::f64::consts::PI * i as f64 / count as f64)
}

impl CarlemanWeight {
    /// Builds `β` without checking `β ≥ 1`; used by the constant search.
    fn assemble(a: f64, b: f64, ap: f64, bp: f64, k: WeightConstants) -> Result<Self> {
        check_ordering(a, b, ap, bp)?;
        if !(k.a1 > 0.0 && k.a2 > 0.0 && k.a3 > 0.0) {
            return Err(Error::InvalidWeight("A1, A2, A3 must be positive".into()));
        }
        let left = Blend::new(-bp, -ap, bdy_derivs(-bp, k.a1, k.a2), deg_derivs(-ap, k.a3))?;
        let right = Blend::new(ap, bp, deg_derivs(ap, k.a3), bdy_derivs(bp, k.a1, k.a2))?;
        let mut w = Self {
            a,
            b,
            a_prime: ap,
            b_prime: bp,
            constants: k,
            eta1: 0.0,
            eta2: 0.0,
            beta_min: 0.0,
            beta_min_at: 0.0,
            beta_max: 0.0,
            left,
            right,
        };
        let mut eta1 = f64::INFINITY;
        let mut eta2 = f64::INFINITY;
        let mut lo = (f64::INFINITY, 0.0);
        let mut hi = f64::NEG_INFINITY;
        for x in uniform_grid(WEIGHT_GRID).chain([-bp, -ap, ap, bp]) {
            let d = w.derivs(x);
            if d[0] < lo.0 {
                lo = (d[0], x);
            }
            hi = hi.max(d[0]);
            if x.abs() >= bp {
                eta1 = eta1.min(d[1].abs());
            }
            if x.abs() <= ap {
                eta2 = eta2.min(d[1]);
            }
        }
        w.eta1 = eta1;
        w.eta2 = eta2;
        w.beta_min = lo.0;
        w.beta_min_at = lo.1;
        w.beta_max = hi;
        Ok(w)
    }

    /// `β` for the given band geometry and constants; fails if `β < 1`
    /// somewhere or if `η₁`, `η₂` are not positive.
    pub fn build(a: f64, b: f64, a_prime: f64, b_prime: f64, k: WeightConstants) -> Result<Self> {
        let w = Self::assemble(a, b, a_prime, b_prime, k)?;
        if w.beta_min < 1.0 {
            return Err(Error::InvalidWeight(format!(
                "beta = {} < 1 at x = {}",
                w.beta_min, w.beta_min_at
            )));
        }
        if !(w.eta1 > 0.0 && w.eta2 > 0.0) {
            return Err(Error::InvalidWeight(format!(
                "eta1 = {}, eta2 = {} must be positive",
                w.eta1, w.eta2
            )));
        }
        Ok(w)
    }

    pub fn zone(&self, x: f64) -> Zone {
        let ax = x.abs();
        if ax <= self.a_prime {
            Zone::Deg
        } else if ax < self.b_prime {
            Zone::Con
        } else {
            Zone::Bdy
        }
    }

    /// `[β, β', β'', β''', β'''']` at `x`.
    pub fn derivs(&self, x: f64) -> [f64; 5] {
        match self.zone(x) {
            Zone::Deg => deg_derivs(x, self.constants.a3),
            Zone::Bdy => bdy_derivs(x, self.constants.a1, self.constants.a2),
            Zone::Con => {
                let blend = if x < 0.0 { &self.left } else { &self.right };
                std::array::from_fn(|j| blend.derivative(x, j))
            }
        }
    }

    pub fn beta(&self, x: f64) -> f64 {
        self.derivs(x)[0]
    }

    /// Largest jump of derivatives 0–4 across `±a'` and `±b'`.
    ///
    /// Each side is differentiated exactly: the closed forms analytically and
    /// the blend as a polynomial, both extended to the junction.
    pub fn continuity_mismatch(&self) -> f64 {
        let k = self.constants;
        let pairs = [
            (bdy_derivs(-self.b_prime, k.a1, k.a2), &self.left, -self.b_prime),
            (deg_derivs(-self.a_prime, k.a3), &self.left, -self.a_prime),
            (deg_derivs(self.a_prime, k.a3), &self.right, self.a_prime),
            (bdy_derivs(self.b_prime, k.a1, k.a2), &self.right, self.b_prime),
        ];
        let mut worst: f64 = 0.0;
        for (closed, blend, x) in pairs {
            for (j, c) in closed.iter().enumerate() {
                let d = blend.derivative(x, j);
                worst = worst.max((d - c).abs() / c.abs().max(1.0));
            }
        }
        worst
    }

    /// Invariants on a uniform grid of `count + 1` points.
    pub fn invariants(&self, count: usize) -> WeightReport {
        let k = self.constants;
        let mut r = WeightReport {
            min_beta: f64::INFINITY,
            min_abs_slope_bdy: f64::INFINITY,
            min_slope_deg: f64::INFINITY,
            closed_form_deviation: 0.0,
            continuity: self.continuity_mismatch(),
            eta1: self.eta1,
            eta2: self.eta2,
        };
        for x in uniform_grid(count) {
            let d = self.derivs(x);
            r.min_beta = r.min_beta.min(d[0]);
            match self.zone(x) {
                Zone::Bdy => {
                    r.min_abs_slope_bdy = r.min_abs_slope_bdy.min(d[1].abs());
                    let f = x.sin().abs().ln() + k.a1 * x.abs() + k.a2;
                    r.closed_form_deviation = r.closed_form_deviation.max((f - d[0]).abs());
                }
                Zone::Deg => {
                    r.min_slope_deg = r.min_slope_deg.min(d[1]);
                    let f = x.cos().ln() - x * x / 2.0 + k.a3 * (x + 1.0);
                    r.closed_form_deviation = r.closed_form_deviation.max((f - d[0]).abs());
                }
                Zone::Con => {}
            }
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightReport {
    pub min_beta: f64,
    pub min_abs_slope_bdy: f64,
    pub min_slope_deg: f64,
    pub closed_form_deviation: f64,
    pub continuity: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl WeightReport {
    /// Tolerances: `β ≥ 1`, slopes above `η` up to `1e-12`, continuity `1e-6`.
    pub fn holds(&self) -> bool {
        self.min_beta >= 1.0
            && self.min_abs_slope_bdy >= self.eta1 - 1e-12
            && self.min_slope_deg >= self.eta2 - 1e-12
            && self.eta1 > 0.0
            && self.eta2 > 0.0
            && self.closed_form_deviation == 0.0
            && self.continuity < 1e-6
    }
}

/// Box for the constant search. `A3` is offset from `tan a' + a'` so that
/// `β' > 0` on `ω_deg`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub a1: (f64, f64),
    pub a3_offset: (f64, f64),
    pub steps: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            a1: (0.25, 3.0),
            a3_offset: (0.25, 12.0),
            steps: 12,
        }
    }
}

fn min_beta(a: f64, b: f64, ap: f64, bp: f64, k: WeightConstants) -> Option<f64> {
    CarlemanWeight::assemble(a, b, ap, bp, k).ok().map(|w| w.beta_min)
}

/// Grid search for `(A1, A2, A3)`: for each `(A1, A3)` the smallest `A2` with
/// `β ≥ 1` is found by bisection (`β` is non-decreasing in `A2`), candidates
/// with `A2 > A1` are discarded so that `|β| ≤ A1 (pi/2 + 1)` on `ω_bdy`, and the
/// largest `η₁ η₂` wins, ties broken by the smaller `β*`.
pub fn search_constants(a: f64, b: f64, ap: f64, bp: f64, bx: &SearchBox) -> Result<WeightConstants> {
    check_ordering(a, b, ap, bp)?;
    let base = ap.tan() + ap;
    let steps = bx.steps.max(1);
    let lerp = |r: (f64, f64), i: usize| r.0 + (r.1 - r.0) * i as f64 / steps as f64;
    let mut best: Option<(f64, f64, WeightConstants)> = None;
    for i in 0..=steps {
        let a1 = lerp(bx.a1, i);
        for j in 0..=steps {
            let a3 = base + lerp(bx.a3_offset, j);
            let k = |a2| WeightConstants { a1, a2, a3 };
            let mut hi = 1.0;
            let mut ok = false;
            for _ in 0..12 {
                if min_beta(a, b, ap, bp, k(hi)).is_some_and(|m| m >= 1.0) {
                    ok = true;
                    break;
                }
                hi *= 2.0;
            }
            if !ok {
                continue;
            }
            let mut lo = 1e-6;
            if min_beta(a, b, ap, bp, k(lo)).is_some_and(|m| m >= 1.0) {
                hi = lo;
            } else {
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if min_beta(a, b, ap, bp, k(mid)).is_some_and(|m| m >= 1.0) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
            // Round up so the recorded value is safe after printing.
            let a2 = (hi * 1e6).ceil() / 1e6;
            if a2 > a1 {
                continue;
            }
            let w = match CarlemanWeight::build(a, b, ap, bp, k(a2)) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let score = w.eta1 * w.eta2;
            let better = match &best {
                None => true,
                Some((s, bmax, _)) => score > *s * (1.0 + 1e-12) || (score >= *s * (1.0 - 1e-12) && w.beta_max < *bmax),
            };
            if better {
                best = Some((score, w.beta_max, k(a2)));
            }
        }
    }
    best.map(|b| b.2)
        .ok_or_else(|| Error::InvalidWeight("no admissible constants in the search box".into()))
}

/// `θ(t) = 1/(t (T − t))` with `θ'` and `θ''`.
pub fn theta_eval(t: f64, horizon: f64) -> Result<(f64, f64, f64)> {
    if !(t > 0.0 && t < horizon) {
        return Err(Error::InvalidTime { t, range: "(0, T)" });
    }
    Ok(theta_unchecked(t, horizon))
}

fn theta_unchecked(t: f64, horizon: f64) -> (f64, f64, f64) {
    let th = 1.0 / (t * (horizon - t));
    let u = 2.0 * t - horizon;
    (th, u * th * th, 2.0 * th * th * (1.0 + u * u * th))
}

/// Worst relative margins `min (rhs − lhs)/rhs` of the four bounds
/// `θ ≤ T⁴θ³/16`, `|θ'| ≤ T³θ³/4`, `|θθ'| ≤ Tθ³`, `|θ''| ≤ 5T²θ³/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaReport {
    pub margins: [f64; 4],
}

impl ThetaReport {
    pub fn holds(&self) -> bool {
        self.margins.iter().all(|m| *m >= -1e-12)
    }
}

pub fn theta_inequalities_check(horizon: f64, nodes: &[f64]) -> Result<ThetaReport> {
    let mut margins = [f64::INFINITY; 4];
    for &t in nodes {
        let (th, d1, d2) = theta_eval(t, horizon)?;
        let th3 = th * th * th;
        let pairs = [
            (th, horizon.powi(4) * th3 / 16.0),
            (d1.abs(), horizon.powi(3) * th3 / 4.0),
            ((th * d1).abs(), horizon * th3),
            (d2.abs(), 2.5 * horizon * horizon * th3),
        ];
        for (m, (l, r)) in margins.iter_mut().zip(pairs) {
            *m = m.min((r - l) / r);
        }
    }
    Ok(ThetaReport { margins })
}

/// `count` interior nodes of `(0, T)`, including `t = 1e-6 T` and `t = T/2`.
pub fn theta_grid(horizon: f64, count: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..count.saturating_sub(2))
        .map(|i| horizon * (i as f64 + 0.5) / (count - 2) as f64)
        .collect();
    v.push(1e-6 * horizon);
    v.push(0.5 * horizon);
    v.sort_by(f64::total_cmp);
    v
}

/// Constants of the admissibility thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub c1: f64,
    pub c2: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub s1: f64,
    pub s2: f64,
    pub r0: f64,
    /// `27 R₀ β*/2`, with the maximum of `β`.
    pub t_star: f64,
    /// `27 R₀ β_*/2`, with the minimum of `β`.
    pub t_star_with_min: f64,
}

pub fn admissibility_constants(w: &CarlemanWeight) -> Admissibility {
    let (ap, bp) = (w.a_prime, w.b_prime);
    let k = w.constants;
    let c1 = (ap.tan() + ap + k.a3).powi(2);
    let c2 = (ap.cos().ln() - ap * ap / 2.0 + k.a3 * (ap + 1.0)).abs();
    let c4 = ap * ap.tan() / ap.cos().powi(2);
    let c5 = 1.0 / bp.sin().powi(4);
    let c6 = (bp.cos() / bp.sin() + k.a1).powi(2);
    let c7 = k.a1 * (FRAC_PI_2 + 1.0);
    let (e1, e2) = (w.eta1, w.eta2);
    let s1 = (2.0 * c1 / (e2 * e2))
        .max((5.0 * c2).sqrt() / (2.0 * e2))
        .max((c4 / 8.0).sqrt() / e2);
    let s2 = ((3.0 * c5).sqrt() / (2.0 * e1))
        .max((5.0 * c7).sqrt() / e1)
        .max(8.0 * c6 / (e1 * e1));
    let r0 = s1.max(s2);
    Admissibility {
        c1,
        c2,
        c4,
        c5,
        c6,
        c7,
        s1,
        s2,
        r0,
        t_star: 13.5 * r0 * w.beta_max,
        t_star_with_min: 13.5 * r0 * w.beta_min,
    }
}

/// `s = sFactor · R₀ · max(T + T², T² n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanParams {
    pub s: f64,
    pub horizon: f64,
    pub n: i64,
    pub s_factor: f64,
}

pub fn s_threshold(r0: f64, horizon: f64, n: i64) -> f64 {
    r0 * (horizon + horizon * horizon).max(horizon * horizon * n as f64)
}

impl CarlemanParams {
    pub fn new(adm: &Admissibility, horizon: f64, n: i64, s_factor: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidHorizon(horizon));
        }
        if n < 1 {
            return Err(Error::FrequencyTooSmall { n, min: 1 });
        }
        Ok(Self {
            s: s_factor * s_threshold(adm.r0, horizon, n),
            horizon,
            n,
            s_factor,
        })
    }

    pub fn check(&self, adm: &Admissibility) -> Result<()> {
        let threshold = s_threshold(adm.r0, self.horizon, self.n);
        if self.s < threshold * (1.0 - 1e-12) {
            return Err(Error::Inadmissible { s: self.s, threshold });
        }
        Ok(())
    }
}

pub fn phi_eval(t: f64, x: f64, params: &CarlemanParams, w: &CarlemanWeight) -> Result<f64> {
    let (th, _, _) = theta_eval(t, params.horizon)?;
    Ok(params.s * th * w.beta(x))
}

/// `g(t, x) = Σ c_k e^{−μ_k t} sqrt(cos x) v_{n,l_k}(x)`. With `μ_k = λ_{l_k,n}`
/// it solves `P_n g = ∂_t g − M_n g = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub n: i64,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub l: i64,
    pub coeff: f64,
    pub rate: f64,
}

/// `g` and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub g: f64,
    pub gx: f64,
    pub gxx: f64,
    pub gt: f64,
    /// `P_n g`.
    pub pg: f64,
}

/// Spatial profile `(U v, (U v)', (U v)'')` of one term.
#[derive(Debug, Clone, Copy)]
struct Profile {
    u: f64,
    ux: f64,
    uxx: f64,
}

impl SpectralSolution {
    pub fn new(n: i64, coeffs: &[(i64, f64)]) -> Result<Self> {
        if n < 1 {
            return Err(Error::FrequencyTooSmall { n, min: 1 });
        }
        let terms = coeffs
            .iter()
            .map(|&(l, coeff)| {
                let lam = crate::legendre::eigenvalue(l, n)? as f64;
                Ok(Term { l, coeff, rate: lam })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, terms })
    }

    pub fn pure(n: i64, l: i64) -> Result<Self> {
        Self::new(n, &[(l, 1.0)])
    }

    /// `e^{−nt} U v_{n,n}`: the highest-weight profile `w_n ∝ cosⁿ x`.
    pub fn highest_weight(n: i64) -> Result<Self> {
        Self::pure(n, n)
    }

    /// Same spatial terms with arbitrary decay rates; not a solution in general.
    pub fn with_rates(mut self, rates: &[f64]) -> Result<Self> {
        if rates.len() != self.terms.len() {
            return Err(Error::LengthMismatch {
                expected: self.terms.len(),
                found: rates.len(),
            });
        }
        for (t, r) in self.terms.iter_mut().zip(rates) {
            t.rate = *r;
        }
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    fn profiles(&self, x: f64) -> Result<Vec<Profile>> {
        let q = PotentialQn::new(self.n)?.eval(x);
        let r = x.cos().sqrt();
        self.terms
            .iter()
            .map(|t| {
                let v = eigenfunction_value(t.l, self.n, x)?;
                let dv = eigenfunction_derivative(t.l, self.n, x)?;
                let lam = crate::legendre::eigenvalue(t.l, self.n)? as f64;
                let u = r * v;
                Ok(Profile {
                    u,
                    ux: r * dv - x.sin() * v / (2.0 * r),
                    uxx: (q - lam) * u,
                })
            })
            .collect()
    }

    fn combine(&self, profiles: &[Profile], t: f64) -> Sample {
        let mut s = Sample::default();
        for (term, p) in self.terms.iter().zip(profiles) {
            let e = term.coeff * (-term.rate * t).exp();
            let lam = crate::legendre::eigenvalue(term.l, self.n).unwrap_or(0) as f64;
            s.g += e * p.u;
            s.gx += e * p.ux;
            s.gxx += e * p.uxx;
            s.gt -= term.rate * e * p.u;
            s.pg += (lam - term.rate) * e * p.u;
        }
        s
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<Sample> {
        Ok(self.combine(&self.profiles(x)?, t))
    }
}

/// `min φ` over `(0, T) × I`, attained at `t = T/2` where `β = β_*`.
fn phi_floor(params: &CarlemanParams, w: &CarlemanWeight) -> f64 {
    params.s * 4.0 / (params.horizon * params.horizon) * w.beta_min
}

/// Residual of the splitting `P⁺z + P⁻z = e^{−φ} P_n g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitReport {
    /// `max |P⁺z + P⁻z − e^{−φ}P_n g|` over the grid, over the largest of the three terms.
    pub residual: f64,
    pub scale: f64,
}

/// Checks the splitting on an interior grid. `z = g e^{−φ}` is differentiated
/// by fourth-order central differences; `φ` and `P_n g` are exact. All terms
/// carry the common factor `e^{min φ}`.
pub fn split_identity_check(
    sol: &SpectralSolution,
    params: &CarlemanParams,
    w: &CarlemanWeight,
) -> Result<SplitReport> {
    if params.n != sol.n {
        return Err(Error::InvalidArgument("parameter n differs from the solution".into()));
    }
    let horizon = params.horizon;
    let s = params.s;
    let shift = phi_floor(params, w);
    let q = PotentialQn::new(sol.n)?;
    let max_rate = sol.terms.iter().map(|t| t.rate.abs()).fold(1.0, f64::max);
    let z = |t: f64, x: f64| -> Result<f64> {
        let th = theta_unchecked(t, horizon).0;
        Ok(sol.eval(t, x)?.g * (-(s * th * w.beta(x)) + shift).exp())
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for it in 2..=10 {
        let t = horizon * it as f64 / 12.0;
        let (th, th1, _) = theta_unchecked(t, horizon);
        for ix in 0..=40 {
            let x = -1.45 + 2.9 * ix as f64 / 40.0;
            let d = w.derivs(x);
            let phi = s * th * d[0];
            let phi_t = s * th1 * d[0];
            let phi_x = s * th * d[1];
            let phi_xx = s * th * d[2];
            let hx = 1e-2 * (1.0f64).min(1.0 / phi_x.abs()).min(0.1 * x.cos()).min(1.0 / max_rate.sqrt());
            let ht = 1e-2 * (t.min(horizon - t)).min(1.0 / phi_t.abs().max(1.0)).min(1.0 / max_rate);
            let z0 = z(t, x)?;
            let zxp = [z(t, x + hx)?, z(t, x + 2.0 * hx)?];
            let zxm = [z(t, x - hx)?, z(t, x - 2.0 * hx)?];
            let ztp = [z(t + ht, x)?, z(t + 2.0 * ht, x)?];
            let ztm = [z(t - ht, x)?, z(t - 2.0 * ht, x)?];
            let zx = (-zxp[1] + 8.0 * zxp[0] - 8.0 * zxm[0] + zxm[1]) / (12.0 * hx);
            let zxx = (-zxp[1] + 16.0 * zxp[0] - 30.0 * z0 + 16.0 * zxm[0] - zxm[1]) / (12.0 * hx * hx);
            let zt = (-ztp[1] + 8.0 * ztp[0] - 8.0 * ztm[0] + ztm[1]) / (12.0 * ht);
            let mz = zxx - q.eval(x) * z0;
            let plus = -mz + (phi_t - phi_x * phi_x) * z0;
            let minus = zt - 2.0 * zx * phi_x - phi_xx * z0;
            let rhs = sol.eval(t, x)?.pg * (-phi + shift).exp();
            worst = worst.max((plus + minus - rhs).abs());
            scale = scale.max(plus.abs()).max(minus.abs()).max(rhs.abs());
        }
    }
    Ok(SplitReport {
        residual: if scale > 0.0 { worst / scale } else { 0.0 },
        scale,
    })
}

/// Pointwise kernel of the integrated identity at `(t, x)`, by zone.
pub fn kernel_eval(t: f64, x: f64, z: f64, zx: f64, params: &CarlemanParams, w: &CarlemanWeight) -> Result<f64> {
    let th = theta_eval(t, params.horizon)?;
    Ok(kernel_at(th, x, z, zx, params, w, &w.derivs(x)))
}

fn kernel_at(
    (th, th1, th2): (f64, f64, f64),
    x: f64,
    z: f64,
    zx: f64,
    params: &CarlemanParams,
    w: &CarlemanWeight,
    d: &[f64; 5],
) -> f64 {
    let s = params.s;
    let n2 = (params.n * params.n) as f64;
    let (z2, zx2) = (z * z, zx * zx);
    let k = w.constants;
    match w.zone(x) {
        Zone::Deg => {
            let (c, sn) = (x.cos(), x.sin());
            let c2 = c * c;
            let bp = -x.tan() - x + k.a3;
            s * th * ((2.0 / c2 + 2.0) * zx2 + (sn * sn / (2.0 * c2 * c2) + x * sn / (2.0 * c2 * c)) * z2)
                + (2.0 * n2 * s * th / c2 + 2.0 * s.powi(3) * th.powi(3) * (1.0 / c2 + 1.0) * bp * bp) * z2
                + s * th
                    * (k.a3 * (2.0 * n2 - 0.5) / (c2 * c2) + 2.0 * s * th1 * bp * bp
                        - 2.0 * n2 * x * x.tan() / c2)
                    * z2
                - s * th2 / 2.0 * (c.ln() - x * x / 2.0 + k.a3 * (x + 1.0)) * z2
        }
        Zone::Bdy => {
            let (c, sn) = (x.cos(), x.sin());
            let sn2 = sn * sn;
            let bp = c / sn + k.a1 * x.signum();
            2.0 * s * th / sn2 * (zx2 + z2)
                + 2.0 * s.powi(3) * th.powi(3) / sn2 * bp * bp * z2
                + (2.0 * s * s * th * th1 * bp * bp
                    - s * th2 / 2.0 * (sn.abs().ln() + k.a1 * x.abs() + k.a2))
                    * z2
                + (-3.0 * s * th / (sn2 * sn2)
                    + s * th * (2.0 * n2 - 0.5) / (c * c) * (1.0 + k.a1 * x.signum() * x.tan()))
                    * z2
        }
        Zone::Con => {
            let (beta, b1, b2, b4) = (d[0], d[1], d[2], d[4]);
            let c = x.cos();
            s * (th * b4 / 2.0 + th * b1 * (2.0 * n2 - 0.5) * x.sin() / (c * c * c) - th2 * beta / 2.0
                + 2.0 * s * th * b1 * b1 * (th1 - s * th * th * b2))
                * z2
                - 2.0 * s * th * b2 * zx2
        }
    }
}

/// Composite Gauss rule on `[lo, hi]` with panels no wider than `width`.
fn composite(lo: f64, hi: f64, width: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
    let (xi, wi) = gauss_legendre(points);
    let h = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * points);
    let mut weights = Vec::with_capacity(panels * points);
    for k in 0..panels {
        let a = lo + k as f64 * h;
        for (s, w) in xi.iter().zip(&wi) {
            nodes.push(a + 0.5 * h * (s + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Space-time quadrature on `(0, T) × I` with breakpoints at the zone and
/// region boundaries.
#[derive(Debug, Clone)]
pub struct SpaceTimeGrid {
    pub t_nodes: Vec<f64>,
    pub t_weights: Vec<f64>,
    pub x_nodes: Vec<f64>,
    pub x_weights: Vec<f64>,
}

/// Default panel widths and points of [`SpaceTimeGrid::new`].
pub const X_PANEL: f64 = 0.01;
pub const T_PANELS: usize = 160;
pub const PANEL_POINTS: usize = 8;

impl SpaceTimeGrid {
    pub fn new(horizon: f64, w: &CarlemanWeight) -> Self {
        let mut breaks = vec![
            -FRAC_PI_2,
            -w.b,
            -w.b_prime,
            -w.a_prime,
            -w.a,
            w.a,
            w.a_prime,
            w.b_prime,
            w.b,
            FRAC_PI_2,
        ];
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|p, q| (*p - *q).abs() < 1e-14);
        let mut x_nodes = Vec::new();
        let mut x_weights = Vec::new();
        for pair in breaks.windows(2) {
            let (n, wt) = composite(pair[0], pair[1], X_PANEL, PANEL_POINTS);
            x_nodes.extend(n);
            x_weights.extend(wt);
        }
        let (t_nodes, t_weights) = composite(0.0, horizon, horizon / T_PANELS as f64, PANEL_POINTS);
        Self {
            t_nodes,
            t_weights,
            x_nodes,
            x_weights,
        }
    }
}

/// Integrated kernels against their lower (or upper, on `ω_con`) bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSide {
    pub kernel: f64,
    pub bound: f64,
}

impl KernelSide {
    /// `(kernel − bound)/|bound|` for the lower bounds; the sign is flipped on
    /// `ω_con`, where the bound is an upper bound on `|K_con|`.
    pub fn margin(&self) -> f64 {
        let d = self.kernel - self.bound;
        if self.bound == 0.0 {
            d
        } else {
            d / self.bound.abs()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelReport {
    /// `∫∫ K_deg` against `∫∫ 4sθ|z_x|² + η₂² s³θ³|z|²`.
    pub deg: KernelSide,
    /// `∫∫ K_bdy` against `∫∫ 2sθ|z_x|² + 2sθ|z|² + (η₁²/2) s³θ³|z|²`.
    pub bdy: KernelSide,
    /// `∫∫ C₉ sθ|z_x|² + C₁₂ s³θ³|z|²` against `∫∫ |K_con|`.
    pub con: KernelSide,
    pub c9: f64,
    pub c10: f64,
    pub c12: f64,
}

impl KernelReport {
    pub fn holds(&self) -> bool {
        self.deg.margin() >= 0.0 && self.bdy.margin() >= 0.0 && self.con.margin() >= 0.0
    }
}

/// `(C₉, C₁₀, C₁₂)` measured on `ω_con` for frequency `n`.
///
/// `C₁₂ = (5/4)‖β‖∞ R₀⁻² + (2 R₀⁻¹ + C₉) max β'² + C₁₀ / (8 R₀²)`: each term
/// bounds one part of `K_con` by `s³θ³` once `s ≥ R₀ max(T + T², T² n)`.
pub fn con_constants(w: &CarlemanWeight, adm: &Admissibility) -> (f64, f64, f64) {
    let mut c9: f64 = 0.0;
    let mut c10: f64 = 0.0;
    let mut b1sq: f64 = 0.0;
    let count = 4000;
    for side in [-1.0, 1.0] {
        for i in 0..=count {
            let x = side * (w.a_prime + (w.b_prime - w.a_prime) * i as f64 / count as f64);
            let d = w.derivs(x);
            c9 = c9.max(2.0 * d[2].abs());
            c10 = c10.max(d[4].abs() + (x.sin() / x.cos().powi(3) * d[1]).abs());
            b1sq = b1sq.max(d[1] * d[1]);
        }
    }
    let r0 = adm.r0;
    let c12 = 1.25 * w.beta_max / (r0 * r0) + (2.0 / r0 + c9) * b1sq + c10 / (8.0 * r0 * r0);
    (c9, c10, c12)
}

pub fn kernel_bounds_check(
    sol: &SpectralSolution,
    params: &CarlemanParams,
    w: &CarlemanWeight,
    adm: &Admissibility,
) -> Result<KernelReport> {
    params.check(adm)?;
    if params.n != sol.n {
        return Err(Error::InvalidArgument("parameter n differs from the solution".into()));
    }
    let grid = SpaceTimeGrid::new(params.horizon, w);
    let (c9, c10, c12) = con_constants(w, adm);
    let s = params.s;
    let profiles = grid
        .x_nodes
        .iter()
        .map(|&x| sol.profiles(x))
        .collect::<Result<Vec<_>>>()?;
    let derivs: Vec<[f64; 5]> = grid.x_nodes.iter().map(|&x| w.derivs(x)).collect();
    // Kernel and bound are both quadratic in z, so each zone may carry its own
    // constant factor `e^{min φ}` without changing its margin.
    let zone_index = |z: Zone| match z {
        Zone::Deg => 0,
        Zone::Con => 1,
        Zone::Bdy => 2,
    };
    let mut floor = [f64::INFINITY; 3];
    for (x, d) in grid.x_nodes.iter().zip(&derivs) {
        let k = zone_index(w.zone(*x));
        floor[k] = floor[k].min(d[0]);
    }
    let scale = s * 4.0 / (params.horizon * params.horizon);
    let mut deg = KernelSide { kernel: 0.0, bound: 0.0 };
    let mut bdy = KernelSide { kernel: 0.0, bound: 0.0 };
    let mut con = KernelSide { kernel: 0.0, bound: 0.0 };
    let (e1, e2) = (w.eta1, w.eta2);
    for (&t, &wt) in grid.t_nodes.iter().zip(&grid.t_weights) {
        let th = theta_unchecked(t, params.horizon);
        let st = s * th.0;
        let st3 = st * st * st;
        for (i, (&x, &wx)) in grid.x_nodes.iter().zip(&grid.x_weights).enumerate() {
            let d = &derivs[i];
            let e = (-(st * d[0]) + scale * floor[zone_index(w.zone(x))]).exp();
            if e == 0.0 {
                continue;
            }
            let g = sol.combine(&profiles[i], t);
            let z = g.g * e;
            let zx = (g.gx - st * d[1] * g.g) * e;
            let k = kernel_at(th, x, z, zx, params, w, d);
            let dq = wt * wx;
            match w.zone(x) {
                Zone::Deg => {
                    deg.kernel += dq * k;
                    deg.bound += dq * (4.0 * st * zx * zx + e2 * e2 * st3 * z * z);
                }
                Zone::Bdy => {
                    bdy.kernel += dq * k;
                    bdy.bound += dq * (2.0 * st * (zx * zx + z * z) + 0.5 * e1 * e1 * st3 * z * z);
                }
                Zone::Con => {
                    // Stored so that `kernel − bound ≥ 0` is the bound.
                    con.kernel += dq * (c9 * st * zx * zx + c12 * st3 * z * z);
                    con.bound += dq * k.abs();
                }
            }
        }
    }
    Ok(KernelReport {
        deg,
        bdy,
        con,
        c9,
        c10,
        c12,
    })
}

/// Left and right sides of the Carleman estimate with `R₁ = 1`, both scaled by
/// `e^{2 min φ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanSides {
    pub lhs: f64,
    pub observed: f64,
    pub source: f64,
}

impl CarlemanSides {
    pub fn ratio(&self) -> f64 {
        (self.observed + self.source) / self.lhs
    }
}

pub fn carleman_sides(
    sol: &SpectralSolution,
    params: &CarlemanParams,
    w: &CarlemanWeight,
    region: &ControlRegion,
) -> Result<CarlemanSides> {
    if sol.is_zero() {
        return Err(Error::InvalidArgument("zero solution".into()));
    }
    let grid = SpaceTimeGrid::new(params.horizon, w);
    let s = params.s;
    let shift = phi_floor(params, w);
    let profiles = grid
        .x_nodes
        .iter()
        .map(|&x| sol.profiles(x))
        .collect::<Result<Vec<_>>>()?;
    let betas: Vec<f64> = grid.x_nodes.iter().map(|&x| w.beta(x)).collect();
    let inside: Vec<bool> = grid.x_nodes.iter().map(|&x| region.contains(x)).collect();
    let mut out = CarlemanSides { lhs: 0.0, observed: 0.0, source: 0.0 };
    for (&t, &wt) in grid.t_nodes.iter().zip(&grid.t_weights) {
        let st = s * theta_unchecked(t, params.horizon).0;
        let st3 = st * st * st;
        for (i, &wx) in grid.x_weights.iter().enumerate() {
            let e2 = (2.0 * (-(st * betas[i]) + shift)).exp();
            if e2 == 0.0 {
                continue;
            }
            let g = sol.combine(&profiles[i], t);
            let dq = wt * wx * e2;
            out.lhs += dq * (st * g.gx * g.gx + st3 * g.g * g.g);
            if inside[i] {
                out.observed += dq * st3 * g.g * g.g;
            }
            out.source += dq * g.pg * g.pg;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport {
    pub calibration: Vec<f64>,
    pub held_out: Vec<f64>,
    /// `R̂₁`: smallest calibration ratio.
    pub r1_hat: f64,
    /// Smallest held-out ratio over `R̂₁`.
    pub worst_relative: f64,
}

impl DiagnosticReport {
    pub fn holds(&self) -> bool {
        self.worst_relative >= 0.5
    }
}

/// Carleman ratio `RHS/LHS` over a calibration and a held-out family, each
/// solution using `s = sFactor · R₀ · max(T + T², T² n)` for its own `n`.
pub fn carleman_diagnostic(
    calibration: &[SpectralSolution],
    held_out: &[SpectralSolution],
    horizon: f64,
    s_factor: f64,
    w: &CarlemanWeight,
    adm: &Admissibility,
    region: &ControlRegion,
) -> Result<DiagnosticReport> {
    if calibration.is_empty() || held_out.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let ratios = |fam: &[SpectralSolution]| -> Result<Vec<f64>> {
        fam.iter()
            .map(|sol| {
                let p = CarlemanParams::new(adm, horizon, sol.n, s_factor)?;
                p.check(adm)?;
                Ok(carleman_sides(sol, &p, w, region)?.ratio())
            })
            .collect()
    };
    let calibration = ratios(calibration)?;
    let held_out = ratios(held_out)?;
    let r1_hat = calibration.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = held_out.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DiagnosticReport {
        calibration,
        held_out,
        r1_hat,
        worst_relative: worst / r1_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_weight() -> CarlemanWeight {
        let k = search_constants(0.6, 1.2, 0.8, 1.0, &SearchBox::default()).unwrap();
        CarlemanWeight::build(0.6, 1.2, 0.8, 1.0, k).unwrap()
    }

    #[test]
    fn blend_matches_endpoint_data() {
        let l = [1.0, -2.0, 0.5, 3.0, -1.0];
        let r = [4.0, 1.0, -0.25, 2.0, 5.0];
        let b = Blend::new(0.3, 0.7, l, r).unwrap();
        for j in 0..5 {
            assert!((b.derivative(0.3, j) - l[j]).abs() < 1e-9 * l[j].abs().max(1.0));
            assert!((b.derivative(0.7, j) - r[j]).abs() < 1e-9 * r[j].abs().max(1.0));
        }
    }

    #[test]
    fn weight_invariants() {
        let w = default_weight();
        let r = w.invariants(WEIGHT_GRID);
        assert!(r.holds(), "{r:?}");
        assert!(w.beta_min_at < -w.a_prime && w.beta_min_at > -w.b_prime);
        let k = w.constants;
        assert_eq!(w.beta(0.0), k.a3);
        assert_eq!(w.derivs(0.0)[1], k.a3);
        // Low-order continuity by central differences straddling each junction.
        for x0 in [-w.b_prime, -w.a_prime, w.a_prime, w.b_prime] {
            let h = 1e-5;
            let d1 = (w.beta(x0 + h) - w.beta(x0 - h)) / (2.0 * h);
            assert!((d1 - w.derivs(x0)[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn weight_rejects_bad_input() {
        let k = WeightConstants { a1: 1.0, a2: 1.0, a3: 5.0 };
        assert!(CarlemanWeight::build(0.9, 1.2, 0.8, 1.0, k).is_err());
        assert!(CarlemanWeight::build(0.6, 1.2, 0.8, 1.0, WeightConstants { a3: 2.5, ..k }).is_err());
    }

    #[test]
    fn theta_examples() {
        let (th, d1, d2) = theta_eval(1.0, 2.0).unwrap();
        assert_eq!((th, d1), (1.0, 0.0));
        assert_eq!(d2, 2.0 * th * th);
        let t = 0.7;
        let (th, _, _) = theta_eval(t / 2.0, t).unwrap();
        assert!((th - t.powi(4) * th.powi(3) / 16.0).abs() < 1e-12 * th);
        assert!(theta_eval(0.0, 1.0).is_err() && theta_eval(1.0, 1.0).is_err());
        for horizon in [0.1, 1.0, 10.0] {
            let r = theta_inequalities_check(horizon, &theta_grid(horizon, 1000)).unwrap();
            assert!(r.holds(), "{horizon}: {r:?}");
        }
        let (a, _, _) = theta_eval(1.0 / 3.0, 1.0).unwrap();
        assert!((a - 4.5).abs() < 1e-12);
    }

    #[test]
    fn admissibility_examples() {
        let w = default_weight();
        let adm = admissibility_constants(&w);
        assert_eq!(adm.r0, adm.s1.max(adm.s2));
        assert!((adm.t_star - 13.5 * adm.r0 * w.beta_max).abs() < 1e-12 * adm.t_star);
        let mut probe = w.clone();
        probe.a_prime = std::f64::consts::FRAC_PI_4;
        assert!((admissibility_constants(&probe).c4 - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        probe.b_prime = FRAC_PI_2;
        assert!((admissibility_constants(&probe).c5 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn split_identity_on_solutions() {
        let w = default_weight();
        let adm = admissibility_constants(&w);
        for (n, l) in [(1, 1), (2, 4), (3, 5)] {
            let sol = SpectralSolution::pure(n, l).unwrap();
            let p = CarlemanParams::new(&adm, 1.0, n, 1.0).unwrap();
            let r = split_identity_check(&sol, &p, &w).unwrap();
            assert!(r.residual < 1e-5, "n={n} l={l}: {r:?}");
        }
        let sol = SpectralSolution::new(2, &[(2, 1.0), (3, -0.5)]).unwrap().with_rates(&[0.3, 1.7]).unwrap();
        let p = CarlemanParams::new(&adm, 1.0, 2, 1.0).unwrap();
        assert!(split_identity_check(&sol, &p, &w).unwrap().residual < 1e-5);
        let zero_s = CarlemanParams { s: 0.0, ..p };
        assert!(split_identity_check(&sol, &zero_s, &w).unwrap().residual < 1e-7);
    }

    #[test]
    fn kernel_examples() {
        let w = default_weight();
        let adm = admissibility_constants(&w);
        let p = CarlemanParams::new(&adm, 1.0, 2, 1.0).unwrap();
        assert_eq!(kernel_eval(0.5, 0.0, 0.0, 0.0, &p, &w).unwrap(), 0.0);
        assert_eq!(kernel_eval(0.5, 1.3, 0.0, 0.0, &p, &w).unwrap(), 0.0);
        let th = 4.0;
        let k = kernel_eval(0.5, 0.0, 0.0, 1.0, &p, &w).unwrap();
        assert!((k - 4.0 * p.s * th).abs() < 1e-12 * k);
    }

    #[test]
    fn kernel_bounds_hold() {
        let w = default_weight();
        let adm = admissibility_constants(&w);
        let sol = SpectralSolution::highest_weight(1).unwrap();
        let p = CarlemanParams::new(&adm, 1.0, 1, 1.0).unwrap();
        let r = kernel_bounds_check(&sol, &p, &w, &adm).unwrap();
        assert!(r.holds(), "{r:?}");
        let p2 = CarlemanParams::new(&adm, 1.0, 1, 2.0).unwrap();
        let r2 = kernel_bounds_check(&sol, &p2, &w, &adm).unwrap();
        assert!(r2.holds());
        let low = CarlemanParams { s: 0.5 * p.s, ..p };
        assert!(kernel_bounds_check(&sol, &low, &w, &adm).is_err());
    }

    #[test]
    fn diagnostic_single_mode() {
        let w = default_weight();
        let adm = admissibility_constants(&w);
        let region = ControlRegion::new(0.6, 1.2).unwrap();
        let sol = SpectralSolution::pure(3, 5).unwrap();
        let p = CarlemanParams::new(&adm, 1.0, 3, 1.0).unwrap();
        let r = carleman_sides(&sol, &p, &w, &region).unwrap().ratio();
        assert!(r.is_finite() && r > 0.0);
        let zero = SpectralSolution::new(3, &[(3, 0.0)]).unwrap();
        assert!(carleman_sides(&zero, &p, &w, &region).is_err());
    }
}
