//! Unitary maps to unweighted spaces and the transformed operators.
//!
//! * `U v = sqrt(cos x) v` maps `H_n` (weight `cos x`) onto `L²(-pi/2, pi/2)`
//!   and conjugates `L_n` into `M_n w = w'' − q_n w`.
//! * `V v = v ∘ arcsin` maps `H_0` onto `L²(-1, 1)` and conjugates `L_0` into
//!   `M_0 w = ((1 − t²) w')'`. On a sine-Gauss rule `V` is a relabeling of
//!   samples onto the nodes `t_i = sin x_i`, so it is unitary at sample level.

use crate::error::{Error, Result};
use crate::numerics::{QuadratureRule, RuleKind};

/// `q_n(x) = (n² − 1/4) tan² x − 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialQn {
    n: i64,
}

impl PotentialQn {
    pub fn new(n: i64) -> Result<Self> {
        if n < 1 {
            return Err(Error::FrequencyTooSmall { n, min: 1 });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n2 = (self.n * self.n) as f64;
        (n2 - 0.25) * x.tan().powi(2) - 0.5
    }

    /// `q_n'(x) = 2 (n² − 1/4) tan x / cos² x`.
    pub fn derivative(&self, x: f64) -> f64 {
        let n2 = (self.n * self.n) as f64;
        2.0 * (n2 - 0.25) * x.tan() / x.cos().powi(2)
    }
}

pub fn map_u(v: &[f64], rule: &QuadratureRule) -> Result<Vec<f64>> {
    rule.check_len(v)?;
    Ok(v.iter()
        .zip(rule.nodes())
        .map(|(a, x)| a * x.cos().sqrt())
        .collect())
}

pub fn map_u_adjoint(w: &[f64], rule: &QuadratureRule) -> Result<Vec<f64>> {
    rule.check_len(w)?;
    Ok(w.iter()
        .zip(rule.nodes())
        .map(|(a, x)| a / x.cos().sqrt())
        .collect())
}

/// Samples on `(-1, 1)` paired with the node set `t_i = sin x_i` and the
/// matching `L²(-1, 1)` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSamples {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl SegmentSamples {
    pub fn norm_sq(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * v * w)
            .sum()
    }
}

fn require_sine(rule: &QuadratureRule) -> Result<()> {
    if rule.kind() != RuleKind::SineGauss {
        return Err(Error::InvalidArgument(
            "the map V needs a sine-Gauss latitude rule".into(),
        ));
    }
    Ok(())
}

/// `(V v)(t) = v(arcsin t)` as a relabeling of samples.
pub fn map_v(v: &[f64], rule: &QuadratureRule) -> Result<SegmentSamples> {
    require_sine(rule)?;
    rule.check_len(v)?;
    Ok(SegmentSamples {
        nodes: rule.nodes().iter().map(|x| x.sin()).collect(),
        weights: rule.weights().to_vec(),
        values: v.to_vec(),
    })
}

/// Inverse relabeling back onto the latitude nodes of `rule`.
pub fn map_v_adjoint(w: &SegmentSamples, rule: &QuadratureRule) -> Result<Vec<f64>> {
    require_sine(rule)?;
    rule.check_len(&w.values)?;
    for (t, x) in w.nodes.iter().zip(rule.nodes()) {
        if (t - x.sin()).abs() > 1e-14 {
            return Err(Error::InvalidArgument(
                "segment nodes are not the image of the rule".into(),
            ));
        }
    }
    Ok(w.values.clone())
}

/// `M_0 w = ((1 − t²) w')'` by collocation on the segment nodes of `rule`.
pub fn apply_m0(w: &SegmentSamples, rule: &QuadratureRule) -> Result<Vec<f64>> {
    require_sine(rule)?;
    rule.check_len(&w.values)?;
    let d = rule.differentiator()?;
    let wt = d.raw(&w.values);
    let flux: Vec<f64> = wt
        .iter()
        .zip(&w.nodes)
        .map(|(a, t)| (1.0 - t * t) * a)
        .collect();
    Ok(d.raw(&flux))
}

/// `M_n w = w'' − q_n w` for `n ≥ 1`.
///
/// Elements of the domain behave like `sqrt(cos x)` times a smooth cofactor at
/// `±pi/2`, so the cofactor `c = w / sqrt(cos x)` is differentiated by
/// collocation and `w''` is assembled by the product rule with the analytic
/// derivatives of `sqrt(cos x)`.
pub fn apply_mn(w: &[f64], n: i64, rule: &QuadratureRule) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n = 0: use apply_m0".into()));
    }
    let q = PotentialQn::new(n.abs())?;
    let c = map_u_adjoint(w, rule)?;
    let d = rule.differentiator()?;
    let c1 = d.dx(&c)?;
    let c2 = d.dx(&c1)?;
    Ok(rule
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let (s, co) = (x.sin(), x.cos());
            let r = co.sqrt();
            let r1 = -s / (2.0 * r);
            let r2 = -r / 2.0 - s * s / (4.0 * co * r);
            r2 * c[i] + 2.0 * r1 * c1[i] + r * c2[i] - q.eval(x) * w[i]
        })
        .collect())
}

/// `∫ w² / cos² x dx`, finite for `w ∈ D(M_n)`.
pub fn hardy_admissibility(w: &[f64], rule: &QuadratureRule) -> Result<f64> {
    rule.check_len(w)?;
    Ok(w.iter()
        .zip(rule.plain_weights())
        .zip(rule.nodes())
        .map(|((a, pw), x)| pw * (a / x.cos()).powi(2))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::eigenfunction_vnl;
    use crate::numerics::{inner_weighted, make_latitude_rule, norm_plain, norm_weighted};
    use crate::spectral::{apply_ln, DiffScheme};

    #[test]
    fn potential_examples() {
        for n in 1..10 {
            let q = PotentialQn::new(n).unwrap();
            assert_eq!(q.eval(0.0), -0.5);
            assert_eq!(q.eval(0.7), q.eval(-0.7));
            assert!(q.eval(1.5707) > q.eval(1.5));
        }
        assert!(PotentialQn::new(0).is_err());
    }

    #[test]
    fn u_examples() {
        let rule = QuadratureRule::latitude_gauss(48).unwrap();
        let ones = vec![1.0; rule.len()];
        let u = map_u(&ones, &rule).unwrap();
        for (a, x) in u.iter().zip(rule.nodes()) {
            assert_eq!(*a, x.cos().sqrt());
        }
        let v = rule.sample(|x| (2.0 * x).sin() + x.cos().powi(3));
        let w = map_u(&v, &rule).unwrap();
        let back = map_u_adjoint(&w, &rule).unwrap();
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
        let lhs = norm_plain(&w, &rule).unwrap();
        let rhs = norm_weighted(&v, &rule).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn v_examples() {
        let rule = make_latitude_rule(32).unwrap();
        let s = rule.sample(f64::sin);
        let vs = map_v(&s, &rule).unwrap();
        for (a, t) in vs.values.iter().zip(&vs.nodes) {
            assert!((a - t).abs() < 1e-15);
        }
        let v = rule.sample(|x| (3.0 * x).cos() - 0.2);
        let mapped = map_v(&v, &rule).unwrap();
        let a = mapped.norm_sq();
        let b = inner_weighted(&v, &v, &rule).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert_eq!(map_v_adjoint(&mapped, &rule).unwrap(), v);
        let lat = QuadratureRule::latitude_gauss(8).unwrap();
        assert!(map_v(&vec![0.0; 8], &lat).is_err());
    }

    #[test]
    fn m0_examples() {
        let rule = make_latitude_rule(40).unwrap();
        for l in 0..12usize {
            let p = rule.sample(|x| crate::legendre::normalized_legendre(l, 0, x.sin()).unwrap());
            let seg = map_v(&p, &rule).unwrap();
            let m = apply_m0(&seg, &rule).unwrap();
            let lam = (l * (l + 1)) as f64;
            for (a, b) in m.iter().zip(&p) {
                assert!((a + lam * b).abs() < 1e-6);
            }
            // V L_0 v = M_0 V v.
            let v = eigenfunction_vnl(l as i64, 0, &rule).unwrap();
            let lv = apply_ln(&v, 0, &rule, DiffScheme::Collocation).unwrap();
            let mv = apply_m0(&map_v(&v, &rule).unwrap(), &rule).unwrap();
            for (a, b) in lv.iter().zip(&mv) {
                assert!((a - b).abs() < 1e-6);
            }
        }
        let c = map_v(&vec![2.5; 40], &rule).unwrap();
        assert!(apply_m0(&c, &rule).unwrap().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn mn_intertwines_ln() {
        let rule = QuadratureRule::latitude_gauss(128).unwrap();
        for n in 1..=5i64 {
            for l in n..=n + 6 {
                let v = eigenfunction_vnl(l, n, &rule).unwrap();
                let w = map_u(&v, &rule).unwrap();
                let mw = apply_mn(&w, n, &rule).unwrap();
                let lam = (l * (l + 1) - n * n) as f64;
                let res: Vec<f64> = mw.iter().zip(&w).map(|(a, b)| a + lam * b).collect();
                let rel = norm_plain(&res, &rule).unwrap() / (lam * norm_plain(&w, &rule).unwrap());
                assert!(rel < 1e-5, "n={n} l={l}: {rel}");

                let lv = apply_ln(&v, n, &rule, DiffScheme::Collocation).unwrap();
                let ulv = map_u(&lv, &rule).unwrap();
                let diff: Vec<f64> = mw.iter().zip(&ulv).map(|(a, b)| a - b).collect();
                let rel = norm_plain(&diff, &rule).unwrap() / norm_plain(&ulv, &rule).unwrap();
                assert!(rel < 1e-5, "n={n} l={l}: {rel}");
            }
        }
        // sqrt(cos x) with n = 1 against the L_1 route: L_1(1) = −tan² x.
        let w = map_u(&vec![1.0; rule.len()], &rule).unwrap();
        let mw = apply_mn(&w, 1, &rule).unwrap();
        for ((a, x), b) in mw.iter().zip(rule.nodes()).zip(&w) {
            let expected = -x.tan().powi(2) * b;
            assert!((a - expected).abs() < 1e-6 * (1.0 + expected.abs()));
        }
        assert!(apply_mn(&w, 0, &rule).is_err());
    }

    #[test]
    fn hardy_admissibility_is_finite() {
        let rule = QuadratureRule::latitude_gauss(96).unwrap();
        for n in 1..=4 {
            let w = map_u(&eigenfunction_vnl(n + 2, n, &rule).unwrap(), &rule).unwrap();
            let h = hardy_admissibility(&w, &rule).unwrap();
            assert!(h.is_finite() && h > 0.0);
        }
    }
}
