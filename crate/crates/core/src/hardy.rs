//! The Hardy–Poincaré inequality `∫ w²/cos² x ≤ 4 ∫ (w')²` for functions
//! vanishing at `±pi/2`, and the tail operator `(Sf)(x) = (1/cos x) ∫_x^{pi/2} f`
//! used to prove it.

use crate::error::{Error, Result};
use crate::numerics::{QuadratureRule, RuleKind};
use std::f64::consts::FRAC_PI_2;

fn require_plain_rule(rule: &QuadratureRule) -> Result<()> {
    if rule.kind() == RuleKind::SineGauss {
        return Err(Error::InvalidArgument(
            "Hardy integrals need an x-Gauss rule (the sine rule is singular for 1/cos² x)".into(),
        ));
    }
    Ok(())
}

fn pair_from(w: &[f64], dw: &[f64], rule: &QuadratureRule) -> (f64, f64) {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (((a, d), pw), x) in w.iter().zip(dw).zip(rule.plain_weights()).zip(rule.nodes()) {
        lhs += pw * (a / x.cos()).powi(2);
        rhs += pw * d * d;
    }
    (lhs, 4.0 * rhs)
}

/// `(∫ w²/cos² x, 4 ∫ (w')²)` with `w'` by collocation on the nodes of `rule`.
pub fn hardy_pair(w: &[f64], rule: &QuadratureRule) -> Result<(f64, f64)> {
    require_plain_rule(rule)?;
    rule.check_len(w)?;
    let dw = rule.differentiator()?.dx(w)?;
    Ok(pair_from(w, &dw, rule))
}

/// Hardy pair for `w = sqrt(cos x) v`, given the samples of `v`.
///
/// `w'` is assembled as `sqrt(cos x) v' − sin x v / (2 sqrt(cos x))` with `v'`
/// by collocation, which stays spectrally accurate where `w` itself is only
/// Hölder at the endpoints.
pub fn hardy_pair_mapped(v: &[f64], rule: &QuadratureRule) -> Result<(f64, f64)> {
    require_plain_rule(rule)?;
    rule.check_len(v)?;
    let dv = rule.differentiator()?.dx(v)?;
    let mut w = Vec::with_capacity(v.len());
    let mut dw = Vec::with_capacity(v.len());
    for ((a, d), x) in v.iter().zip(&dv).zip(rule.nodes()) {
        let r = x.cos().sqrt();
        w.push(r * a);
        dw.push(r * d - x.sin() * a / (2.0 * r));
    }
    Ok(pair_from(&w, &dw, rule))
}

/// `(Sf)(x_i) = (1/cos x_i) Σ_{x_j > x_i} ω_j f(x_j)` on a rule over `[0, pi/2]`.
pub fn operator_s(f: &[f64], rule: &QuadratureRule) -> Result<Vec<f64>> {
    require_plain_rule(rule)?;
    rule.check_len(f)?;
    let (lo, hi) = rule.interval();
    if lo < -1e-15 || (hi - FRAC_PI_2).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "operator S needs a rule on [0, pi/2], got [{lo}, {hi}]"
        )));
    }
    let pw = rule.plain_weights();
    let nodes = rule.nodes();
    let mut out = vec![0.0; f.len()];
    let mut tail = 0.0;
    // Nodes are ascending, so the tail sum is a reverse prefix sum.
    for i in (0..f.len()).rev() {
        out[i] = tail / nodes[i].cos();
        tail += pw[i] * f[i];
    }
    Ok(out)
}

/// `(Sf)(x)` at an arbitrary point by the tail of the rule.
pub fn operator_s_at(f: &[f64], rule: &QuadratureRule, x: f64) -> Result<f64> {
    rule.check_len(f)?;
    let tail: f64 = rule
        .nodes()
        .iter()
        .zip(rule.plain_weights())
        .zip(f)
        .filter(|((t, _), _)| **t > x)
        .map(|((_, w), v)| w * v)
        .sum();
    Ok(tail / x.cos())
}

/// Largest `lhs / rhs` over a family; entries with `rhs = 0` are skipped.
pub fn hardy_constant_probe(family: &[Vec<f64>], rule: &QuadratureRule) -> Result<f64> {
    let mut best: Option<f64> = None;
    for w in family {
        let (lhs, rhs) = hardy_pair(w, rule)?;
        if rhs > 0.0 {
            let r = lhs / rhs;
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best.ok_or(Error::EmptyFamily)
}

/// Largest `(pi/2 − x) tan x` over the nodes of `rule` lying in `[0, pi/2)`.
pub fn tan_bound_max(rule: &QuadratureRule) -> f64 {
    rule.nodes()
        .iter()
        .filter(|x| **x >= 0.0 && **x < FRAC_PI_2)
        .map(|x| (FRAC_PI_2 - x) * x.tan())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::eigenfunction_vnl;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms() {
        let rule = QuadratureRule::latitude_gauss(64).unwrap();
        let (l, r) = hardy_pair(&rule.sample(f64::cos), &rule).unwrap();
        assert!((l - PI).abs() < 1e-12 && (r - 2.0 * PI).abs() < 1e-10);
        let (l, r) = hardy_pair(&rule.sample(|x| x.cos().powi(2)), &rule).unwrap();
        assert!((l - PI / 2.0).abs() < 1e-12 && (r - 2.0 * PI).abs() < 1e-10);
        assert_eq!(hardy_pair(&vec![0.0; 64], &rule).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn cos_powers_ratio() {
        let rule = QuadratureRule::latitude_gauss(96).unwrap();
        let family: Vec<Vec<f64>> = (1..=10).map(|k| rule.sample(|x| x.cos().powi(k))).collect();
        let mut prev = f64::INFINITY;
        for (k, w) in family.iter().enumerate() {
            let (l, r) = hardy_pair(w, &rule).unwrap();
            let ratio = l / r;
            assert!(ratio < prev);
            assert!((ratio - 1.0 / (2.0 * (k + 1) as f64)).abs() < 1e-9, "k={k}: {ratio}");
            prev = ratio;
        }
        assert!((hardy_constant_probe(&family[..1], &rule).unwrap() - 0.5).abs() < 1e-10);
        assert!(hardy_constant_probe(&[], &rule).is_err());
    }

    #[test]
    fn mapped_eigenfunctions() {
        let rule = QuadratureRule::latitude_gauss(128).unwrap();
        for n in 1..=5 {
            for l in n..=10 {
                let v = eigenfunction_vnl(l, n, &rule).unwrap();
                let (lhs, rhs) = hardy_pair_mapped(&v, &rule).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-8), "n={n} l={l}");
                let direct = hardy_pair(&crate::transforms::map_u(&v, &rule).unwrap(), &rule).unwrap();
                assert!((direct.0 - lhs).abs() < 1e-12 * lhs);
                assert!((direct.1 - rhs).abs() < 1e-3 * rhs, "n={n} l={l}: {direct:?} {rhs}");
            }
        }
    }

    #[test]
    fn operator_s_examples() {
        let rule = QuadratureRule::latitude_gauss_on(0.0, FRAC_PI_2, 64).unwrap();
        let f = rule.sample(f64::cos);
        assert!((operator_s_at(&f, &rule, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let s = operator_s(&f, &rule).unwrap();
        // The tail sum excludes node i itself, so compare against the exact tail
        // started half a weight later.
        for (i, x) in rule.nodes().iter().enumerate().take(40) {
            let exact = (1.0 - x.sin()) / x.cos();
            let half = 0.5 * rule.plain_weights()[i] * f[i] / x.cos();
            assert!((s[i] + half - exact).abs() < 1e-2 * exact.max(1.0), "{i}");
        }
        assert!(operator_s(&vec![0.0; 64], &rule).unwrap().iter().all(|v| *v == 0.0));
        assert!(tan_bound_max(&rule) <= 1.0);
    }
}
