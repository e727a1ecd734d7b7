//! Information measures in nats.
//!
//! Everything here uses natural logarithms with `0 log 0 = 0`. The divergence is
//! evaluated term by term as `q * g((p - q) / q)` with
//! `g(u) = (1 + u) ln(1 + u) - u >= 0`, which keeps full relative precision when
//! `p` and `q` are close. That matters for the low-weight inputs that covert
//! codes use, where divergences are of order `gamma^2`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channel::{induced_output, Channel, Distribution};
use crate::error::{Error, Result};

/// `(1 + u) ln(1 + u) - u` for `u >= -1`, accurate near zero.
fn excess(u: f64) -> f64 {
    if u.abs() < 0.05 {
        // sum_{k>=2} (-1)^k u^k / (k (k - 1))
        let mut term = u * u;
        let mut sum = 0.0;
        for k in 2..40 {
            let c = term / (k * (k - 1)) as f64;
            sum += if k % 2 == 0 { c } else { -c };
            term *= u;
            if c.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else if u <= -1.0 {
        1.0
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

fn same_len(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: p.len(),
        });
    }
    Ok(())
}

/// `D(p || q)`; `+inf` when `p` is not dominated by `q`.
///
/// # Panics
/// If the alphabets differ in size.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> f64 {
    kl_slices(p.probs(), q.probs())
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "alphabet sizes differ");
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if qi <= 0.0 {
            if pi > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        d += qi * excess((pi - qi) / qi);
    }
    d
}

/// `chi^2(p || q) = sum (p - q)^2 / q`.
pub fn chi_squared(p: &Distribution, q: &Distribution) -> Result<f64> {
    same_len(p, q)?;
    chi_squared_slices(p.probs(), q.probs())
}

pub(crate) fn chi_squared_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if qi <= 0.0 {
            if pi > 0.0 {
                return Err(Error::SupportViolation);
            }
            continue;
        }
        s += (pi - qi) * (pi - qi) / qi;
    }
    Ok(s)
}

/// Half the L1 distance.
pub fn total_variation(p: &Distribution, q: &Distribution) -> f64 {
    assert_eq!(p.len(), q.len(), "alphabet sizes differ");
    0.5 * p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfRange { what: "q", value: q });
    }
    Ok(-xlogx(q) - xlogx(1.0 - q))
}

/// Inverse of the binary entropy on `[0, 1/2]` by bisection; the bracket is
/// halved until it stops shrinking in floating point.
pub fn inv_binary_entropy(h: f64) -> Result<f64> {
    let ln2 = std::f64::consts::LN_2;
    if !(0.0..=ln2 + 1e-15).contains(&h) {
        return Err(Error::OutOfRange { what: "h", value: h });
    }
    if h >= ln2 {
        return Ok(0.5);
    }
    if h <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if -xlogx(mid) - xlogx(1.0 - mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `a * b = a (1 - b) + b (1 - a)`.
pub fn binary_convolution(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

/// `I(px, ch) = sum_x px(x) D(ch(.|x) || output)`.
pub fn mutual_information(px: &Distribution, ch: &Channel) -> Result<f64> {
    let out = induced_output(px, ch)?;
    Ok(px
        .probs()
        .iter()
        .zip(ch.rows())
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, row)| p * kl_divergence(row, &out))
        .sum())
}

/// Decomposition of the mutual information of a sparse input
/// `P_{gamma,p}` as a linear term minus an output divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseMiDecomposition {
    /// `gamma * sum_k p_k D(Q_k || Q_0)`.
    pub linear_term: f64,
    /// `D(Q_{gamma,p} || Q_0)`.
    pub kl_term: f64,
    /// `I(P_{gamma,p}, ch)` computed directly.
    pub mi: f64,
}

impl SparseMiDecomposition {
    pub fn residual(&self) -> f64 {
        (self.mi - (self.linear_term - self.kl_term)).abs()
    }
}

fn check_mix(mix: &[f64], ch: &Channel) -> Result<()> {
    if mix.len() != ch.k() {
        return Err(Error::DimensionMismatch {
            expected: ch.k(),
            found: mix.len(),
        });
    }
    Ok(())
}

/// Evaluate both sides of the sparse-input identity independently.
pub fn sparse_mi_decomposition(gamma: f64, mix: &[f64], ch: &Channel) -> Result<SparseMiDecomposition> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange { what: "gamma", value: gamma });
    }
    check_mix(mix, ch)?;
    let q0 = ch.no_input();
    let mut linear = 0.0;
    for (k, &pk) in mix.iter().enumerate() {
        if pk == 0.0 || gamma == 0.0 {
            continue;
        }
        let d = kl_divergence(ch.row(k + 1), q0);
        if !d.is_finite() {
            return Err(Error::SupportViolation);
        }
        linear += gamma * pk * d;
    }
    let px = Distribution::sparse(gamma, mix);
    let out = induced_output(&px, ch)?;
    Ok(SparseMiDecomposition {
        linear_term: linear,
        kl_term: kl_divergence(&out, q0),
        mi: mutual_information(&px, ch)?,
    })
}

/// Lower and upper quadratic bounds `gamma^2/2 chi^2 (1 -+ sqrt(gamma))` on
/// `D(Q_{gamma,p} || Q_0)`. They bracket the divergence only once `gamma` is small.
pub fn kl_sandwich(gamma: f64, mix: &[f64], warden: &Channel) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::OutOfRange { what: "gamma", value: gamma });
    }
    check_mix(mix, warden)?;
    let chi2 = chi_squared(&warden.mixture(mix)?, warden.no_input())?;
    let centre = 0.5 * gamma * gamma * chi2;
    let s = gamma.sqrt();
    Ok((centre * (1.0 - s), centre * (1.0 + s)))
}

/// Pinsker lower bound `max(0, 1 - sqrt(kl))` on the warden's error sum.
pub fn detection_bounds(kl: f64) -> f64 {
    (1.0 - kl.max(0.0).sqrt()).max(0.0)
}

/// Error sum `1 - tv` of the optimal test.
pub fn detection_sum(tv: f64) -> f64 {
    1.0 - tv
}

/// `sqrt(2) * Qinv((1 - delta) / 2)` where `Q` is the standard normal tail.
pub fn gamma_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange { what: "delta", value: delta });
    }
    let normal = Normal::standard();
    // Qinv(t) = Phi^-1(1 - t)
    let t = (1.0 - delta) / 2.0;
    Ok(std::f64::consts::SQRT_2 * normal.inverse_cdf(1.0 - t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Channel;

    fn bern(t: f64) -> Distribution {
        Distribution::bernoulli(t)
    }

    #[test]
    fn excess_series_matches_closed_form() {
        for &u in &[-0.04f64, -1e-3, 1e-6, 0.01, 0.049] {
            let direct = (1.0 + u) * u.ln_1p() - u;
            assert!((excess(u) - direct).abs() < 1e-15, "u={u}");
        }
        assert_eq!(excess(0.0), 0.0);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&bern(0.3), &bern(0.3)), 0.0);
        let oracle = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((kl_divergence(&bern(0.5), &bern(0.25)) - oracle).abs() < 1e-15);
        assert!((oracle - 0.143841).abs() < 1e-6);
        assert_eq!(kl_divergence(&bern(1.0), &bern(0.0)), f64::INFINITY);
    }

    #[test]
    fn chi_squared_examples() {
        assert_eq!(chi_squared(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        let v = chi_squared(&bern(0.7), &bern(0.3)).unwrap();
        assert!((v - (0.16 / 0.3 + 0.16 / 0.7)).abs() < 1e-15);
        assert!((v - 0.761905).abs() < 1e-6);
        assert_eq!(chi_squared(&bern(0.5), &bern(1.0)), Err(Error::SupportViolation));
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&bern(0.4), &bern(0.4)), 0.0);
        assert!((total_variation(&bern(0.9), &bern(0.1)) - 0.8).abs() < 1e-15);
        assert_eq!(total_variation(&bern(0.0), &bern(1.0)), 1.0);
    }

    #[test]
    fn binary_entropy_examples() {
        assert!((binary_entropy(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(inv_binary_entropy(0.0).unwrap(), 0.0);
        let q = inv_binary_entropy(binary_entropy(0.11).unwrap()).unwrap();
        assert!((q - 0.11).abs() < 1e-12);
        assert!(binary_entropy(1.5).is_err());
        assert!(inv_binary_entropy(1.0).is_err());
    }

    #[test]
    fn convolution_examples() {
        assert_eq!(binary_convolution(0.37, 0.5), 0.5);
        assert!((binary_convolution(0.1, 0.2) - 0.26).abs() < 1e-15);
        assert_eq!(binary_convolution(0.37, 0.0), 0.37);
    }

    #[test]
    fn mutual_information_examples() {
        let bsc = Channel::bsc(0.3);
        assert_eq!(mutual_information(&Distribution::point_mass(2, 0), &bsc).unwrap(), 0.0);
        let id = Channel::bsc(0.0);
        let v = mutual_information(&Distribution::uniform(2), &id).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        let closed = binary_entropy(0.34).unwrap() - binary_entropy(0.3).unwrap();
        let v = mutual_information(&bern(0.1), &bsc).unwrap();
        assert!((v - closed).abs() < 1e-14);
    }

    #[test]
    fn sparse_decomposition_examples() {
        let bsc = Channel::bsc(0.3);
        let d = sparse_mi_decomposition(0.0, &[1.0], &bsc).unwrap();
        assert_eq!((d.linear_term, d.kl_term, d.mi), (0.0, 0.0, 0.0));
        let d = sparse_mi_decomposition(1.0, &[1.0], &bsc).unwrap();
        let d10 = kl_divergence(bsc.row(1), bsc.row(0));
        assert!((d.linear_term - d10).abs() < 1e-15);
        assert!((d.kl_term - d10).abs() < 1e-15);
        assert!(d.mi.abs() < 1e-15);
        let d = sparse_mi_decomposition(0.01, &[1.0], &bsc).unwrap();
        assert!(d.residual() < 1e-12);
    }

    #[test]
    fn sandwich_examples() {
        let bsc = Channel::bsc(0.3);
        let g = 1e-4;
        let (lo, hi) = kl_sandwich(g, &[1.0], &bsc).unwrap();
        let d = kl_divergence(&induced_output(&bern(g), &bsc).unwrap(), bsc.no_input());
        assert!(lo <= d && d <= hi);
        let g = 1e-6;
        let (lo, hi) = kl_sandwich(g, &[1.0], &bsc).unwrap();
        let centre = 0.5 * (lo + hi);
        assert!((hi - lo) / centre <= 2.0 * g.sqrt() + 1e-12);
        assert!(kl_sandwich(0.5, &[1.0], &bsc).is_ok());
        assert!(kl_sandwich(0.0, &[1.0], &bsc).is_err());
    }

    #[test]
    fn detection_examples() {
        assert_eq!(detection_bounds(0.0), 1.0);
        assert!((detection_bounds(0.04) - 0.8).abs() < 1e-15);
        assert_eq!(detection_sum(1.0), 0.0);
        assert_eq!(detection_bounds(4.0), 0.0);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn gamma_delta_examples() {
        assert!(gamma_delta(1e-12).unwrap().abs() < 1e-10);
        let normal = Normal::standard();
        let exact = 1.0 - 2.0 * (1.0 - normal.cdf(0.5));
        assert!((gamma_delta(exact).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        assert!((gamma_delta(0.3829).unwrap() - 0.70711).abs() < 1e-4);
        assert!(gamma_delta(1.0).is_err());
        assert!(gamma_delta(0.0).is_err());
    }
}
