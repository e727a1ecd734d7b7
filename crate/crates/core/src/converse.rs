//! Converse machinery: weight budgets, upper concave envelopes, the
//! lambda-combined outer bound, and the BSC and Gaussian first-order frontiers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::covert_capacity_general;
use crate::channel::{is_no_input_redundant, BroadcastSpec, Channel};
use crate::condition::{check_condition, check_condition_binary};
use crate::error::{Error, Result};
use crate::info::{binary_convolution, binary_entropy, chi_squared, inv_binary_entropy, kl_divergence, kl_slices};

/// Envelope values above this count as positive.
pub const ENVELOPE_TOL: f64 = 1e-9;
/// Intervals in the coarse weight grid; the refinement doubles it.
pub const GRID_POINTS: usize = 2048;

/// Largest relative weight admitted by the covertness budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightBudget {
    /// `sqrt(2 delta / (chi2 n))`, capped at 1.
    pub alpha_bar: f64,
    pub n: u64,
    pub delta: f64,
    pub mix_p: Vec<f64>,
    /// `chi2(sum_k p_k Q_k || Q_0)`.
    pub chi2: f64,
}

impl WeightBudget {
    /// Largest `alpha` with `alpha^2 (1 - sqrt(alpha)) <= alpha_bar^2`, the weights
    /// the lower divergence bound cannot rule out. Taken on the increasing branch.
    pub fn alpha_max(&self) -> f64 {
        let target = self.alpha_bar * self.alpha_bar;
        let g = |a: f64| a * a * (1.0 - a.sqrt()) - target;
        let peak = 0.64;
        if self.alpha_bar == 0.0 {
            return 0.0;
        }
        if g(peak) <= 0.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (self.alpha_bar.min(peak), peak);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Weight budget for a warden and input mixture.
pub fn max_weight(delta: f64, n: u64, warden: &Channel, mix_p: &[f64]) -> Result<WeightBudget> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::OutOfRange { what: "delta", value: delta });
    }
    if n == 0 {
        return Err(Error::OutOfRange { what: "n", value: 0.0 });
    }
    if is_no_input_redundant(warden) {
        return Err(Error::RedundantNoInput);
    }
    let chi2 = chi_squared(&warden.mixture(mix_p)?, warden.no_input())?;
    if chi2 <= 0.0 {
        return Err(Error::RedundantNoInput);
    }
    Ok(WeightBudget {
        alpha_bar: (2.0 * delta / (chi2 * n as f64)).sqrt().min(1.0),
        n,
        delta,
        mix_p: mix_p.to_vec(),
        chi2,
    })
}

/// Power budget `2 sigma2 sqrt(delta / n)` for the Gaussian warden.
pub fn max_weight_gaussian(delta: f64, n: u64, sigma2: f64) -> Result<WeightBudget> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::OutOfRange { what: "delta", value: delta });
    }
    if n == 0 {
        return Err(Error::OutOfRange { what: "n", value: 0.0 });
    }
    if !(sigma2 > 0.0) {
        return Err(Error::OutOfRange { what: "sigma2", value: sigma2 });
    }
    Ok(WeightBudget {
        alpha_bar: 2.0 * sigma2 * (delta / n as f64).sqrt(),
        n,
        delta,
        mix_p: vec![1.0],
        chi2: 1.0 / (2.0 * sigma2 * sigma2),
    })
}

/// Piecewise-linear concave function given by its knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFn {
    pub knots: Vec<(f64, f64)>,
}

impl EnvelopeFn {
    /// Linear interpolation between knots; clamped outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        if x >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|p| p.0 <= x);
        let (x0, y0) = k[i - 1];
        let (x1, y1) = k[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn max(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Upper concave envelope (upper convex hull) of sorted samples.
pub fn upper_concave_envelope(samples: &[(f64, f64)]) -> Result<EnvelopeFn> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::UnsortedSamples);
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    for &p in samples {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b unless it lies strictly above the chord a-p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(EnvelopeFn { knots: hull })
}

/// Outer bound on `(log M_dom + lambda log M_weak) / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseBound {
    pub n: u64,
    pub lambda: f64,
    pub bound_nats: f64,
    /// `bound_nats * sqrt(n / delta)`.
    pub normalized: f64,
    /// Maximum of the envelope term over the admissible weights.
    pub envelope_max: f64,
    pub alpha_max: f64,
    pub dominant_receiver: u8,
    pub condition_satisfied: bool,
}

/// `I(P_a, ch)` for `P_a = (1 - a) delta_0 + a mix`, written as the linear term
/// minus the output divergence so small weights keep their precision.
fn sparse_mi(a: f64, mix: &[f64], ch: &Channel, lin: f64) -> f64 {
    let q0 = ch.no_input().probs();
    let mut out: Vec<f64> = q0.iter().map(|v| (1.0 - a) * v).collect();
    for (k, m) in mix.iter().enumerate() {
        for (o, r) in out.iter_mut().zip(ch.row(k + 1).probs()) {
            *o += a * m * r;
        }
    }
    a * lin - kl_slices(&out, q0)
}

fn linear_coefficient(mix: &[f64], ch: &Channel) -> f64 {
    mix.iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(k, m)| m * kl_divergence(ch.row(k + 1), ch.no_input()))
        .sum()
}

fn grid_bound(
    alpha_max: f64,
    points: usize,
    lambda: f64,
    inner: &(dyn Fn(f64) -> f64 + Sync),
    weak_mi: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<(f64, f64)> {
    let samples: Vec<(f64, f64)> = (0..=points)
        .into_par_iter()
        .map(|i| {
            let a = alpha_max * i as f64 / points as f64;
            (a, inner(a))
        })
        .collect();
    let env = upper_concave_envelope(&samples)?;
    let mut best = f64::NEG_INFINITY;
    for &(a, _) in &samples {
        best = best.max(lambda * weak_mi(a) + env.eval(a));
    }
    Ok((best, env.max()))
}

/// Evaluate `max_{a <= alpha_max} lambda I(P_a, V) + F[I(., W) - lambda I(., V)](a)`
/// with `lambda = L_dom* / L_weak*`.
pub fn lambda_sum_bound(spec: &BroadcastSpec, budget: &WeightBudget) -> Result<ConverseBound> {
    let verdict = if spec.inputs() == 2 {
        check_condition_binary(spec)?
    } else {
        check_condition(spec)?
    };
    let (dom, weak) = if verdict.dominant_receiver == 1 {
        (&spec.w, &spec.v)
    } else {
        (&spec.v, &spec.w)
    };
    if budget.mix_p.len() != spec.inputs() - 1 {
        return Err(Error::DimensionMismatch {
            expected: spec.inputs() - 1,
            found: budget.mix_p.len(),
        });
    }
    let lambda = if spec.inputs() == 2 {
        verdict.threshold
    } else {
        let l_dom = covert_capacity_general(dom, &spec.warden)?.l_star;
        let l_weak = covert_capacity_general(weak, &spec.warden)?.l_star;
        l_dom / l_weak
    };
    let alpha_max = budget.alpha_max();
    let mut out = ConverseBound {
        n: budget.n,
        lambda,
        bound_nats: 0.0,
        normalized: 0.0,
        envelope_max: 0.0,
        alpha_max,
        dominant_receiver: verdict.dominant_receiver,
        condition_satisfied: verdict.satisfied,
    };
    if alpha_max == 0.0 || budget.delta == 0.0 {
        return Ok(out);
    }
    let mix = &budget.mix_p;
    let (ld, lw) = (linear_coefficient(mix, dom), linear_coefficient(mix, weak));
    let weak_mi = |a: f64| sparse_mi(a, mix, weak, lw);
    let inner = |a: f64| sparse_mi(a, mix, dom, ld) - lambda * sparse_mi(a, mix, weak, lw);

    let (coarse, _) = grid_bound(alpha_max, GRID_POINTS, lambda, &inner, &weak_mi)?;
    let (fine, env_max) = grid_bound(alpha_max, 2 * GRID_POINTS, lambda, &inner, &weak_mi)?;
    let bound = coarse.max(fine).max(0.0);
    if verdict.satisfied && env_max > ENVELOPE_TOL {
        return Err(Error::ConditionViolated(env_max));
    }
    out.bound_nats = bound;
    out.normalized = bound * (budget.n as f64 / budget.delta).sqrt();
    out.envelope_max = env_max;
    Ok(out)
}

/// [`lambda_sum_bound`] for each blocklength.
pub fn converse_sweep(spec: &BroadcastSpec, delta: f64, mix_p: &[f64], n_list: &[u64]) -> Result<Vec<ConverseBound>> {
    n_list
        .iter()
        .map(|&n| lambda_sum_bound(spec, &max_weight(delta, n, &spec.warden, mix_p)?))
        .collect()
}

pub fn converse_csv(rows: &[ConverseBound]) -> String {
    let mut s = String::from("n,lambda,bound_nats,normalized\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.n, r.lambda, r.bound_nats, r.normalized));
    }
    s
}

fn bsc_slope(p: f64) -> f64 {
    (1.0 - 2.0 * p) * ((1.0 - p) / p).ln()
}

/// First-order BSC frontier `(c1 t, c2 (a - t))` for `t` on `steps + 1`
/// points of `[0, a]`, `a = alpha_bar sqrt(n)`. Divide by `sqrt(delta)` to normalize.
pub fn bsc_converse_region(p1: f64, p2: f64, budget: &WeightBudget, steps: usize) -> Result<Vec<(f64, f64)>> {
    if !(p1 > 0.0 && p1 <= p2 && p2 <= 0.5) {
        return Err(Error::OutOfRange { what: "crossover", value: if p1 > 0.0 { p2 } else { p1 } });
    }
    if steps == 0 {
        return Err(Error::OutOfRange { what: "steps", value: 0.0 });
    }
    let (c1, c2) = (bsc_slope(p1), bsc_slope(p2));
    let a = budget.alpha_bar * (budget.n as f64).sqrt();
    Ok((0..=steps)
        .map(|i| {
            let t = a * i as f64 / steps as f64;
            (c1 * t, c2 * (a - t))
        })
        .collect())
}

/// Gaussian frontier `(tau / (2 N1), (alpha - tau) / (2 N2))` for `tau` on
/// `steps + 1` points of `[0, alpha_bar]`. Multiply by `sqrt(n / delta)` to normalize.
pub fn gaussian_converse_region(n1: f64, n2: f64, budget: &WeightBudget, steps: usize) -> Result<Vec<(f64, f64)>> {
    if !(n1 > 0.0 && n1 <= n2 && n2.is_finite()) {
        return Err(Error::OutOfRange { what: "noise variance", value: n1 });
    }
    if steps == 0 {
        return Err(Error::OutOfRange { what: "steps", value: 0.0 });
    }
    let a = budget.alpha_bar;
    Ok((0..=steps)
        .map(|i| {
            let tau = a * i as f64 / steps as f64;
            (tau / (2.0 * n1), (a - tau) / (2.0 * n2))
        })
        .collect())
}

/// `(h_b(h_b^{-1}(h) * p), h)`.
pub fn mrs_gerber_check(h: f64, p: f64) -> Result<(f64, f64)> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::OutOfRange { what: "p", value: p });
    }
    let q = inv_binary_entropy(h)?;
    Ok((binary_entropy(binary_convolution(q, p))?, h))
}

/// `(|h_b(q * xi) - h_b(q) - ln((1 - q)/q)(1 - 2q) xi|, C xi^2)` with
/// `C = (1 - 2q)^2 / (2 q (1 - q))`.
pub fn taylor_check(q: f64, xi: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::OutOfRange { what: "q", value: q });
    }
    if !(0.0..=0.5).contains(&xi) {
        return Err(Error::OutOfRange { what: "xi", value: xi });
    }
    let lhs = binary_entropy(binary_convolution(q, xi))? - binary_entropy(q)? - ((1.0 - q) / q).ln() * (1.0 - 2.0 * q) * xi;
    let c = (1.0 - 2.0 * q).powi(2) / (2.0 * q * (1.0 - q));
    Ok((lhs.abs(), c * xi * xi))
}

/// Differential entropy (nats) of `sum_i w_i N(mu_i, var)` by Simpson quadrature.
pub fn gaussian_mixture_entropy(components: &[(f64, f64)], var: f64) -> Result<f64> {
    if components.is_empty() || !(var > 0.0) {
        return Err(Error::OutOfRange { what: "variance", value: var });
    }
    let sd = var.sqrt();
    let lo = components.iter().map(|c| c.1).fold(f64::INFINITY, f64::min) - 12.0 * sd;
    let hi = components.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max) + 12.0 * sd;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    let density = |y: f64| -> f64 {
        components
            .iter()
            .map(|(w, m)| w * norm * (-(y - m) * (y - m) / (2.0 * var)).exp())
            .sum()
    };
    let integrand = |y: f64| {
        let f = density(y);
        if f > 0.0 {
            -f * f.ln()
        } else {
            0.0
        }
    };
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let mut s = integrand(lo) + integrand(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * integrand(lo + i as f64 * h);
    }
    Ok(s * h / 3.0)
}

/// Conditional entropy power inequality for `Y1 = X + N(0, n1)` and
/// `Y2 = Y1 + N(0, n2 - n1)` given a discrete `U`.
///
/// Each entry of `mixtures` is `(P(u), [(weight, point)])` describing `X | U = u`.
/// Returns `(exp(2 h(Y2|U)), exp(2 h(Y1|U)) + 2 pi e (n2 - n1))`.
pub fn conditional_epi(mixtures: &[(f64, Vec<(f64, f64)>)], n1: f64, n2: f64) -> Result<(f64, f64)> {
    if !(n1 > 0.0 && n2 >= n1) {
        return Err(Error::OutOfRange { what: "noise variance", value: n1 });
    }
    let mut h1 = 0.0;
    let mut h2 = 0.0;
    for (pu, comps) in mixtures {
        h1 += pu * gaussian_mixture_entropy(comps, n1)?;
        h2 += pu * gaussian_mixture_entropy(comps, n2)?;
    }
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    Ok(((2.0 * h2).exp(), (2.0 * h1).exp() + two_pi_e * (n2 - n1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_budget_examples() {
        let b = max_weight(1.0, 10_000, &Channel::bsc(0.3), &[1.0]).unwrap();
        assert!((b.alpha_bar - (2.0f64 / (0.16 / 0.3 + 0.16 / 0.7) / 1e4).sqrt()).abs() < 1e-15);
        assert!((b.alpha_bar - 0.0162019).abs() < 1e-7);
        let b4 = max_weight(1.0, 40_000, &Channel::bsc(0.3), &[1.0]).unwrap();
        assert!((b4.alpha_bar - b.alpha_bar / 2.0).abs() < 1e-15);
        let g = max_weight_gaussian(1.0, 10_000, 1.0).unwrap();
        assert!((g.alpha_bar - 0.02).abs() < 1e-15);
        assert_eq!(
            max_weight(1.0, 10, &Channel::binary(0.3, 0.7), &[1.0]).unwrap_err(),
            Error::RedundantNoInput
        );
    }

    #[test]
    fn alpha_max_solves_the_relaxed_constraint() {
        let b = max_weight(1.0, 10_000, &Channel::bsc(0.3), &[1.0]).unwrap();
        let a = b.alpha_max();
        assert!(a > b.alpha_bar);
        assert!((a * a * (1.0 - a.sqrt()) - b.alpha_bar * b.alpha_bar).abs() < 1e-15);
    }

    #[test]
    fn envelope_of_concave_and_convex_samples() {
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let hb: Vec<(f64, f64)> = xs.iter().map(|&x| (x, binary_entropy(x).unwrap())).collect();
        let e = upper_concave_envelope(&hb).unwrap();
        for &(x, y) in &hb {
            assert!((e.eval(x) - y).abs() < 1e-12);
        }
        let sq: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x * x)).collect();
        let e = upper_concave_envelope(&sq).unwrap();
        assert_eq!(e.knots.len(), 2);
        for &x in &xs {
            assert!((e.eval(x) - x).abs() < 1e-12);
        }
        assert_eq!(upper_concave_envelope(&[(0.0, 1.0)]).unwrap_err(), Error::TooFewSamples(1));
        assert_eq!(
            upper_concave_envelope(&[(0.5, 1.0), (0.2, 0.0)]).unwrap_err(),
            Error::UnsortedSamples
        );
    }

    #[test]
    fn zero_budget_gives_zero_bound() {
        let spec = BroadcastSpec::new(Channel::bsc(0.1), Channel::bsc(0.2), Channel::bsc(0.3)).unwrap();
        let b = max_weight(0.0, 100, &spec.warden, &[1.0]).unwrap();
        assert_eq!(b.alpha_bar, 0.0);
        assert_eq!(lambda_sum_bound(&spec, &b).unwrap().bound_nats, 0.0);
    }

    #[test]
    fn identical_receivers_have_zero_envelope() {
        let spec = BroadcastSpec::new(Channel::bsc(0.1), Channel::bsc(0.1), Channel::bsc(0.3)).unwrap();
        let b = max_weight(1.0, 10_000, &spec.warden, &[1.0]).unwrap();
        let r = lambda_sum_bound(&spec, &b).unwrap();
        assert_eq!(r.lambda, 1.0);
        assert_eq!(r.envelope_max, 0.0);
        let a = b.alpha_max();
        let direct = crate::info::mutual_information(&crate::channel::Distribution::bernoulli(a), &spec.v).unwrap();
        assert!((r.bound_nats - direct).abs() < 1e-12);
    }

    #[test]
    fn bsc_frontier_endpoints() {
        let b = max_weight(1.0, 10_000, &Channel::bsc(0.3), &[1.0]).unwrap();
        let pts = bsc_converse_region(0.1, 0.2, &b, 2).unwrap();
        let a = b.alpha_bar * 100.0;
        let (c1, c2) = (bsc_slope(0.1), bsc_slope(0.2));
        assert_eq!(pts[0], (0.0, c2 * a));
        assert!((pts[2].0 - c1 * a).abs() < 1e-12 && pts[2].1.abs() < 1e-12);
        let l1 = c1 * (2.0 / b.chi2).sqrt();
        let l2 = c2 * (2.0 / b.chi2).sqrt();
        let (x, y) = pts[1];
        assert!((x / l1 + y / l2 - 1.0).abs() < 1e-9);
        assert!(bsc_converse_region(0.3, 0.2, &b, 2).is_err());
    }

    #[test]
    fn gaussian_frontier_endpoints() {
        let b = max_weight_gaussian(1.0, 10_000, 1.0).unwrap();
        let pts = gaussian_converse_region(0.5, 2.0, &b, 4).unwrap();
        let scale = (1e4f64).sqrt();
        assert!((pts[4].0 * scale - 2.0).abs() < 1e-12);
        assert!((pts[0].1 * scale - 0.5).abs() < 1e-12);
        assert!(gaussian_converse_region(2.0, 0.5, &b, 4).is_err());
    }

    #[test]
    fn mrs_gerber_examples() {
        let h = binary_entropy(0.1).unwrap();
        assert!((mrs_gerber_check(h, 0.0).unwrap().0 - h).abs() < 1e-12);
        let ln2 = std::f64::consts::LN_2;
        assert!((mrs_gerber_check(ln2, 0.3).unwrap().0 - ln2).abs() < 1e-15);
        let (l, _) = mrs_gerber_check(h, 0.2).unwrap();
        assert!((l - binary_entropy(0.26).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn taylor_remainder_is_quadratic() {
        for &q in &[0.05, 0.1, 0.3, 0.45] {
            for &xi in &[1e-3, 1e-4, 1e-5] {
                let (r, b) = taylor_check(q, xi).unwrap();
                assert!(r <= b * (1.0 + 1e-6) + 1e-18, "q={q} xi={xi}");
            }
        }
    }

    #[test]
    fn gaussian_entropy_of_single_component() {
        let h = gaussian_mixture_entropy(&[(1.0, 0.3)], 2.0).unwrap();
        let exact = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * 2.0).ln();
        assert!((h - exact).abs() < 1e-9);
    }
}
