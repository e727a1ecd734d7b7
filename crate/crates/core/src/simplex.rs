//! Optimization helpers on the probability simplex.
//!
//! The covert-capacity objective and the mutual-information ratio of the
//! time-division condition are both maximized over a simplex. Neither is known
//! to be concave, so the shared engine here certifies the result against a dense
//! lattice and refines the best lattice points (plus seeded random starts) with
//! projected gradient ascent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma};
use rayon::prelude::*;

/// Euclidean projection onto `{p : p >= 0, sum p = 1}`.
pub fn project(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// All compositions of `total` into `parts` non-negative integers, scaled by `1/total`.
pub fn lattice(parts: usize, total: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, total: usize, out: &mut Vec<Vec<f64>>) {
        let parts = cur.len();
        if i == parts - 1 {
            cur[i] = left;
            out.push(cur.iter().map(|&c| c as f64 / total as f64).collect());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, total, out);
        }
    }
    if parts == 0 {
        return out;
    }
    rec(0, total, &mut cur, total, &mut out);
    out
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Lattice resolution per coordinate: 200 for up to three coordinates, coarser
/// beyond so the lattice stays below roughly twenty thousand points.
pub fn lattice_resolution(parts: usize) -> usize {
    if parts <= 3 {
        return 200;
    }
    let mut total = 200;
    while total > 2 && binom(total + parts - 1, parts - 1) > 20_000.0 {
        total -= 1;
    }
    total
}

/// Settings for [`maximize`].
#[derive(Debug, Clone)]
pub struct AscentOptions {
    pub random_starts: usize,
    pub lattice_starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            random_starts: 6,
            lattice_starts: 4,
            max_iter: 500,
            seed: 0x5eed_c0de,
        }
    }
}

/// Outcome of a simplex maximization.
#[derive(Debug, Clone)]
pub struct Maximum {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// Best value seen on the lattice alone.
    pub lattice_value: f64,
}

/// Projected gradient ascent with Armijo backtracking from one start.
///
/// `f` returns `None` where the objective is undefined; such points are never
/// accepted as iterates.
pub fn ascend<F, G>(f: &F, grad: &G, start: Vec<f64>, max_iter: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Option<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = start;
    let mut fx = match f(&x) {
        Some(v) => v,
        None => return (x, f64::NEG_INFINITY),
    };
    let mut step = 1.0;
    for _ in 0..max_iter {
        let g = grad(&x);
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut improved = false;
        let mut s = step;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + s * b).collect();
            let cand = project(&cand);
            let moved: f64 = cand.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            if moved < 1e-30 {
                break;
            }
            if let Some(fc) = f(&cand) {
                // sufficient increase along the projected arc
                if fc >= fx + 1e-4 * moved / s {
                    x = cand;
                    fx = fc;
                    improved = true;
                    step = (s * 2.0).min(1e6);
                    break;
                }
            }
            s *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, fx)
}

/// Maximize `f` over the `parts`-dimensional simplex.
///
/// The lattice is scanned first; the best `lattice_starts` lattice points and
/// `random_starts` Dirichlet(1) draws then seed independent ascents that run in
/// parallel. The returned value is never below the lattice incumbent.
pub fn maximize<F, G>(f: &F, grad: &G, parts: usize, opts: &AscentOptions) -> Option<Maximum>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if parts == 0 {
        return None;
    }
    if parts == 1 {
        let v = f(&[1.0])?;
        return Some(Maximum {
            value: v,
            argmax: vec![1.0],
            lattice_value: v,
        });
    }
    let pts = lattice(parts, lattice_resolution(parts));
    let mut scored: Vec<(f64, Vec<f64>)> = pts
        .into_par_iter()
        .filter_map(|p| f(&p).filter(|v| !v.is_nan()).map(|v| (v, p)))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let lattice_value = scored.first().map(|s| s.0)?;

    let mut starts: Vec<Vec<f64>> = scored
        .iter()
        .take(opts.lattice_starts.max(1))
        .map(|s| s.1.clone())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let gamma = Gamma::new(1.0, 1.0).expect("valid gamma");
    for _ in 0..opts.random_starts {
        let raw: Vec<f64> = (0..parts).map(|_| gamma.sample(&mut rng)).collect();
        let s: f64 = raw.iter().sum();
        starts.push(raw.into_iter().map(|v| v / s).collect());
    }

    let results: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|s| ascend(f, grad, s, opts.max_iter))
        .collect();
    let mut best = (scored[0].1.clone(), lattice_value);
    for (x, v) in results {
        if v > best.1 {
            best = (x, v);
        }
    }
    Some(Maximum {
        value: best.1,
        argmax: best.0,
        lattice_value,
    })
}
