//! The time-division optimality condition for two legitimate receivers.
//!
//! With `L1*`, `L2*` the covert capacities of the two receivers against the
//! same warden, the condition (for receiver 1 dominant) reads
//!
//! ```text
//! max_{P_X} I(P_X, W) / I(P_X, V) <= L1* / L2*
//! ```
//!
//! and the mirrored inequality when receiver 2 dominates. For binary inputs it
//! reduces to `D(W_g || W_0) / D(V_g || V_0) >= L1* / L2*` for every mixing
//! weight `g`, which is what [`check_condition_binary`] searches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{covert_capacity_binary, covert_capacity_general};
use crate::channel::{BroadcastSpec, Channel};
use crate::error::{Error, Result};
use crate::info::{chi_squared, kl_slices};
use crate::simplex::{self, AscentOptions};

/// Absolute tolerance on `worst_ratio <= threshold`.
pub const RATIO_TOL: f64 = 1e-9;
/// Spacing of the line-search grid in [`check_condition_binary`].
pub const LINE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub satisfied: bool,
    /// 1 or 2: the receiver with the larger covert capacity (1 on ties).
    pub dominant_receiver: u8,
    /// Supremum of the dominant-over-weak mutual-information ratio.
    pub worst_ratio: f64,
    /// Input law attaining `worst_ratio`. When `limit_toward` is set the
    /// ratio is the limit as mass moves from this point mass toward that input.
    pub witness_px: Vec<f64>,
    pub limit_toward: Option<usize>,
    /// `L_dom* / L_weak*`.
    pub threshold: f64,
    /// Satisfied with equality up to [`RATIO_TOL`].
    pub boundary: bool,
    pub l_stars: [f64; 2],
    /// Binary route only: minimum over the mixing weight of the divergence ratio.
    pub min_divergence_ratio: Option<f64>,
}

struct Oriented<'a> {
    dom: &'a Channel,
    weak: &'a Channel,
    dominant: u8,
    threshold: f64,
    l_stars: [f64; 2],
}

fn orient(spec: &BroadcastSpec, l1: f64, l2: f64) -> Result<Oriented<'_>> {
    if l1 == 0.0 && l2 == 0.0 {
        return Err(Error::NoCovertCapacity);
    }
    let (dom, weak, dominant, ld, lw) = if l1 >= l2 {
        (&spec.w, &spec.v, 1, l1, l2)
    } else {
        (&spec.v, &spec.w, 2, l2, l1)
    };
    if weak.is_constant() {
        return Err(Error::DegenerateDenominator);
    }
    Ok(Oriented {
        dom,
        weak,
        dominant,
        threshold: ld / lw,
        l_stars: [l1, l2],
    })
}

fn output(px: &[f64], ch: &Channel) -> Vec<f64> {
    let mut out = vec![0.0; ch.outputs()];
    for (p, row) in px.iter().zip(ch.rows()) {
        if *p > 0.0 {
            for (o, r) in out.iter_mut().zip(row.probs()) {
                *o += p * r;
            }
        }
    }
    out
}

fn mi(px: &[f64], ch: &Channel) -> f64 {
    let out = output(px, ch);
    px.iter()
        .zip(ch.rows())
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, row)| p * kl_slices(row.probs(), &out))
        .sum()
}

/// `d I / d p_x` up to a common additive constant, clipped to stay finite.
fn mi_gradient(px: &[f64], ch: &Channel) -> (f64, Vec<f64>) {
    let out = output(px, ch);
    let divs: Vec<f64> = ch.rows().iter().map(|r| kl_slices(r.probs(), &out).min(1e3)).collect();
    let val = px.iter().zip(&divs).filter(|(p, _)| **p > 0.0).map(|(p, d)| p * d).sum();
    (val, divs)
}

fn ratio(px: &[f64], o: &Oriented) -> Option<f64> {
    let den = mi(px, o.weak);
    let num = mi(px, o.dom);
    if den <= 1e-15 {
        return if num > 1e-9 { Some(f64::INFINITY) } else { None };
    }
    Some(num / den)
}

fn ratio_gradient(px: &[f64], o: &Oriented) -> Vec<f64> {
    let (n, gn) = mi_gradient(px, o.dom);
    let (d, gd) = mi_gradient(px, o.weak);
    gn.iter().zip(&gd).map(|(a, b)| (a * d - n * b) / (d * d)).collect()
}

/// Largest directional limit of the ratio at the vertices of the simplex:
/// `D(dom_y || dom_x) / D(weak_y || weak_x)` as mass leaves `x` toward `y`.
fn vertex_limits(o: &Oriented) -> Option<(f64, usize, usize)> {
    let n = o.dom.inputs();
    let mut best: Option<(f64, usize, usize)> = None;
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let num = kl_slices(o.dom.row(y).probs(), o.dom.row(x).probs());
            let den = kl_slices(o.weak.row(y).probs(), o.weak.row(x).probs());
            let r = if den <= 1e-15 {
                if num > 1e-12 {
                    f64::INFINITY
                } else {
                    continue;
                }
            } else if den.is_infinite() {
                if num.is_infinite() {
                    continue;
                }
                0.0
            } else {
                num / den
            };
            if best.is_none_or(|b| r > b.0) {
                best = Some((r, x, y));
            }
        }
    }
    best
}

fn point_mass(n: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[at] = 1.0;
    v
}

fn finish(o: &Oriented, worst: f64, witness: Vec<f64>, toward: Option<usize>, min_div: Option<f64>) -> ConditionVerdict {
    let satisfied = worst <= o.threshold + RATIO_TOL;
    ConditionVerdict {
        satisfied,
        dominant_receiver: o.dominant,
        worst_ratio: worst,
        witness_px: witness,
        limit_toward: toward,
        threshold: o.threshold,
        boundary: satisfied && worst >= o.threshold - RATIO_TOL,
        l_stars: o.l_stars,
        min_divergence_ratio: min_div,
    }
}

/// Maximize the mutual-information ratio over the whole input simplex.
pub fn check_condition(spec: &BroadcastSpec) -> Result<ConditionVerdict> {
    let l1 = covert_capacity_general(&spec.w, &spec.warden)?.l_star;
    let l2 = covert_capacity_general(&spec.v, &spec.warden)?.l_star;
    let o = orient(spec, l1, l2)?;
    let n = spec.inputs();

    let f = |p: &[f64]| ratio(p, &o);
    let g = |p: &[f64]| ratio_gradient(p, &o);
    let interior = simplex::maximize(&f, &g, n, &AscentOptions::default());
    let edge = vertex_limits(&o);

    let mut worst = f64::NEG_INFINITY;
    let mut witness = point_mass(n, 0);
    let mut toward = None;
    if let Some((r, x, y)) = edge {
        worst = r;
        witness = point_mass(n, x);
        toward = Some(y);
    }
    if let Some(m) = interior {
        if m.value > worst {
            worst = m.value;
            witness = m.argmax;
            toward = None;
        }
    }
    if worst == f64::NEG_INFINITY {
        return Err(Error::DegenerateDenominator);
    }
    Ok(finish(&o, worst, witness, toward, None))
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if b - a < 1e-14 {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid minimum of `f` on `(0, 1]` refined by golden section around the incumbent.
fn line_min<F: Fn(f64) -> f64 + Sync>(f: F) -> (f64, f64) {
    let steps = (1.0 / LINE_STEP).round() as usize;
    let (i, v) = (1..=steps)
        .into_par_iter()
        .map(|i| (i, f(i as f64 * LINE_STEP)))
        .reduce(|| (0, f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
    let lo = (i as f64 - 1.0) * LINE_STEP;
    let hi = ((i as f64 + 1.0) * LINE_STEP).min(1.0);
    let (g, fg) = golden(&f, lo.max(1e-12), hi);
    if fg < v {
        (g, fg)
    } else {
        (i as f64 * LINE_STEP, v)
    }
}

/// Line search of the binary reduction over the mixing weight `g` in `[0, 1]`.
pub fn check_condition_binary(spec: &BroadcastSpec) -> Result<ConditionVerdict> {
    if spec.inputs() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: spec.inputs(),
        });
    }
    let l1 = covert_capacity_binary(&spec.w, &spec.warden)?.l_star;
    let l2 = covert_capacity_binary(&spec.v, &spec.warden)?.l_star;
    let o = orient(spec, l1, l2)?;
    let lambda = o.threshold;

    let div = |ch: &Channel, g: f64| kl_slices(&output(&[1.0 - g, g], ch), ch.row(0).probs());
    let at_zero = chi_squared(o.dom.row(1), o.dom.row(0))? / chi_squared(o.weak.row(1), o.weak.row(0))?;
    let (_, grid_min) = line_min(|g| div(o.dom, g) / div(o.weak, g));
    let min_rho = grid_min.min(at_zero);

    if min_rho >= lambda - RATIO_TOL {
        return Ok(finish(&o, lambda, vec![1.0, 0.0], Some(1), Some(min_rho)));
    }
    // violated: report the largest mutual-information ratio
    let (g, neg) = line_min(|g| {
        let d = mi(&[1.0 - g, g], o.weak);
        if d <= 0.0 {
            f64::INFINITY
        } else {
            -mi(&[1.0 - g, g], o.dom) / d
        }
    });
    let mut worst = (-neg, vec![1.0 - g, g], None);
    let far = kl_slices(o.dom.row(0).probs(), o.dom.row(1).probs())
        / kl_slices(o.weak.row(0).probs(), o.weak.row(1).probs());
    if far > worst.0 {
        worst = (far, vec![0.0, 1.0], Some(0));
    }
    if lambda > worst.0 {
        worst = (lambda, vec![1.0, 0.0], Some(1));
    }
    Ok(finish(&o, worst.0, worst.1, worst.2, Some(min_rho)))
}

/// Cell state of a condition map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellVerdict {
    Satisfied,
    Violated,
    Degenerate,
}

impl CellVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            CellVerdict::Satisfied => "satisfied",
            CellVerdict::Violated => "violated",
            CellVerdict::Degenerate => "degenerate",
        }
    }
}

/// Verdicts over a square grid of second receivers
/// `V = [1 - q0, q0; q1, 1 - q1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMap {
    pub grid_step: f64,
    pub values: Vec<f64>,
    /// Row-major in `(q0, q1)`.
    pub cells: Vec<CellVerdict>,
}

impl ConditionMap {
    pub fn side(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i0: usize, i1: usize) -> CellVerdict {
        self.cells[i0 * self.side() + i1]
    }

    pub fn count(&self, v: CellVerdict) -> usize {
        self.cells.iter().filter(|&&c| c == v).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("q0,q1,verdict\n");
        for (i0, q0) in self.values.iter().enumerate() {
            for (i1, q1) in self.values.iter().enumerate() {
                s.push_str(&format!("{q0},{q1},{}\n", self.get(i0, i1).as_str()));
            }
        }
        s
    }
}

/// Evaluate [`check_condition_binary`] for every `V(q0, q1)` on the grid.
/// Any per-cell error becomes [`CellVerdict::Degenerate`].
pub fn condition_map(w: &Channel, warden: &Channel, grid_step: f64) -> Result<ConditionMap> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::OutOfRange {
            what: "grid_step",
            value: grid_step,
        });
    }
    if w.inputs() != 2 || warden.inputs() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: w.inputs().max(warden.inputs()),
        });
    }
    let m = (1.0 / grid_step + 1e-9).floor() as usize;
    let values: Vec<f64> = (0..=m).map(|i| (i as f64 * grid_step * 1e12).round() / 1e12).collect();
    let cells = (0..values.len() * values.len())
        .into_par_iter()
        .map(|idx| {
            let (q0, q1) = (values[idx / values.len()], values[idx % values.len()]);
            let spec = BroadcastSpec::new(w.clone(), Channel::binary(q0, q1), warden.clone());
            match spec.and_then(|s| check_condition_binary(&s)) {
                Ok(v) if v.satisfied => CellVerdict::Satisfied,
                Ok(_) => CellVerdict::Violated,
                Err(_) => CellVerdict::Degenerate,
            }
        })
        .collect();
    Ok(ConditionMap {
        grid_step,
        values,
        cells,
    })
}
