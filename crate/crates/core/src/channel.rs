//! Channel and distribution data model.
//!
//! Inputs are indexed `0..=K`; row 0 of every channel is the no-input symbol.
//! A [`BroadcastSpec`] bundles the two legitimate channels and the warden and is
//! pruned on construction so that the warden's no-input row has full support.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::simplex;

/// Tolerance for accepting user-supplied probability vectors.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::check(&probs, 0)?;
        Ok(Self(probs))
    }

    fn check(probs: &[f64], row: usize) -> Result<()> {
        if probs.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let sum: f64 = probs.iter().sum();
        let min = probs.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min >= 0.0) || !sum.is_finite() || (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NonStochasticRow { row, sum, min });
        }
        Ok(())
    }

    /// `Bern(theta)` as the vector `[1 - theta, theta]`.
    pub fn bernoulli(theta: f64) -> Self {
        Self(vec![1.0 - theta, theta])
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        let mut v = vec![0.0; len];
        v[at] = 1.0;
        Self(v)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    /// Input law `P_{gamma,p}`: mass `1 - gamma` on the no-input symbol and
    /// `gamma * p_k` on input `k >= 1`.
    pub fn sparse(gamma: f64, mix: &[f64]) -> Self {
        let mut v = Vec::with_capacity(mix.len() + 1);
        v.push(1.0 - gamma);
        v.extend(mix.iter().map(|p| gamma * p));
        Self(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i)
    }

    /// Whether `self` puts no mass where `other` has none.
    pub fn is_dominated_by(&self, other: &Distribution) -> bool {
        self.0.iter().zip(&other.0).all(|(&p, &q)| q > 0.0 || p == 0.0)
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Distribution::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.0
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Row-stochastic matrix from inputs `0..=K` to a finite output alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Channel {
    rows: Vec<Distribution>,
}

impl Channel {
    /// Validate a matrix as a channel.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let first = matrix.first().ok_or(Error::EmptyMatrix)?;
        let width = first.len();
        if width == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut rows = Vec::with_capacity(matrix.len());
        for (row, r) in matrix.into_iter().enumerate() {
            if r.len() != width {
                return Err(Error::NotRectangular {
                    row,
                    expected: width,
                    found: r.len(),
                });
            }
            Distribution::check(&r, row)?;
            rows.push(Distribution(r));
        }
        Ok(Self { rows })
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Self {
        Self::binary(p, p)
    }

    /// Binary channel `[[1 - q0, q0], [q1, 1 - q1]]`.
    pub fn binary(q0: f64, q1: f64) -> Self {
        Self {
            rows: vec![Distribution(vec![1.0 - q0, q0]), Distribution(vec![q1, 1.0 - q1])],
        }
    }

    pub fn from_rows(rows: Vec<Distribution>) -> Result<Self> {
        Self::new(rows.into_iter().map(|d| d.0).collect())
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    /// Number of non-zero inputs `K`.
    pub fn k(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, x: usize) -> &Distribution {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    pub fn no_input(&self) -> &Distribution {
        &self.rows[0]
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.0.clone()).collect()
    }

    /// `sum_k mix_k * row_k` over the non-zero inputs.
    pub fn mixture(&self, mix: &[f64]) -> Result<Distribution> {
        if mix.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: mix.len(),
            });
        }
        let mut out = vec![0.0; self.outputs()];
        for (w, row) in mix.iter().zip(&self.rows[1..]) {
            for (o, r) in out.iter_mut().zip(&row.0) {
                *o += w * r;
            }
        }
        Ok(Distribution(out))
    }

    /// Whether every row is identical (the output carries no information).
    pub fn is_constant(&self) -> bool {
        self.rows[1..].iter().all(|r| r == &self.rows[0])
    }
}

impl TryFrom<Vec<Vec<f64>>> for Channel {
    type Error = Error;
    fn try_from(m: Vec<Vec<f64>>) -> Result<Self> {
        Channel::new(m)
    }
}

impl From<Channel> for Vec<Vec<f64>> {
    fn from(c: Channel) -> Self {
        c.to_matrix()
    }
}

/// Validate a matrix as a channel.
pub fn validate_channel(matrix: Vec<Vec<f64>>) -> Result<Channel> {
    Channel::new(matrix)
}

/// True iff `row_k << row_0` for every non-zero input `k`.
pub fn is_absolutely_continuous(ch: &Channel) -> bool {
    first_non_dominated(ch).is_none()
}

pub(crate) fn first_non_dominated(ch: &Channel) -> Option<usize> {
    (1..ch.inputs()).find(|&k| !ch.row(k).is_dominated_by(ch.no_input()))
}

/// Residual of the redundancy feasibility program.
#[derive(Debug, Clone)]
pub struct RedundancyFit {
    /// Minimum of `||sum_k p_k Q_k - Q_0||^2` found over the simplex.
    pub residual: f64,
    pub mix: Vec<f64>,
}

/// Minimize `||sum_k p_k Q_k - Q_0||^2` over the simplex by accelerated
/// projected gradient descent with adaptive restart.
pub fn redundancy_fit(warden: &Channel) -> RedundancyFit {
    let k = warden.k();
    let q0 = warden.no_input().probs();
    if k == 1 {
        let residual = warden.row(1).probs().iter().zip(q0).map(|(a, b)| (a - b) * (a - b)).sum();
        return RedundancyFit { residual, mix: vec![1.0] };
    }
    let cols: Vec<&[f64]> = (1..=k).map(|x| warden.row(x).probs()).collect();
    let objective = |p: &[f64]| -> (f64, Vec<f64>) {
        let mut r: Vec<f64> = q0.iter().map(|v| -v).collect();
        for (w, c) in p.iter().zip(&cols) {
            for (ri, ci) in r.iter_mut().zip(c.iter()) {
                *ri += w * ci;
            }
        }
        let val = r.iter().map(|v| v * v).sum();
        let grad = cols
            .iter()
            .map(|c| 2.0 * c.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        (val, grad)
    };
    // Lipschitz constant of the gradient: 2 * ||A||_F^2 bounds 2 * lambda_max(A^T A).
    let lip = 2.0 * cols.iter().flat_map(|c| c.iter()).map(|v| v * v).sum::<f64>();
    let step = 1.0 / lip.max(1e-300);

    let mut x = vec![1.0 / k as f64; k];
    let (mut fx, _) = objective(&x);
    let mut best = (fx, x.clone());
    for j in 0..k {
        let e = simplex::project(&(0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect::<Vec<_>>());
        let (fe, _) = objective(&e);
        if fe < best.0 {
            best = (fe, e);
        }
    }
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        if best.0 < 1e-24 {
            break;
        }
        let (_, g) = objective(&y);
        let cand: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let xn = simplex::project(&cand);
        let (fxn, _) = objective(&xn);
        if fxn < best.0 {
            best = (fxn, xn.clone());
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if fxn > fx {
            // restart momentum
            t = 1.0;
            y = xn.clone();
        } else {
            let beta = (t - 1.0) / tn;
            y = xn.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
            t = tn;
        }
        let moved: f64 = xn.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = xn;
        fx = fxn;
        if moved < 1e-17 && t == 1.0 {
            break;
        }
    }
    RedundancyFit {
        residual: best.0,
        mix: best.1,
    }
}

/// True iff `Q_0` lies in the convex hull of the other warden rows.
pub fn is_no_input_redundant(warden: &Channel) -> bool {
    if warden.inputs() < 2 {
        return false;
    }
    redundancy_fit(warden).residual < 1e-18
}

/// Output law `sum_x px(x) ch(.|x)`.
pub fn induced_output(px: &Distribution, ch: &Channel) -> Result<Distribution> {
    if px.len() != ch.inputs() {
        return Err(Error::DimensionMismatch {
            expected: ch.inputs(),
            found: px.len(),
        });
    }
    let mut out = vec![0.0; ch.outputs()];
    for (p, row) in px.probs().iter().zip(ch.rows()) {
        if *p == 0.0 {
            continue;
        }
        for (o, r) in out.iter_mut().zip(row.probs()) {
            *o += p * r;
        }
    }
    Ok(Distribution(out))
}

/// What validation removed from a [`BroadcastSpec`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pruning {
    /// Original indices of dropped inputs.
    pub dropped_inputs: Vec<usize>,
    /// Original indices of dropped warden outputs.
    pub dropped_outputs: Vec<usize>,
}

impl Pruning {
    pub fn is_empty(&self) -> bool {
        self.dropped_inputs.is_empty() && self.dropped_outputs.is_empty()
    }
}

/// Two legitimate channels and a warden channel over a shared input alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastSpec {
    pub w: Channel,
    pub v: Channel,
    pub warden: Channel,
    pub pruning: Pruning,
}

impl BroadcastSpec {
    /// Validate and prune: inputs whose warden row leaves `supp(Q_0)` are
    /// dropped from all three channels, then warden outputs outside
    /// `supp(Q_0)` are removed.
    pub fn new(w: Channel, v: Channel, warden: Channel) -> Result<Self> {
        let n = warden.inputs();
        for ch in [&w, &v] {
            if ch.inputs() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: ch.inputs(),
                });
            }
        }
        let q0 = warden.no_input().clone();
        let keep_in: Vec<usize> = (0..n).filter(|&x| warden.row(x).is_dominated_by(&q0)).collect();
        let keep_out: Vec<usize> = q0.support().collect();
        let pruning = Pruning {
            dropped_inputs: (0..n).filter(|x| !keep_in.contains(x)).collect(),
            dropped_outputs: (0..warden.outputs()).filter(|z| !keep_out.contains(z)).collect(),
        };
        if pruning.is_empty() {
            return Ok(Self { w, v, warden, pruning });
        }
        let pick = |ch: &Channel, cols: Option<&[usize]>| -> Channel {
            let rows = keep_in
                .iter()
                .map(|&x| {
                    let r = ch.row(x).probs();
                    match cols {
                        Some(c) => Distribution(c.iter().map(|&z| r[z]).collect()),
                        None => Distribution(r.to_vec()),
                    }
                })
                .collect();
            Channel { rows }
        };
        Ok(Self {
            w: pick(&w, None),
            v: pick(&v, None),
            warden: pick(&warden, Some(&keep_out)),
            pruning,
        })
    }

    pub fn inputs(&self) -> usize {
        self.warden.inputs()
    }

    /// Same spec with the two legitimate receivers exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            w: self.v.clone(),
            v: self.w.clone(),
            warden: self.warden.clone(),
            pruning: self.pruning.clone(),
        }
    }

    pub fn to_file(&self) -> ChannelSpecFile {
        ChannelSpecFile {
            inputs: self.inputs(),
            w: self.w.to_matrix(),
            v: self.v.to_matrix(),
            warden: self.warden.to_matrix(),
        }
    }
}

impl Serialize for BroadcastSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BroadcastSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = ChannelSpecFile::deserialize(d)?;
        f.into_spec().map_err(serde::de::Error::custom)
    }
}

/// AWGN broadcast channel `Y_j = X + N(0, n_j)`, warden `Z = X + N(0, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBroadcastSpec {
    pub n1: f64,
    pub n2: f64,
    pub sigma2: f64,
}

impl GaussianBroadcastSpec {
    pub fn new(n1: f64, n2: f64, sigma2: f64) -> Result<Self> {
        for (what, value) in [("n1", n1), ("n2", n2), ("sigma2", sigma2)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::OutOfRange { what, value });
            }
        }
        Ok(Self { n1, n2, sigma2 })
    }
}

/// On-disk form of a discrete broadcast spec. Rows are input-indexed with row 0
/// the no-input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpecFile {
    pub inputs: usize,
    pub w: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub warden: Vec<Vec<f64>>,
}

impl ChannelSpecFile {
    pub fn into_spec(self) -> Result<BroadcastSpec> {
        for m in [&self.w, &self.v, &self.warden] {
            if m.len() != self.inputs {
                return Err(Error::DimensionMismatch {
                    expected: self.inputs,
                    found: m.len(),
                });
            }
        }
        BroadcastSpec::new(Channel::new(self.w)?, Channel::new(self.v)?, Channel::new(self.warden)?)
    }
}

/// Either kind of spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecFile {
    Discrete(ChannelSpecFile),
    Gaussian(GaussianBroadcastSpec),
}

/// Parsed, validated spec.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySpec {
    Discrete(BroadcastSpec),
    Gaussian(GaussianBroadcastSpec),
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(self) -> Result<AnySpec> {
        match self {
            SpecFile::Discrete(f) => f.into_spec().map(AnySpec::Discrete),
            SpecFile::Gaussian(g) => GaussianBroadcastSpec::new(g.n1, g.n2, g.sigma2).map(AnySpec::Gaussian),
        }
    }
}
