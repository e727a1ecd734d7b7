//! Geometry of the covert capacity region, the key-rate region, and the
//! time-division planner.
//!
//! Rates are normalized throughputs `L_j = lim log M_j / sqrt(n delta)` in nats.
//! The region is `sum_j L_j / L_j* <= 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex;

/// Slack on `sum_j L_j / L_j* <= 1`.
pub const REGION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub l_stars: Vec<f64>,
    /// Receivers are successively degraded; required for more than two users.
    #[serde(default)]
    pub degraded: bool,
}

impl RegionSpec {
    pub fn new(l_stars: Vec<f64>, degraded: bool) -> Result<Self> {
        if l_stars.is_empty() {
            return Err(Error::InvalidRegion("no receivers".into()));
        }
        if let Some(&bad) = l_stars.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::OutOfRange { what: "L*", value: bad });
        }
        if l_stars.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidRegion("every covert capacity is zero".into()));
        }
        if l_stars.len() > 2 && !degraded {
            return Err(Error::InvalidRegion(
                "more than two receivers require the degraded flag".into(),
            ));
        }
        Ok(Self { l_stars, degraded })
    }

    pub fn two_user(l1: f64, l2: f64) -> Result<Self> {
        Self::new(vec![l1, l2], false)
    }

    pub fn users(&self) -> usize {
        self.l_stars.len()
    }

    /// `sum_j L_j / L_j*`, with zero-capacity coordinates contributing nothing.
    pub fn share_sum(&self, point: &[f64]) -> Result<f64> {
        Ok(self.shares(point)?.iter().sum())
    }

    /// Per-coordinate shares `L_j / L_j*`.
    pub fn shares(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.users() {
            return Err(Error::DimensionMismatch {
                expected: self.users(),
                found: point.len(),
            });
        }
        point
            .iter()
            .zip(&self.l_stars)
            .enumerate()
            .map(|(j, (&l, &ls))| {
                if !(l >= 0.0) || !l.is_finite() {
                    Err(Error::OutOfRange { what: "rate", value: l })
                } else if ls == 0.0 {
                    if l > 0.0 {
                        Err(Error::UnsupportedRate(j))
                    } else {
                        Ok(0.0)
                    }
                } else {
                    Ok(l / ls)
                }
            })
            .collect()
    }
}

pub fn region_contains(point: &[f64], region: &RegionSpec) -> Result<bool> {
    Ok(region.share_sum(point)? <= 1.0 + REGION_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub shares: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Boundary points on a share lattice with `resolution` points per edge.
pub fn boundary(region: &RegionSpec, resolution: usize) -> Result<Vec<BoundaryPoint>> {
    if resolution < 2 {
        return Err(Error::OutOfRange {
            what: "resolution",
            value: resolution as f64,
        });
    }
    let active: Vec<usize> = (0..region.users()).filter(|&j| region.l_stars[j] > 0.0).collect();
    let mut comps = simplex::lattice(active.len(), resolution - 1);
    comps.reverse();
    Ok(comps
        .into_iter()
        .map(|c| {
            let mut shares = vec![0.0; region.users()];
            let mut used = 0.0;
            for (i, (s, &j)) in c.iter().zip(&active).enumerate() {
                // last share closes the sum so it is exactly one
                shares[j] = if i + 1 == active.len() { 1.0 - used } else { *s };
                used += shares[j];
            }
            let rates = shares.iter().zip(&region.l_stars).map(|(s, l)| s * l).collect();
            BoundaryPoint { shares, rates }
        })
        .collect())
}

pub fn boundary_csv(points: &[BoundaryPoint]) -> String {
    let n = points.first().map_or(0, |p| p.shares.len());
    let mut head: Vec<String> = (1..=n).map(|j| format!("share_{j}")).collect();
    head.extend((1..=n).map(|j| format!("L_{j}")));
    let mut s = head.join(",");
    s.push('\n');
    for p in points {
        let row: Vec<String> = p.shares.iter().chain(&p.rates).map(|v| v.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Split of blocklength and covertness budget between two point-to-point codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDivisionPlan {
    pub rho: f64,
    /// `(delta', delta - delta')` with `delta' = rho delta`.
    pub delta_split: (f64, f64),
    pub block_split: (u64, u64),
    /// `(sqrt(rho n delta') L1*, sqrt((1 - rho) n (delta - delta')) L2*)` nats.
    pub log_m_targets: (f64, f64),
    /// `(l1 sqrt(n delta), l2 sqrt(n delta))` nats.
    pub requested_log_m: (f64, f64),
    /// `1 - l1/L1* - l2/L2*`.
    pub idle_fraction: f64,
    pub l_stars: (f64, f64),
    pub n: u64,
    pub delta: f64,
}

impl TimeDivisionPlan {
    /// Targets divided by `sqrt(n delta) L_j*`; zero-capacity coordinates map to 0.
    pub fn normalized_targets(&self) -> (f64, f64) {
        let s = (self.n as f64 * self.delta).sqrt();
        let norm = |t: f64, l: f64| if l > 0.0 && s > 0.0 { t / (s * l) } else { 0.0 };
        (
            norm(self.log_m_targets.0, self.l_stars.0),
            norm(self.log_m_targets.1, self.l_stars.1),
        )
    }
}

fn require_two(region: &RegionSpec) -> Result<()> {
    if region.users() != 2 {
        return Err(Error::InvalidRegion(format!(
            "operation needs two receivers, got {}",
            region.users()
        )));
    }
    Ok(())
}

pub fn time_division_plan(l1: f64, l2: f64, delta: f64, n: u64, region: &RegionSpec) -> Result<TimeDivisionPlan> {
    require_two(region)?;
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::OutOfRange { what: "delta", value: delta });
    }
    let shares = region.shares(&[l1, l2])?;
    let sum = shares[0] + shares[1];
    if sum > 1.0 + REGION_TOL {
        return Err(Error::OutsideRegion(sum));
    }
    let rho = if sum > 0.0 { shares[0] / sum } else { 1.0 };
    let (ls1, ls2) = (region.l_stars[0], region.l_stars[1]);
    let d1 = rho * delta;
    let n1 = (rho * n as f64).floor() as u64;
    let nf = n as f64;
    let sqrt_nd = (nf * delta).sqrt();
    Ok(TimeDivisionPlan {
        rho,
        delta_split: (d1, delta - d1),
        block_split: (n1, n - n1),
        log_m_targets: ((rho * nf * d1).sqrt() * ls1, ((1.0 - rho) * nf * (delta - d1)).max(0.0).sqrt() * ls2),
        requested_log_m: (l1 * sqrt_nd, l2 * sqrt_nd),
        idle_fraction: (1.0 - sum).max(0.0),
        l_stars: (ls1, ls2),
        n,
        delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRatePoint {
    pub l1: f64,
    pub l2: f64,
    pub l_key: f64,
}

/// `max(0, (l1/L1* + l2/L2*) L_Z* - l1 - l2)`.
pub fn min_key_rate(l1: f64, l2: f64, region: &RegionSpec, l_z_star: f64) -> Result<f64> {
    require_two(region)?;
    let sum = region.share_sum(&[l1, l2])?;
    if sum > 1.0 + REGION_TOL {
        return Err(Error::OutsideRegion(sum));
    }
    Ok((sum * l_z_star - l1 - l2).max(0.0))
}

pub fn key_region_contains(pt: &KeyRatePoint, region: &RegionSpec, l_z_star: f64) -> bool {
    if region.users() != 2 || !(pt.l_key >= 0.0) {
        return false;
    }
    match min_key_rate(pt.l1, pt.l2, region, l_z_star) {
        Ok(min) => pt.l_key >= min - REGION_TOL,
        Err(_) => false,
    }
}
