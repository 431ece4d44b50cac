//! Inner approximation of the random-code capacity region.
//!
//! For fixed independent inputs the three mutual informations are convex in
//! the state distribution, so each infimum is found by an away-step
//! Frank–Wolfe iteration whose duality gap certifies the tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Avmac, ChannelError, Dist};
use crate::geometry::{convex_hull, intersect_half_planes, polygon_contains, HalfPlane, Point};
use crate::util::compositions;

pub const DEFAULT_TOL: f64 = 1e-7;
const MAX_ITERS: usize = 20_000;
const LINE_SEARCH_STEPS: usize = 80;
/// Weights below this are treated as leaving the support.
const SUPPORT_EPS: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("no convergence: best value {best} with gap bound {gap}")]
    NotConverged { best: f64, gap: f64 },
    #[error("grid resolution must be at least 1")]
    BadGrid,
}

/// Which mutual information is minimized over the state distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MiKind {
    /// `I(X ∧ Z | Y)`
    XGivenY,
    /// `I(Y ∧ Z | X)`
    YGivenX,
    /// `I(X, Y ∧ Z)`
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinResult {
    pub value: f64,
    pub argmin: Vec<f64>,
    /// Frank–Wolfe gap at `argmin`; bounds `value − inf`.
    pub gap: f64,
    pub iterations: usize,
}

struct Objective<'a> {
    ch: &'a Avmac,
    px: &'a [f64],
    py: &'a [f64],
    kind: MiKind,
}

impl Objective<'_> {
    fn averaged(&self, q: &[f64]) -> Vec<f64> {
        let sz = self.ch.sizes();
        let mut v = vec![0.0; sz.x * sz.y * sz.z];
        for x in 0..sz.x {
            for y in 0..sz.y {
                let out = &mut v[(x * sz.y + y) * sz.z..(x * sz.y + y + 1) * sz.z];
                for (s, &qs) in q.iter().enumerate() {
                    if qs > 0.0 {
                        for (o, w) in out.iter_mut().zip(self.ch.row(x, y, s)) {
                            *o += qs * w;
                        }
                    }
                }
            }
        }
        v
    }

    /// Reference output law the log-ratio is taken against, per (x, y, z).
    fn reference(&self, v: &[f64]) -> Vec<f64> {
        let sz = self.ch.sizes();
        let mut r = vec![0.0; v.len()];
        match self.kind {
            MiKind::Joint => {
                let mut marg = vec![0.0; sz.z];
                for x in 0..sz.x {
                    for y in 0..sz.y {
                        for z in 0..sz.z {
                            marg[z] += self.px[x] * self.py[y] * v[(x * sz.y + y) * sz.z + z];
                        }
                    }
                }
                for c in 0..sz.x * sz.y {
                    r[c * sz.z..(c + 1) * sz.z].copy_from_slice(&marg);
                }
            }
            MiKind::XGivenY => {
                for y in 0..sz.y {
                    for z in 0..sz.z {
                        let m: f64 = (0..sz.x)
                            .map(|x| self.px[x] * v[(x * sz.y + y) * sz.z + z])
                            .sum();
                        for x in 0..sz.x {
                            r[(x * sz.y + y) * sz.z + z] = m;
                        }
                    }
                }
            }
            MiKind::YGivenX => {
                for x in 0..sz.x {
                    for z in 0..sz.z {
                        let m: f64 = (0..sz.y)
                            .map(|y| self.py[y] * v[(x * sz.y + y) * sz.z + z])
                            .sum();
                        for y in 0..sz.y {
                            r[(x * sz.y + y) * sz.z + z] = m;
                        }
                    }
                }
            }
        }
        r
    }

    fn value(&self, q: &[f64]) -> f64 {
        let sz = self.ch.sizes();
        let v = self.averaged(q);
        let r = self.reference(&v);
        let mut total = 0.0;
        for x in 0..sz.x {
            for y in 0..sz.y {
                let w = self.px[x] * self.py[y];
                if w == 0.0 {
                    continue;
                }
                for z in 0..sz.z {
                    let i = (x * sz.y + y) * sz.z + z;
                    if v[i] > 0.0 {
                        total += w * v[i] * (v[i] / r[i]).log2();
                    }
                }
            }
        }
        total.max(0.0)
    }

    /// `∂/∂q_s = Σ P(x)P(y) W(z|x,y,s) log₂(V(z|x,y) / reference)`.
    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let sz = self.ch.sizes();
        let v = self.averaged(q);
        let r = self.reference(&v);
        (0..sz.s)
            .map(|s| {
                let mut g = 0.0;
                for x in 0..sz.x {
                    for y in 0..sz.y {
                        let w = self.px[x] * self.py[y];
                        if w == 0.0 {
                            continue;
                        }
                        for (z, &wz) in self.ch.row(x, y, s).iter().enumerate() {
                            if wz == 0.0 {
                                continue;
                            }
                            let i = (x * sz.y + y) * sz.z + z;
                            if v[i] <= 0.0 {
                                return f64::NEG_INFINITY;
                            }
                            g += w * wz * (v[i] / r[i]).log2();
                        }
                    }
                }
                g
            })
            .collect()
    }
}

fn step(q: &[f64], d: &[f64], gamma: f64) -> Vec<f64> {
    q.iter()
        .zip(d)
        .map(|(a, b)| (a + gamma * b).max(0.0))
        .collect()
}

/// Golden-section search of a convex function on `[0, hi]`.
fn line_search(f: &dyn Fn(f64) -> f64, hi: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..LINE_SEARCH_STEPS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let mid = (a + b) / 2.0;
    // endpoints are common minimizers for vertex moves
    [0.0, mid, hi]
        .into_iter()
        .map(|g| (f(g), g))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, g)| g)
        .unwrap()
}

/// `inf_{P_S} I(·)` for fixed input distributions, within `tol`.
pub fn min_state_mi(
    ch: &Avmac,
    px: &Dist,
    py: &Dist,
    kind: MiKind,
    tol: f64,
) -> Result<MinResult, CapacityError> {
    let sz = ch.sizes();
    if !(tol > 0.0) {
        return Err(CapacityError::BadTolerance);
    }
    if px.len() != sz.x {
        return Err(ChannelError::SizeMismatch { expected: sz.x, found: px.len() }.into());
    }
    if py.len() != sz.y {
        return Err(ChannelError::SizeMismatch { expected: sz.y, found: py.len() }.into());
    }
    let obj = Objective {
        ch,
        px: px.values(),
        py: py.values(),
        kind,
    };
    let mut q = vec![1.0 / sz.s as f64; sz.s];
    let mut value = obj.value(&q);
    let mut gap = f64::INFINITY;
    for it in 0..MAX_ITERS {
        let g = obj.gradient(&q);
        let dot: f64 = g
            .iter()
            .zip(&q)
            .filter(|(_, &qs)| qs > 0.0)
            .map(|(a, b)| a * b)
            .sum();
        let (fw, &gmin) = g
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        gap = dot - gmin;
        if gap <= tol {
            return Ok(MinResult {
                value,
                argmin: q,
                gap: gap.max(0.0),
                iterations: it,
            });
        }
        let (away, gmax) = g
            .iter()
            .enumerate()
            .filter(|(s, _)| q[*s] > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(s, v)| (s, *v))
            .unwrap();
        let away_gain = gmax - dot;
        let towards = gap >= away_gain || q[away] >= 1.0;
        let (d, hi): (Vec<f64>, f64) = if towards {
            let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
            d[fw] += 1.0;
            (d, 1.0)
        } else {
            let mut d = q.clone();
            d[away] -= 1.0;
            (d, q[away] / (1.0 - q[away]))
        };
        let gamma = line_search(&|t| obj.value(&step(&q, &d, t)), hi);
        let mut next = step(&q, &d, gamma);
        if !towards && (gamma >= hi || hi * away_gain <= SUPPORT_EPS) {
            // drop step
            next[away] = 0.0;
        }
        next.iter_mut().filter(|v| **v < SUPPORT_EPS).for_each(|v| *v = 0.0);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let next_value = obj.value(&next);
        if next_value > value + SUPPORT_EPS {
            break;
        }
        q = next;
        value = next_value;
    }
    Err(CapacityError::NotConverged { best: value, gap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pentagon {
    pub r1_max: f64,
    pub r2_max: f64,
    pub rsum_max: f64,
    pub px: Vec<f64>,
    pub py: Vec<f64>,
    /// Minimizing state distributions for the three bounds.
    pub argmin_r1: Vec<f64>,
    pub argmin_r2: Vec<f64>,
    pub argmin_sum: Vec<f64>,
}

impl Pentagon {
    pub fn half_planes(&self) -> [HalfPlane; 3] {
        [
            HalfPlane::new(1.0, 0.0, self.r1_max),
            HalfPlane::new(0.0, 1.0, self.r2_max),
            HalfPlane::new(1.0, 1.0, self.rsum_max),
        ]
    }

    /// The region cut out by the bounds and the two axes.
    pub fn polygon(&self) -> Vec<Point> {
        let hi = self.r1_max.max(self.r2_max).max(self.rsum_max) + 1.0;
        intersect_half_planes(&self.half_planes(), 0.0, hi)
    }
}

pub fn pentagon(ch: &Avmac, px: &Dist, py: &Dist, tol: f64) -> Result<Pentagon, CapacityError> {
    let r1 = min_state_mi(ch, px, py, MiKind::XGivenY, tol)?;
    let r2 = min_state_mi(ch, px, py, MiKind::YGivenX, tol)?;
    let rs = min_state_mi(ch, px, py, MiKind::Joint, tol)?;
    Ok(Pentagon {
        r1_max: r1.value,
        r2_max: r2.value,
        rsum_max: rs.value,
        px: px.values().to_vec(),
        py: py.values().to_vec(),
        argmin_r1: r1.argmin,
        argmin_r2: r2.argmin,
        argmin_sum: rs.argmin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    /// Counterclockwise hull vertices starting at `(0, 0)`, in bits per use.
    pub vertices: Vec<Point>,
    pub grid_k: usize,
    pub tol: f64,
    /// Always set: the region is the hull over a finite input grid.
    pub inner_approximation: bool,
}

impl RateRegion {
    pub fn max_sum_rate(&self) -> f64 {
        self.vertices
            .iter()
            .map(|p| p.x + p.y)
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, r1: f64, r2: f64, slack: f64) -> bool {
        region_contains(self, r1, r2, slack)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub region: RateRegion,
    pub pentagons: Vec<Pentagon>,
}

/// Points of the simplex over `n` symbols with denominator `k`.
pub fn simplex_grid(n: usize, k: usize) -> Vec<Dist> {
    compositions(k, n)
        .into_iter()
        .map(|c| Dist::new(c.iter().map(|&v| v as f64 / k as f64).collect()).expect("grid point"))
        .collect()
}

/// Hull of the pentagons over all input pairs on the grid of denominator `grid_k`.
pub fn random_code_region(
    ch: &Avmac,
    grid_k: usize,
    tol: f64,
) -> Result<RegionReport, CapacityError> {
    if grid_k == 0 {
        return Err(CapacityError::BadGrid);
    }
    let sz = ch.sizes();
    let xs = simplex_grid(sz.x, grid_k);
    let ys = simplex_grid(sz.y, grid_k);
    let work: Vec<(&Dist, &Dist)> = xs
        .iter()
        .flat_map(|px| ys.iter().map(move |py| (px, py)))
        .collect();
    let pentagons = work
        .par_iter()
        .map(|(px, py)| pentagon(ch, px, py, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let mut points = vec![Point::new(0.0, 0.0)];
    for p in &pentagons {
        points.extend(p.polygon());
    }
    let mut vertices = convex_hull(&points);
    if vertices.iter().all(|v| v.x.abs() <= 1e-12 && v.y.abs() <= 1e-12) {
        vertices = vec![Point::new(0.0, 0.0)];
    }
    Ok(RegionReport {
        region: RateRegion {
            vertices,
            grid_k,
            tol,
            inner_approximation: true,
        },
        pentagons,
    })
}

/// Half-plane containment test against the region inflated by `slack`.
pub fn region_contains(region: &RateRegion, r1: f64, r2: f64, slack: f64) -> bool {
    polygon_contains(&region.vertices, Point::new(r1, r2), slack)
}

/// Hull vertices as `r1,r2` CSV rows.
pub fn region_csv(region: &RateRegion, fmt: &dyn Fn(f64) -> String) -> String {
    let mut out = String::from("r1,r2\n");
    for v in &region.vertices {
        out.push_str(&format!("{},{}\n", fmt(v.x), fmt(v.y)));
    }
    out
}
