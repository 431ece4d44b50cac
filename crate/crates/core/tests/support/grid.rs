//! Brute-force grid search for `u = 1` symmetrizers of binary-state channels.
//!
//! Each table row is a single number `q = U(0 | row)`, restricted to
//! multiples of `1/steps`. Every residual involves exactly two rows, so the
//! search tabulates pairwise worst residuals and runs a branch and bound
//! over row assignments.

use avmac::Avmac;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// Rows are input pairs `(x', y')`.
    Diag,
    /// Rows are first-sender letters; the second input is held fixed.
    RectX,
    /// Rows are second-sender letters; the first input is held fixed.
    RectY,
}

/// `Σ_s W(z|x,y,s) U(s|row)` with `U(0|row) = q`.
fn mix(ch: &Avmac, x: usize, y: usize, z: usize, q: f64) -> f64 {
    q * ch.w(x, y, 0, z) + (1.0 - q) * ch.w(x, y, 1, z)
}

/// Smallest worst-case residual over grid tables.
pub fn grid_min_residual(ch: &Avmac, mode: GridMode, steps: usize) -> f64 {
    let sz = ch.sizes();
    assert_eq!(sz.s, 2, "binary state alphabets only");
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    let rows = match mode {
        GridMode::Diag => sz.x * sz.y,
        GridMode::RectX => sz.x,
        GridMode::RectY => sz.y,
    };
    // table[r][r'][a][b]: worst residual between rows r < r' at q_r = grid[a], q_r' = grid[b]
    let g = grid.len();
    let mut table = vec![vec![vec![0.0f64; g * g]; rows]; rows];
    for r in 0..rows {
        for r2 in r + 1..rows {
            for a in 0..g {
                for b in 0..g {
                    let (qa, qb) = (grid[a], grid[b]);
                    let mut worst: f64 = 0.0;
                    for z in 0..sz.z {
                        let cases: Vec<f64> = match mode {
                            GridMode::Diag => {
                                let (x1, y1) = (r / sz.y, r % sz.y);
                                let (x2, y2) = (r2 / sz.y, r2 % sz.y);
                                vec![mix(ch, x1, y1, z, qb) - mix(ch, x2, y2, z, qa)]
                            }
                            GridMode::RectX => (0..sz.y)
                                .map(|y| mix(ch, r, y, z, qb) - mix(ch, r2, y, z, qa))
                                .collect(),
                            GridMode::RectY => (0..sz.x)
                                .map(|x| mix(ch, x, r, z, qb) - mix(ch, x, r2, z, qa))
                                .collect(),
                        };
                        for c in cases {
                            worst = worst.max(c.abs());
                        }
                    }
                    table[r][r2][a * g + b] = worst;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    let mut assign = vec![0usize; rows];
    search(&table, g, 0, 0.0, &mut assign, &mut best);
    best
}

fn search(table: &[Vec<Vec<f64>>], g: usize, k: usize, cur: f64, assign: &mut [usize], best: &mut f64) {
    if k == assign.len() {
        *best = best.min(cur);
        return;
    }
    for v in 0..g {
        let mut worst = cur;
        for r in 0..k {
            worst = worst.max(table[r][k][assign[r] * g + v]);
            if worst >= *best {
                break;
            }
        }
        if worst < *best {
            assign[k] = v;
            search(table, g, k + 1, worst, assign, best);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// A grid table meets the tolerance.
    Feasible,
    /// Even the Lipschitz-inflated grid optimum exceeds the tolerance.
    Infeasible,
    /// Grid optimum within the discretization slack at the finest step tried.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridVerdict {
    pub verdict: Verdict,
    pub steps: usize,
    pub grid_residual: f64,
    /// `lp ≤ grid + tol` and `grid ≤ lp + slack + tol`.
    pub bracket: bool,
}

impl GridVerdict {
    pub fn consistent_with(&self, lp_feasible: bool) -> bool {
        self.bracket
            && match self.verdict {
                Verdict::Feasible => lp_feasible,
                Verdict::Infeasible => !lp_feasible,
                Verdict::Inconclusive => true,
            }
    }
}

/// Residual shift from rounding each of two rows to the nearest grid point.
pub fn lipschitz_slack(steps: usize) -> f64 {
    1.0 / steps as f64
}

/// Grid decision, refining the step by 4 up to `1/1024` while inconclusive.
pub fn grid_verdict(ch: &Avmac, mode: GridMode, steps: usize, lp_residual: f64, tol: f64) -> GridVerdict {
    let mut steps = steps;
    loop {
        let g = grid_min_residual(ch, mode, steps);
        let slack = lipschitz_slack(steps);
        let bracket = lp_residual <= g + tol && g <= lp_residual + slack + tol;
        let verdict = if g <= tol {
            Verdict::Feasible
        } else if g > slack + tol {
            Verdict::Infeasible
        } else {
            Verdict::Inconclusive
        };
        if verdict != Verdict::Inconclusive || steps >= 1024 || (mode == GridMode::Diag && steps >= 256) {
            return GridVerdict {
                verdict,
                steps,
                grid_residual: g,
                bracket,
            };
        }
        steps *= 4;
    }
}
