//! Dense simplex method for `max c.y  s.t.  A y <= b` with free `y` and
//! `b >= 0`, so `y = 0` is a feasible start and no phase one is needed.
//!
//! The tableau is kept in exchange (Tucker) form: every basic variable is an
//! affine function of the `d` nonbasic ones, and a pivot swaps one basic and
//! one nonbasic variable in `O(rows * d)`. Bland's rule prevents cycling.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct LpSolution {
    pub y: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Variable ids: `0..d` are the free `y_j`, `d + i` is the slack of row `i`.
struct Tableau {
    d: usize,
    /// Row `r`: `basic[r] = t[r][0] + sum_j t[r][j + 1] * nonbasic[j]`.
    t: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, s: usize) {
        let prs = self.t[r][s + 1];
        let d = self.d;
        let mut row = std::mem::take(&mut self.t[r]);
        // Solve row r for nonbasic s.
        let inv = 1.0 / prs;
        for (j, x) in row.iter_mut().enumerate() {
            if j == s + 1 {
                *x = inv;
            } else {
                *x = -*x * inv;
            }
        }
        let update = |other: &mut Vec<f64>| {
            let f = other[s + 1];
            if f == 0.0 {
                return;
            }
            for j in 0..=d {
                if j == s + 1 {
                    other[j] = f * row[j];
                } else {
                    other[j] += f * row[j];
                }
            }
        };
        for (i, other) in self.t.iter_mut().enumerate() {
            if i != r {
                update(other);
            }
        }
        update(&mut self.obj);
        self.t[r] = row;
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[s]);
    }
}

/// Solves the LP. `a` is row-major with `d` columns.
pub(crate) fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64], max_pivots: usize) -> Result<LpSolution> {
    let d = c.len();
    if a.len() != b.len() || a.iter().any(|r| r.len() != d) {
        return Err(Error::LinearProgram("inconsistent LP dimensions".into()));
    }
    if b.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::LinearProgram("right-hand side must be non-negative".into()));
    }
    let scale = c.iter().chain(a.iter().flatten()).fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let eps = 1e-11 * scale;
    let t: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| std::iter::once(bi).chain(row.iter().map(|x| -x)).collect())
        .collect();
    let mut tab = Tableau {
        d,
        t,
        obj: std::iter::once(0.0).chain(c.iter().copied()).collect(),
        basic: (0..a.len()).map(|i| d + i).collect(),
        nonbasic: (0..d).collect(),
    };
    let mut pivots = 0usize;
    loop {
        // Entering variable by Bland's rule (smallest id that improves).
        let mut enter: Option<(usize, f64)> = None;
        for s in 0..d {
            let rc = tab.obj[s + 1];
            let id = tab.nonbasic[s];
            let dir = if id < d {
                if rc.abs() > eps {
                    rc.signum()
                } else {
                    continue;
                }
            } else if rc > eps {
                1.0
            } else {
                continue;
            };
            if enter.is_none_or(|(e, _)| id < tab.nonbasic[e]) {
                enter = Some((s, dir));
            }
        }
        let Some((s, dir)) = enter else { break };

        let mut leave: Option<(usize, f64)> = None;
        for (r, row) in tab.t.iter().enumerate() {
            if tab.basic[r] < d {
                continue;
            }
            let slope = row[s + 1] * dir;
            if slope < -eps {
                let ratio = row[0].max(0.0) / -slope;
                let better = match leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - 1e-15 * best.abs().max(1.0)
                            || (ratio <= best + 1e-15 * best.abs().max(1.0) && tab.basic[r] < tab.basic[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::Unbounded("linear program is unbounded".into()));
        };
        tab.pivot(r, s);
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::LinearProgram(format!("no convergence after {max_pivots} pivots")));
        }
    }
    let mut y = vec![0.0; d];
    for (r, &id) in tab.basic.iter().enumerate() {
        if id < d {
            y[id] = tab.t[r][0];
        }
    }
    Ok(LpSolution { objective: tab.obj[0], y, pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, -x <= 0, -y <= 0.
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let s = maximize(&[3.0, 5.0], &a, &[4.0, 12.0, 18.0, 0.0, 0.0], 100).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.y[0] - 2.0).abs() < 1e-12 && (s.y[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn free_variables_go_negative() {
        // max -x s.t. -x <= 3 (x >= -3).
        let s = maximize(&[-1.0], &[vec![-1.0]], &[3.0], 10).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.y[0] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn polygon_disk() {
        // Maximize x over the regular m-gon circumscribing the unit disk.
        let m = 64;
        let a: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / m as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let s = maximize(&[1.0, 0.0], &a, &vec![1.0; m], 1000).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        let s = maximize(&[1.0, 1.0], &a, &vec![1.0; m], 1000).unwrap();
        let expect = 2f64.sqrt();
        assert!(s.objective >= expect - 1e-12 && s.objective <= expect / (std::f64::consts::PI / m as f64).cos() + 1e-12);
    }

    #[test]
    fn unbounded_and_degenerate() {
        assert!(matches!(maximize(&[1.0, 0.0], &[vec![0.0, 1.0]], &[1.0], 10), Err(Error::Unbounded(_))));
        // Many redundant constraints through the optimum.
        let a = vec![vec![1.0, 1.0]; 6].into_iter().chain([vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]]).collect::<Vec<_>>();
        let b = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
        let s = maximize(&[1.0, 1.0], &a, &b, 100).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }
}
