//! Red-black storage for the obstacle iteration.
//!
//! Each chart's nodes are split by color `(ix + iy) % 2` into two arrays of
//! `n` rows with stride `m = (n + 1) / 2`; node `(ix, iy)` lives at row `iy`,
//! column `ix / 2` of its color. A color pass only reads the other color, so
//! rows can be updated concurrently without races.

use crate::par;
use crate::sphere::{Chart, GridField, SphereGrid};

#[derive(Clone, Copy, Debug)]
struct Loc {
    color: usize,
    off: usize,
}

#[derive(Clone, Debug)]
struct RingLink {
    target: Loc,
    src: [Loc; 4],
    w: [f64; 4],
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct SweepStats {
    pub max_update: f64,
    /// Largest `old - new` (positive when a node decreased).
    pub max_decrease: f64,
}

impl SweepStats {
    fn merge(self, o: SweepStats) -> SweepStats {
        SweepStats {
            max_update: self.max_update.max(o.max_update),
            max_decrease: self.max_decrease.max(o.max_decrease),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Lattice {
    grid: SphereGrid,
    n: usize,
    m: usize,
    /// `[chart][color]`
    v: [[Vec<f64>; 2]; 2],
    obs: [[Vec<f64>; 2]; 2],
    rhs: [[Vec<f64>; 2]; 2],
    ring: [Vec<RingLink>; 2],
}

fn split(grid: &SphereGrid, vals: &[f64], fill: f64) -> [Vec<f64>; 2] {
    let n = grid.n();
    let m = n.div_ceil(2);
    let mut out = [vec![fill; n * m], vec![fill; n * m]];
    for iy in 0..n {
        for ix in 0..n {
            out[(ix + iy) & 1][iy * m + (ix >> 1)] = vals[grid.index(ix, iy)];
        }
    }
    out
}

impl Lattice {
    /// `obstacle` is `+inf` away from `K`; `density` is sampled at nodes.
    pub fn new(grid: &SphereGrid, start: f64, obstacle: &GridField, density: &GridField) -> Self {
        let n = grid.n();
        let m = n.div_ceil(2);
        let q = 0.25 * grid.h() * grid.h();
        let v = [0, 1].map(|_| [vec![start; n * m], vec![start; n * m]]);
        let obs = Chart::BOTH.map(|c| split(grid, obstacle.values(c), f64::INFINITY));
        let rhs = Chart::BOTH.map(|c| {
            let scaled: Vec<f64> = density.values(c).iter().map(|r| q * r).collect();
            split(grid, &scaled, 0.0)
        });
        let loc = |ix: usize, iy: usize| Loc { color: (ix + iy) & 1, off: iy * m + (ix >> 1) };
        let ring = Chart::BOTH.map(|_| {
            grid.ring_indices()
                .into_iter()
                .map(|k| {
                    let (ix, iy) = grid.unindex(k);
                    let w = 1.0 / grid.node(ix, iy);
                    let s = grid.stencil(w).expect("ring nodes map into the other chart's box");
                    let (bx, by) = grid.unindex(s.base);
                    RingLink {
                        target: loc(ix, iy),
                        src: [loc(bx, by), loc(bx + 1, by), loc(bx, by + 1), loc(bx + 1, by + 1)],
                        w: s.weights,
                    }
                })
                .collect()
        });
        Lattice { grid: grid.clone(), n, m, v, obs, rhs, ring }
    }

    pub fn to_field(&self) -> GridField {
        let g = &self.grid;
        let vals = [0, 1].map(|c| {
            (0..g.len())
                .map(|k| {
                    let (ix, iy) = g.unindex(k);
                    self.v[c][(ix + iy) & 1][iy * self.m + (ix >> 1)]
                })
                .collect::<Vec<f64>>()
        });
        let [a, b] = vals;
        GridField::new(g, a, b).expect("lattice and grid sizes agree")
    }

    /// One red-black sweep over both charts. `relax = 1` is Gauss-Seidel;
    /// larger values over-relax (projected SOR).
    pub fn sweep(&mut self, relax: f64, parallel: bool) -> SweepStats {
        let mut stats = SweepStats::default();
        for c in 0..2 {
            for color in 0..2 {
                stats = stats.merge(self.color_pass(c, color, relax, parallel));
            }
        }
        stats
    }

    fn color_pass(&mut self, c: usize, color: usize, relax: f64, parallel: bool) -> SweepStats {
        let (n, m) = (self.n, self.m);
        let [a, b] = &mut self.v[c];
        let (target, other) = if color == 0 { (a, &*b) } else { (b, &*a) };
        let obs = &self.obs[c][color];
        let rhs = &self.rhs[c][color];
        let rows = par::map_rows_mut(target, m, parallel, |iy, row| {
            if iy == 0 || iy == n - 1 {
                return SweepStats::default();
            }
            let s = (color + iy) & 1;
            let up = &other[(iy + 1) * m..(iy + 2) * m];
            let down = &other[(iy - 1) * m..iy * m];
            let mid = &other[iy * m..(iy + 1) * m];
            let ob = &obs[iy * m..(iy + 1) * m];
            let rh = &rhs[iy * m..(iy + 1) * m];
            let k0 = if s == 0 { 1 } else { 0 };
            let k1 = (n - 2 - s) / 2;
            let mut st = SweepStats::default();
            for k in k0..=k1 {
                let old = row[k];
                let gs = 0.25 * (mid[k + s - 1] + mid[k + s] + up[k] + down[k]) + rh[k];
                let new = if relax == 1.0 {
                    gs.min(ob[k])
                } else {
                    (old + relax * (gs - old)).min(ob[k])
                };
                row[k] = new;
                let d = new - old;
                st.max_update = st.max_update.max(d.abs());
                st.max_decrease = st.max_decrease.max(-d);
            }
            st
        });
        rows.into_iter().fold(SweepStats::default(), SweepStats::merge)
    }

    /// Copies interpolated values of the other chart onto each ring. Returns
    /// the largest change.
    pub fn transfer(&mut self) -> SweepStats {
        let mut st = SweepStats::default();
        for c in 0..2 {
            let o = 1 - c;
            for link in &self.ring[c] {
                let mut acc = 0.0;
                for (s, w) in link.src.iter().zip(&link.w) {
                    acc += w * self.v[o][s.color][s.off];
                }
                let slot = &mut self.v[c][link.target.color][link.target.off];
                let d = acc - *slot;
                st.max_update = st.max_update.max(d.abs());
                st.max_decrease = st.max_decrease.max(-d);
                *slot = acc;
            }
        }
        st
    }

    /// Calls `f(chart, color, offset, residual)` at each interior node, where
    /// `residual = avg4 + h^2 rho / 4 - v`.
    fn for_each_residual(&self, mut f: impl FnMut(usize, usize, usize, f64)) {
        let (n, m) = (self.n, self.m);
        for c in 0..2 {
            for color in 0..2 {
                let me = &self.v[c][color];
                let other = &self.v[c][1 - color];
                for iy in 1..n - 1 {
                    let s = (color + iy) & 1;
                    let k0 = if s == 0 { 1 } else { 0 };
                    for k in k0..=(n - 2 - s) / 2 {
                        let off = iy * m + k;
                        let avg = 0.25
                            * (other[off + s - 1] + other[off + s] + other[off + m] + other[off - m]);
                        f(c, color, off, avg + self.rhs[c][color][off] - me[off]);
                    }
                }
            }
        }
    }

    /// Smallest blend weight `theta` such that `(1 - theta) v + theta * c`
    /// is a subsolution, given that the constant `c` is one and `v` already
    /// satisfies the obstacle and ring constraints.
    pub fn subsolution_theta(&self) -> f64 {
        let mut theta = 0.0f64;
        self.for_each_residual(|c, color, off, r| {
            if r < -1e-14 {
                let rc = self.rhs[c][color][off];
                theta = theta.max(-r / (rc - r));
            }
        });
        if theta == 0.0 {
            0.0
        } else {
            (1.5 * theta + 1e-10).min(1.0)
        }
    }

    pub fn blend(&mut self, theta: f64, c0: f64) {
        for chart in self.v.iter_mut() {
            for arr in chart.iter_mut() {
                for x in arr.iter_mut() {
                    *x = (1.0 - theta) * *x + theta * c0;
                }
            }
        }
    }

    /// Smallest residual `avg4 + h^2 rho / 4 - v` over interior nodes.
    pub fn min_residual(&self) -> f64 {
        let mut r = f64::INFINITY;
        self.for_each_residual(|_, _, _, x| r = r.min(x));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_and_join_round_trip() {
        for n in [21, 22] {
            let g = SphereGrid::new(1.25, n).unwrap();
            let f = GridField::from_fn(&g, false, |c, z| z.re * 3.0 + z.im + c.index() as f64);
            let lat = Lattice {
                v: Chart::BOTH.map(|c| split(&g, f.values(c), f64::NAN)),
                ..Lattice::new(&g, 0.0, &GridField::constant(&g, f64::INFINITY), &GridField::constant(&g, 0.0))
            };
            assert_eq!(lat.to_field(), f);
        }
    }

    #[test]
    fn sequential_and_parallel_sweeps_agree() {
        let g = SphereGrid::new(1.25, 41).unwrap();
        let rho = GridField::from_fn(&g, false, crate::sphere::omega_density);
        let obs = GridField::from_fn(&g, false, |_, z| {
            if (z.norm() - 1.0).abs() <= 0.5 * g.h() { 0.0 } else { f64::INFINITY }
        });
        let mut a = Lattice::new(&g, 0.0, &obs, &rho);
        let mut b = a.clone();
        for _ in 0..20 {
            let sa = a.sweep(1.7, false);
            let sb = b.sweep(1.7, true);
            assert_eq!(sa, sb);
            assert_eq!(a.transfer(), b.transfer());
        }
        assert_eq!(a.to_field(), b.to_field());
    }

    #[test]
    fn constant_start_is_a_subsolution() {
        let g = SphereGrid::new(1.25, 31).unwrap();
        let rho = GridField::from_fn(&g, false, crate::sphere::omega_density);
        let lat = Lattice::new(&g, -0.3, &GridField::constant(&g, f64::INFINITY), &rho);
        assert!(lat.min_residual() > 0.0);
        assert_eq!(lat.subsolution_theta(), 0.0);
    }
}
