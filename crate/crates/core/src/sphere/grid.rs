use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{chart_transition, Chart, ProjPoint};
use crate::error::{Error, Result};
use crate::par;

/// A pair of cell-centered square grids, one per chart.
///
/// Each chart carries `n_cells x n_cells` nodes at the centers of the cells
/// of `[-a, a]^2`, i.e. at `-a + (i + 1/2) h` with `h = 2a / n_cells`. The
/// outermost node ring of each chart is the chart's boundary layer; its
/// values are supplied by the other chart.
///
/// Equality tolerates a few ulps in `half_width`, so grids rebuilt from
/// printed coordinates compare equal to the originals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereGrid {
    half_width: f64,
    n_cells: usize,
}

impl PartialEq for SphereGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_cells == other.n_cells
            && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width.abs()
    }
}

/// Bilinear interpolation weights for the cell with lower-left node `base`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    pub base: usize,
    pub weights: [f64; 4],
}

/// Interpolation order for off-node evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    Linear,
    /// Tensor-product cubic Lagrange on a 4x4 stencil.
    Cubic,
}

impl SphereGrid {
    pub const DEFAULT_HALF_WIDTH: f64 = 1.25;
    const POU_MAX_DELTA: f64 = 0.15;

    pub fn new(half_width: f64, n_cells: usize) -> Result<Self> {
        if !half_width.is_finite() || half_width < 1.1 {
            return Err(Error::Config(format!(
                "half_width must be at least 1.1 (got {half_width})"
            )));
        }
        if n_cells < 8 {
            return Err(Error::Config(format!("n_cells must be at least 8 (got {n_cells})")));
        }
        let grid = SphereGrid { half_width, n_cells };
        let h = grid.h();
        // Ring nodes of one chart must interpolate from interior nodes of the other.
        let reach = 1.0 / (half_width - 0.5 * h);
        if reach >= grid.coord(n_cells - 2) {
            return Err(Error::Config(format!(
                "grid overlap annulus is empty for half_width {half_width} and n_cells {n_cells}"
            )));
        }
        Ok(grid)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Nodes per axis (equal to `n_cells`).
    pub fn n(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n_cells as f64
    }

    /// Nodes per chart.
    pub fn len(&self) -> usize {
        self.n_cells * self.n_cells
    }

    pub fn is_empty(&self) -> bool {
        self.n_cells == 0
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h()
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n_cells + ix
    }

    pub fn unindex(&self, k: usize) -> (usize, usize) {
        (k % self.n_cells, k / self.n_cells)
    }

    /// Chart coordinate of a node; `ix` runs along the real axis.
    pub fn node(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(self.coord(ix), self.coord(iy))
    }

    pub fn node_at(&self, k: usize) -> Complex64 {
        let (ix, iy) = self.unindex(k);
        self.node(ix, iy)
    }

    pub fn is_ring(&self, ix: usize, iy: usize) -> bool {
        let last = self.n_cells - 1;
        ix == 0 || iy == 0 || ix == last || iy == last
    }

    /// Indices of the boundary ring of one chart, in index order.
    pub fn ring_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| {
                let (ix, iy) = self.unindex(k);
                self.is_ring(ix, iy)
            })
            .collect()
    }

    /// Continuous node-index position of a chart coordinate.
    fn position(&self, z: Complex64) -> (f64, f64) {
        let h = self.h();
        ((z.re + self.half_width) / h - 0.5, (z.im + self.half_width) / h - 0.5)
    }

    /// Bilinear stencil for a chart coordinate, or `None` outside the node box.
    pub fn stencil(&self, z: Complex64) -> Option<Stencil> {
        let (sx, sy) = self.position(z);
        let top = (self.n_cells - 1) as f64;
        let slack = 1e-9;
        if !(sx >= -slack && sy >= -slack && sx <= top + slack && sy <= top + slack) {
            return None;
        }
        let ix = (sx.max(0.0).floor() as usize).min(self.n_cells - 2);
        let iy = (sy.max(0.0).floor() as usize).min(self.n_cells - 2);
        let tx = (sx - ix as f64).clamp(0.0, 1.0);
        let ty = (sy - iy as f64).clamp(0.0, 1.0);
        Some(Stencil {
            base: self.index(ix, iy),
            weights: [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty],
        })
    }

    /// True when `z` lies inside the chart's interpolation box.
    pub fn contains(&self, z: Complex64) -> bool {
        self.stencil(z).is_some()
    }

    /// Half-width of the transition band (in `log|z|`) of the mass partition
    /// of unity.
    pub fn pou_delta(&self) -> f64 {
        let inner = (self.half_width - 1.5 * self.h()).ln();
        (0.9 * inner).min(Self::POU_MAX_DELTA)
    }

    /// Partition-of-unity weight of a chart coordinate. The weights of the
    /// two chart representatives of one point sum to 1.
    pub fn pou_weight(&self, z: Complex64) -> f64 {
        let r = z.norm();
        if r == 0.0 {
            return 1.0;
        }
        let t = r.ln();
        let d = self.pou_delta();
        if t <= -d {
            1.0
        } else if t >= d {
            0.0
        } else {
            0.5 * (1.0 - (std::f64::consts::FRAC_PI_2 * t / d).sin())
        }
    }

    /// Ownership rule for deduplicated reductions: chart 0 owns `|z| <= 1`,
    /// chart 1 owns `|w| < 1`.
    pub fn owns(&self, chart: Chart, z: Complex64) -> bool {
        let r = z.norm_sqr();
        match chart {
            Chart::Zero => r <= 1.0,
            Chart::One => r < 1.0,
        }
    }

    /// The coordinate of the same sphere point in the other chart.
    pub fn other_coord(z: Complex64) -> Option<Complex64> {
        if z.norm_sqr() == 0.0 {
            None
        } else {
            Some(1.0 / z)
        }
    }
}

/// A real function sampled at every node of both charts.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: SphereGrid,
    values: [Vec<f64>; 2],
}

fn lagrange4(s: f64) -> [f64; 4] {
    [
        -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
        s * (s - 2.0) * (s - 3.0) / 2.0,
        -s * (s - 1.0) * (s - 3.0) / 2.0,
        s * (s - 1.0) * (s - 2.0) / 6.0,
    ]
}

/// Weighted sum that treats infinite values as absorbing.
fn weighted_sum(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut acc = 0.0;
    let mut pos = false;
    let mut neg = false;
    for (w, v) in pairs {
        if w == 0.0 {
            continue;
        }
        if v == f64::INFINITY {
            pos = true;
        } else if v == f64::NEG_INFINITY {
            neg = true;
        } else {
            acc += w * v;
        }
    }
    match (pos, neg) {
        (true, true) => f64::NAN,
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => acc,
    }
}

impl GridField {
    pub fn new(grid: &SphereGrid, values_0: Vec<f64>, values_1: Vec<f64>) -> Result<Self> {
        if values_0.len() != grid.len() || values_1.len() != grid.len() {
            return Err(Error::Config(format!(
                "field arrays have lengths {} and {}, grid needs {}",
                values_0.len(),
                values_1.len(),
                grid.len()
            )));
        }
        Ok(GridField { grid: grid.clone(), values: [values_0, values_1] })
    }

    pub fn constant(grid: &SphereGrid, c: f64) -> Self {
        GridField { grid: grid.clone(), values: [vec![c; grid.len()], vec![c; grid.len()]] }
    }

    /// Samples `f(chart, coordinate)` at every node.
    pub fn from_fn<F>(grid: &SphereGrid, parallel: bool, f: F) -> Self
    where
        F: Fn(Chart, Complex64) -> f64 + Sync + Send,
    {
        let values = Chart::BOTH.map(|chart| {
            par::map_range(grid.len(), parallel, |k| f(chart, grid.node_at(k)))
        });
        GridField { grid: grid.clone(), values }
    }

    /// Samples a function of sphere points at every node.
    pub fn from_point_fn<F>(grid: &SphereGrid, parallel: bool, f: F) -> Self
    where
        F: Fn(&ProjPoint) -> f64 + Sync + Send,
    {
        Self::from_fn(grid, parallel, |chart, z| f(&ProjPoint::from_chart(chart, z)))
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn values(&self, chart: Chart) -> &[f64] {
        &self.values[chart.index()]
    }

    pub fn values_mut(&mut self, chart: Chart) -> &mut [f64] {
        &mut self.values[chart.index()]
    }

    pub fn get(&self, chart: Chart, ix: usize, iy: usize) -> f64 {
        self.values[chart.index()][self.grid.index(ix, iy)]
    }

    pub fn set(&mut self, chart: Chart, ix: usize, iy: usize, v: f64) {
        let k = self.grid.index(ix, iy);
        self.values[chart.index()][k] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            grid: self.grid.clone(),
            values: [
                self.values[0].iter().map(|&v| f(v)).collect(),
                self.values[1].iter().map(|&v| f(v)).collect(),
            ],
        }
    }

    /// Combines two fields on the same grid nodewise.
    pub fn zip_map(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> GridField {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = [0, 1].map(|c| {
            self.values[c].iter().zip(&other.values[c]).map(|(&a, &b)| f(a, b)).collect()
        });
        GridField { grid: self.grid.clone(), values }
    }

    /// Largest nodewise `|a - b|` over both charts; infinite values that agree
    /// contribute nothing.
    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let mut m = 0.0f64;
        for c in 0..2 {
            for (&a, &b) in self.values[c].iter().zip(&other.values[c]) {
                if a == b {
                    continue;
                }
                m = m.max((a - b).abs());
            }
        }
        m
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().flatten().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Bilinear interpolation in one chart; `None` outside its node box.
    pub fn interpolate(&self, chart: Chart, z: Complex64) -> Option<f64> {
        let s = self.grid.stencil(z)?;
        Some(self.apply_stencil(chart, &s))
    }

    pub fn apply_stencil(&self, chart: Chart, s: &Stencil) -> f64 {
        let n = self.grid.n();
        let v = &self.values[chart.index()];
        let idx = [s.base, s.base + 1, s.base + n, s.base + n + 1];
        weighted_sum(idx.iter().zip(&s.weights).map(|(&k, &w)| (w, v[k])))
    }

    /// Cubic interpolation in one chart; falls back to bilinear when the
    /// 4x4 stencil holds non-finite values.
    pub fn interpolate_cubic(&self, chart: Chart, z: Complex64) -> Option<f64> {
        let n = self.grid.n();
        if n < 4 || !self.grid.contains(z) {
            return None;
        }
        let (sx, sy) = self.grid.position(z);
        let base = |s: f64| ((s.floor() as isize - 1).clamp(0, n as isize - 4)) as usize;
        let (bx, by) = (base(sx), base(sy));
        let wx = lagrange4(sx - bx as f64);
        let wy = lagrange4(sy - by as f64);
        let v = &self.values[chart.index()];
        let mut acc = 0.0;
        for (j, wyj) in wy.iter().enumerate() {
            for (i, wxi) in wx.iter().enumerate() {
                let x = v[self.grid.index(bx + i, by + j)];
                if !x.is_finite() {
                    return self.interpolate(chart, z);
                }
                acc += wxi * wyj * x;
            }
        }
        Some(acc)
    }

    pub fn interpolate_with(&self, chart: Chart, z: Complex64, interp: Interp) -> Option<f64> {
        match interp {
            Interp::Linear => self.interpolate(chart, z),
            Interp::Cubic => self.interpolate_cubic(chart, z),
        }
    }

    /// Evaluates at a sphere point, using `preferred` when the point lies in
    /// that chart's node box and the other chart otherwise.
    pub fn eval_preferring(&self, p: &ProjPoint, preferred: Chart, interp: Interp) -> f64 {
        if let Some(z) = p.coord(preferred) {
            if let Some(v) = self.interpolate_with(preferred, z, interp) {
                return v;
            }
        }
        let other = preferred.other();
        let z = p.coord(other).expect("a point is excluded from at most one chart");
        self.interpolate_with(other, z, interp)
            .expect("every point lies in the box of the chart where |coordinate| <= 1")
    }

    /// Evaluates at a sphere point in the chart chosen by [`chart_transition`].
    pub fn eval(&self, p: &ProjPoint, interp: Interp) -> f64 {
        let (chart, _) = chart_transition(p);
        self.eval_preferring(p, chart, interp)
    }

    /// Five-point Laplacian at an interior node.
    pub fn laplacian(&self, chart: Chart, ix: usize, iy: usize) -> f64 {
        debug_assert!(!self.grid.is_ring(ix, iy));
        let h = self.grid.h();
        let v = &self.values[chart.index()];
        let k = self.grid.index(ix, iy);
        let n = self.grid.n();
        (v[k - 1] + v[k + 1] + v[k - n] + v[k + n] - 4.0 * v[k]) / (h * h)
    }

    /// Five-point Laplacian at every interior node; ring nodes hold NaN.
    pub fn laplacian_field(&self, parallel: bool) -> GridField {
        let g = &self.grid;
        let values = Chart::BOTH.map(|chart| {
            par::map_range(g.len(), parallel, |k| {
                let (ix, iy) = g.unindex(k);
                if g.is_ring(ix, iy) {
                    f64::NAN
                } else {
                    self.laplacian(chart, ix, iy)
                }
            })
        });
        GridField { grid: g.clone(), values }
    }

    /// Partition-of-unity weighted integral `sum(value * h^2)` over the
    /// sphere. NaN entries at weight zero are ignored.
    pub fn integrate(&self) -> f64 {
        let g = &self.grid;
        let h2 = g.h() * g.h();
        let mut total = 0.0;
        for chart in Chart::BOTH {
            let v = &self.values[chart.index()];
            for (k, &x) in v.iter().enumerate() {
                let w = g.pou_weight(g.node_at(k));
                if w != 0.0 {
                    total += w * x * h2;
                }
            }
        }
        total
    }

    /// Largest `|value_c(z) - interp_other(1/z)|` over interior overlap nodes
    /// of both charts where both are finite.
    pub fn seam_discrepancy(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        for chart in Chart::BOTH {
            for k in 0..g.len() {
                let (ix, iy) = g.unindex(k);
                if g.is_ring(ix, iy) {
                    continue;
                }
                let z = g.node(ix, iy);
                let Some(w) = SphereGrid::other_coord(z) else { continue };
                let Some(o) = self.interpolate(chart.other(), w) else { continue };
                let own = self.values[chart.index()][k];
                if own.is_finite() && o.is_finite() {
                    worst = worst.max((own - o).abs());
                }
            }
        }
        worst
    }

    /// Reconciles the charts on the overlap by the pointwise minimum of a
    /// node's own value and the other chart's interpolated value. Both charts
    /// read the input field, so the result does not depend on chart order.
    /// Returns the new field and the discrepancy measured before syncing.
    pub fn sync_seam(&self) -> Result<(GridField, f64)> {
        let g = &self.grid;
        let before = self.seam_discrepancy();
        let mut out = self.clone();
        let mut touched = 0usize;
        for chart in Chart::BOTH {
            for k in 0..g.len() {
                let z = g.node_at(k);
                let Some(w) = SphereGrid::other_coord(z) else { continue };
                let Some(o) = self.interpolate(chart.other(), w) else { continue };
                touched += 1;
                let own = self.values[chart.index()][k];
                if o < own {
                    out.values[chart.index()][k] = o;
                }
            }
        }
        if touched == 0 {
            return Err(Error::Config("grid overlap annulus is empty".into()));
        }
        Ok((out, before))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{fs_potential, omega_density};

    fn grid(n: usize) -> SphereGrid {
        SphereGrid::new(1.25, n).unwrap()
    }

    #[test]
    fn rejects_narrow_or_coarse_grids() {
        assert!(SphereGrid::new(1.0, 101).is_err());
        assert!(SphereGrid::new(1.25, 4).is_err());
        assert!(SphereGrid::new(1.1, 12).is_err());
        assert!(SphereGrid::new(1.1, 101).is_ok());
    }

    #[test]
    fn odd_grids_put_a_node_at_the_origin() {
        let g = grid(401);
        assert_eq!(g.node(200, 200), Complex64::new(0.0, 0.0));
        assert!((g.h() - 2.5 / 401.0).abs() < 1e-15);
    }

    #[test]
    fn pou_weights_partition_unity() {
        let g = grid(201);
        for k in 0..200 {
            let z = Complex64::from_polar(0.8 + 0.4 * k as f64 / 199.0, 0.3 * k as f64);
            let s = g.pou_weight(z) + g.pou_weight(1.0 / z);
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert_eq!(g.pou_weight(Complex64::new(1.2, 0.0)), 0.0);
    }

    #[test]
    fn fs_mass_is_two_pi() {
        let g = grid(401);
        let rho = GridField::from_fn(&g, false, omega_density);
        let m = rho.integrate();
        assert!((m - std::f64::consts::TAU).abs() < 0.01 * std::f64::consts::TAU, "{m}");
    }

    #[test]
    fn bilinear_reproduces_affine_functions() {
        let g = grid(41);
        let f = GridField::from_fn(&g, false, |_, z| 2.0 * z.re - 0.5 * z.im + 1.0);
        let z = Complex64::new(0.3137, -0.771);
        let v = f.interpolate(Chart::Zero, z).unwrap();
        assert!((v - (2.0 * z.re - 0.5 * z.im + 1.0)).abs() < 1e-12);
        assert!(f.interpolate(Chart::Zero, Complex64::new(1.3, 0.0)).is_none());
    }

    #[test]
    fn cubic_reproduces_cubics() {
        let g = grid(41);
        let p = |z: Complex64| z.re.powi(3) - 2.0 * z.re * z.im * z.im + z.im;
        let f = GridField::from_fn(&g, false, |_, z| p(z));
        for z in [Complex64::new(0.3137, -0.771), Complex64::new(-1.2, 1.19)] {
            let v = f.interpolate_cubic(Chart::One, z).unwrap();
            assert!((v - p(z)).abs() < 1e-11, "{z}");
        }
    }

    #[test]
    fn infinite_values_absorb() {
        let g = grid(21);
        let mut f = GridField::constant(&g, 1.0);
        f.set(Chart::Zero, 10, 10, f64::INFINITY);
        assert_eq!(f.interpolate(Chart::Zero, g.node(10, 10) + 0.1 * g.h()), Some(f64::INFINITY));
        assert_eq!(f.interpolate(Chart::Zero, g.node(12, 12)), Some(1.0));
    }

    #[test]
    fn sync_constant_is_noop() {
        let g = grid(41);
        let f = GridField::constant(&g, 0.0);
        let (s, d) = f.sync_seam().unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(s, f);
    }

    #[test]
    fn sync_copies_from_chart_zero_when_other_is_infinite() {
        let g = grid(41);
        let mut f = GridField::from_fn(&g, false, |_, z| z.norm());
        f.values_mut(Chart::One).iter_mut().for_each(|v| *v = f64::INFINITY);
        let (s, _) = f.sync_seam().unwrap();
        let w = g.node(34, 20);
        let expect = f.interpolate(Chart::Zero, 1.0 / w).unwrap();
        assert_eq!(s.get(Chart::One, 34, 20), expect);
        // Chart 0 itself is untouched.
        assert_eq!(s.values(Chart::Zero), f.values(Chart::Zero));
        // Nodes of chart 1 near infinity stay infinite.
        assert_eq!(s.get(Chart::One, 20, 20), f64::INFINITY);
    }

    #[test]
    fn fs_potential_seam_discrepancy_is_second_order() {
        // Chart 1 stores phi(1/w), the same global function as chart 0.
        let d = |n: usize| {
            let g = grid(n);
            let f = GridField::from_fn(&g, false, |c, z| match c {
                Chart::Zero => fs_potential(c, z),
                Chart::One => fs_potential(c, 1.0 / z),
            });
            (f.seam_discrepancy(), g.h())
        };
        let (d1, h1) = d(101);
        let (d2, h2) = d(201);
        assert!(d1 <= 0.2 * h1 * h1 + 1e-12, "{d1}");
        assert!(d2 <= 0.2 * h2 * h2 + 1e-12, "{d2}");
        assert!(d2 < d1 / 3.0);
    }
}
