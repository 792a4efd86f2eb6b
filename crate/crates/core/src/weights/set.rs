use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sphere::{chart_transition, Chart, ProjPoint, SphereGrid};

/// Produces `m` sample points of a set as chart-0 coordinates.
pub type Sampler = Arc<dyn Fn(usize) -> Vec<Complex64> + Send + Sync>;

type RegionFn = Arc<dyn Fn(Chart, Complex64) -> bool + Send + Sync>;
type DistFn = Arc<dyn Fn(Chart, Complex64) -> f64 + Send + Sync>;

/// How a set is rasterized.
#[derive(Clone)]
pub enum Locus {
    /// A set with interior: a node belongs to the mask when it belongs to the set.
    Region(RegionFn),
    /// A curve or point set: a node belongs to the mask when its distance
    /// (in its chart's coordinate) to the set is at most `h/2`.
    Thin(DistFn),
}

/// A compact subset `K` of the sphere.
#[derive(Clone)]
pub struct CompactSet {
    label: String,
    locus: Locus,
    sampler: Option<Sampler>,
}

impl fmt::Debug for CompactSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompactSet").field("label", &self.label).finish_non_exhaustive()
    }
}

/// Distance in the `w = 1/z` chart from `w` to the image of the affine point
/// of `K` nearest to `1/w`.
fn chart_one_distance(nearest: &(dyn Fn(Complex64) -> Complex64 + Send + Sync), w: Complex64) -> f64 {
    if w.norm_sqr() == 0.0 {
        let k = nearest(Complex64::new(1e300, 0.0));
        return if k.norm() > 1e200 { 0.0 } else { 1.0 / k.norm() };
    }
    let k = nearest(1.0 / w);
    if k.norm_sqr() == 0.0 {
        return f64::INFINITY;
    }
    (w - 1.0 / k).norm()
}

fn circle_points(center: Complex64, r: f64, m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| center + Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / m as f64))
        .collect()
}

impl CompactSet {
    pub fn region<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(Chart, Complex64) -> bool + Send + Sync + 'static,
    {
        CompactSet { label: label.into(), locus: Locus::Region(Arc::new(f)), sampler: None }
    }

    pub fn thin<F>(label: impl Into<String>, dist: F) -> Self
    where
        F: Fn(Chart, Complex64) -> f64 + Send + Sync + 'static,
    {
        CompactSet { label: label.into(), locus: Locus::Thin(Arc::new(dist)), sampler: None }
    }

    /// A thin set of the affine chart given by its nearest-point map.
    pub fn thin_affine<F>(label: impl Into<String>, nearest: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        CompactSet::thin(label, move |chart, z| match chart {
            Chart::Zero => (z - nearest(z)).norm(),
            Chart::One => chart_one_distance(&nearest, z),
        })
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = Some(sampler);
        self
    }

    /// The circle `|z - center| = r`.
    pub fn circle(center: Complex64, r: f64) -> Self {
        let label = if center == Complex64::new(0.0, 0.0) && r == 1.0 {
            "circle".to_string()
        } else {
            format!("circle({},{},{r})", center.re, center.im)
        };
        CompactSet::thin_affine(label, move |z| {
            let d = z - center;
            let u = if d.norm_sqr() == 0.0 { Complex64::new(1.0, 0.0) } else { d / d.norm() };
            center + u * r
        })
        .with_sampler(Arc::new(move |m| circle_points(center, r, m)))
    }

    pub fn unit_circle() -> Self {
        CompactSet::circle(Complex64::new(0.0, 0.0), 1.0)
    }

    /// The closed disk `|z - center| <= r`. Its sampler returns boundary
    /// points, where weighted polynomial norms of bounded-weight problems
    /// attain their maximum.
    pub fn disk(center: Complex64, r: f64) -> Self {
        CompactSet::region(format!("disk({},{},{r})", center.re, center.im), move |chart, z| {
            match chart {
                Chart::Zero => (z - center).norm() <= r,
                Chart::One => (1.0 - center * z).norm() <= r * z.norm(),
            }
        })
        .with_sampler(Arc::new(move |m| circle_points(center, r, m)))
    }

    /// The segment from `a` to `b`.
    pub fn segment(a: Complex64, b: Complex64) -> Self {
        let nearest = move |z: Complex64| {
            let ab = b - a;
            let len2 = ab.norm_sqr();
            let t = if len2 == 0.0 { 0.0 } else { ((z - a) * ab.conj()).re / len2 };
            a + ab * t.clamp(0.0, 1.0)
        };
        CompactSet::thin_affine(format!("segment({},{},{},{})", a.re, a.im, b.re, b.im), nearest)
            .with_sampler(Arc::new(move |m| {
                if m == 1 {
                    return vec![a];
                }
                (0..m).map(|k| a + (b - a) * (k as f64 / (m - 1) as f64)).collect()
            }))
    }

    /// The closed annulus `r0 <= |z| <= r1`.
    pub fn annulus(r0: f64, r1: f64) -> Self {
        CompactSet::region(format!("annulus({r0},{r1})"), move |chart, z| {
            let r = match chart {
                Chart::Zero => z.norm(),
                Chart::One => 1.0 / z.norm(),
            };
            r0 <= r && r <= r1
        })
        .with_sampler(Arc::new(move |m| {
            let mut pts = circle_points(Complex64::new(0.0, 0.0), r0, m / 2);
            pts.extend(circle_points(Complex64::new(0.0, 0.0), r1, m - m / 2));
            pts
        }))
    }

    /// The whole sphere.
    pub fn whole() -> Self {
        CompactSet::region("whole", |_, _| true)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn locus(&self) -> &Locus {
        &self.locus
    }

    pub fn is_thin(&self) -> bool {
        matches!(self.locus, Locus::Thin(_))
    }

    /// Exact membership (distance zero to rounding for thin sets).
    pub fn contains(&self, p: &ProjPoint) -> bool {
        let (chart, z) = chart_transition(p);
        match &self.locus {
            Locus::Region(f) => f(chart, z),
            Locus::Thin(d) => d(chart, z) <= 1e-12,
        }
    }

    /// Rasterizes the set onto the grid.
    pub fn mask(&self, grid: &SphereGrid) -> NodeMask {
        let tol = 0.5 * grid.h();
        NodeMask::from_fn(grid, |chart, k| {
            let z = grid.node_at(k);
            match &self.locus {
                Locus::Region(f) => f(chart, z),
                Locus::Thin(d) => d(chart, z) <= tol,
            }
        })
    }

    /// `m` sample points in the affine chart.
    pub fn sample(&self, m: usize) -> Result<Vec<Complex64>> {
        let s = self.sampler.as_ref().ok_or_else(|| {
            Error::Config(format!("set {} has no point sampler", self.label))
        })?;
        Ok(s(m))
    }

    pub fn has_sampler(&self) -> bool {
        self.sampler.is_some()
    }
}

/// A set of grid nodes in both charts.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMask {
    grid: SphereGrid,
    bits: [Vec<bool>; 2],
}

impl NodeMask {
    pub fn from_fn(grid: &SphereGrid, f: impl Fn(Chart, usize) -> bool) -> Self {
        let bits = Chart::BOTH.map(|c| (0..grid.len()).map(|k| f(c, k)).collect());
        NodeMask { grid: grid.clone(), bits }
    }

    pub fn empty(grid: &SphereGrid) -> Self {
        NodeMask::from_fn(grid, |_, _| false)
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn get(&self, chart: Chart, k: usize) -> bool {
        self.bits[chart.index()][k]
    }

    pub fn set(&mut self, chart: Chart, k: usize, v: bool) {
        self.bits[chart.index()][k] = v;
    }

    pub fn bits(&self, chart: Chart) -> &[bool] {
        &self.bits[chart.index()]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().flatten().filter(|&&b| b).count()
    }

    /// True when no interior node is selected.
    pub fn is_empty_interior(&self) -> bool {
        let g = &self.grid;
        Chart::BOTH.iter().all(|&c| {
            self.bits[c.index()].iter().enumerate().all(|(k, &b)| {
                let (ix, iy) = g.unindex(k);
                !b || g.is_ring(ix, iy)
            })
        })
    }

    /// Nodes within `cells` grid spacings (Euclidean, same chart) of the mask.
    pub fn dilate(&self, cells: f64) -> NodeMask {
        let g = &self.grid;
        let n = g.n() as isize;
        let r = cells.floor() as isize;
        let offsets: Vec<(isize, isize)> = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= cells * cells)
            .collect();
        let mut out = self.clone();
        for c in 0..2 {
            for (k, &b) in self.bits[c].iter().enumerate() {
                if !b {
                    continue;
                }
                let (ix, iy) = g.unindex(k);
                for &(dx, dy) in &offsets {
                    let (x, y) = (ix as isize + dx, iy as isize + dy);
                    if x >= 0 && y >= 0 && x < n && y < n {
                        out.bits[c][g.index(x as usize, y as usize)] = true;
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn parse_call(s: &str) -> Result<(String, Vec<f64>)> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s.to_string(), Vec::new()));
    };
    if !s.ends_with(')') {
        return Err(Error::Config(format!("unbalanced parentheses in {s:?}")));
    }
    let name = s[..open].trim().to_string();
    let inner = &s[open + 1..s.len() - 1];
    let args = inner
        .split(',')
        .filter(|a| !a.trim().is_empty())
        .map(|a| {
            a.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {a:?} in {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((name, args))
}


/// Parses a set from the catalog: `circle`, `circle(r)`, `circle(cx,cy,r)`,
/// `disk(...)` (same forms), `segment`, `segment(a,b)`,
/// `segment(x0,y0,x1,y1)`, `annulus(r0,r1)`, `whole`.
pub fn parse_set(spec: &str) -> Result<CompactSet> {
    let (name, a) = parse_call(spec)?;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let bad = || Error::Config(format!("bad arguments for set {spec:?}"));
    let positive = |r: f64| if r > 0.0 && r.is_finite() { Ok(r) } else { Err(bad()) };
    match name.as_str() {
        "circle" | "disk" => {
            let (center, r) = match a.len() {
                0 => (c(0.0, 0.0), 1.0),
                1 => (c(0.0, 0.0), positive(a[0])?),
                3 => (c(a[0], a[1]), positive(a[2])?),
                _ => return Err(bad()),
            };
            let set = if name == "circle" {
                CompactSet::circle(center, r)
            } else {
                CompactSet::disk(center, r)
            };
            Ok(set.with_label(spec.trim()))
        }
        "segment" => {
            let (p, q) = match a.len() {
                0 => (c(-1.0, 0.0), c(1.0, 0.0)),
                2 => (c(a[0], 0.0), c(a[1], 0.0)),
                4 => (c(a[0], a[1]), c(a[2], a[3])),
                _ => return Err(bad()),
            };
            Ok(CompactSet::segment(p, q).with_label(spec.trim()))
        }
        "annulus" => {
            if a.len() != 2 || !(0.0 < a[0] && a[0] <= a[1]) {
                return Err(bad());
            }
            Ok(CompactSet::annulus(a[0], a[1]).with_label(spec.trim()))
        }
        "whole" if a.is_empty() => Ok(CompactSet::whole()),
        _ => Err(Error::Config(format!("unknown set {spec:?}"))),
    }
}
