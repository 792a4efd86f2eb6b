use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::relax::EnvelopeResult;
use crate::sphere::{Chart, GridField, Interp, OmegaSpec, ProjPoint};

/// A point of the dual bundle `O(-1)`: base point plus fiber coordinate `t`
/// in the trivialization of `chart`. On the overlap `t_1 = (Z1/Z0) t_0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberPoint {
    pub base: ProjPoint,
    pub chart: Chart,
    pub t: Complex64,
}

/// Factor `G` with `t_to = G t_from` at `base`, if `base` lies in both charts.
pub fn fiber_transition(from: Chart, to: Chart, base: &ProjPoint) -> Option<Complex64> {
    if from == to {
        return Some(Complex64::new(1.0, 0.0));
    }
    let z = base.coord(Chart::Zero)?;
    base.coord(Chart::One)?;
    Some(match from {
        Chart::Zero => z,
        Chart::One => 1.0 / z,
    })
}

impl FiberPoint {
    pub fn new(base: ProjPoint, chart: Chart, t: Complex64) -> Result<Self> {
        if base.coord(chart).is_none() {
            return Err(Error::Domain(format!("base point is outside chart {}", chart.index())));
        }
        Ok(FiberPoint { base, chart, t })
    }

    pub fn coord(&self) -> Complex64 {
        self.base.coord(self.chart).expect("checked at construction")
    }

    /// The same bundle point in another trivialization.
    pub fn in_chart(&self, chart: Chart) -> Result<FiberPoint> {
        let g = fiber_transition(self.chart, chart, &self.base)
            .ok_or_else(|| Error::Domain(format!("base point is outside chart {}", chart.index())))?;
        Ok(FiberPoint { base: self.base, chart, t: g * self.t })
    }

    pub fn scaled(&self, lambda: Complex64) -> FiberPoint {
        FiberPoint { t: self.t * lambda, ..*self }
    }
}

/// `H(x, t) = V(x) + log|t| + phi_i(x)` in the trivialization of chart `i`.
#[derive(Clone, Debug)]
pub struct BundleLift {
    v: Arc<GridField>,
    omega: OmegaSpec,
}

impl BundleLift {
    pub fn new(v: GridField, omega: OmegaSpec) -> Self {
        BundleLift { v: Arc::new(v), omega }
    }

    pub fn field(&self) -> &GridField {
        &self.v
    }

    pub fn omega(&self) -> &OmegaSpec {
        &self.omega
    }

    /// `V` at a sphere point, interpolated in `chart` when possible.
    pub fn envelope(&self, chart: Chart, base: &ProjPoint) -> f64 {
        self.v.eval_preferring(base, chart, Interp::Linear)
    }

    /// The metric potential `h_i = V + phi_i` at a chart point.
    pub fn metric(&self, chart: Chart, z: Complex64) -> f64 {
        let p = ProjPoint::from_chart(chart, z);
        self.envelope(chart, &p) + self.omega.potential(chart, z)
    }

    /// `H` at a bundle point; `-inf` on the zero section.
    pub fn eval(&self, p: &FiberPoint) -> f64 {
        if p.t.norm_sqr() == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.metric(p.chart, p.coord()) + p.t.norm().ln()
    }
}

/// Lifts a converged envelope to the fiber-homogeneous function `H`.
pub fn lift_to_bundle(result: &EnvelopeResult, omega: &OmegaSpec) -> Result<BundleLift> {
    if !result.converged {
        return Err(Error::Precondition("envelope did not converge".into()));
    }
    Ok(BundleLift::new(result.v.clone(), omega.clone()))
}
