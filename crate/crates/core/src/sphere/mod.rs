//! The Riemann sphere as a two-chart atlas.
//!
//! Chart 0 carries the affine coordinate `z = Z1/Z0`, chart 1 carries
//! `w = Z0/Z1 = 1/z`. Both charts use the same Fubini–Study potential
//! `(1/2) log(1 + |.|^2)`, so on the overlap `phi_0(z) - phi_1(1/z) = log|z|`.

mod csv_io;
mod grid;
mod omega;

pub use grid::{GridField, Interp, SphereGrid};
pub use omega::{fs_potential, omega_density, ChartFn, OmegaCheck, OmegaSpec};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two standard charts of the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chart {
    /// `{Z0 != 0}`, coordinate `z = Z1/Z0`.
    Zero,
    /// `{Z1 != 0}`, coordinate `w = Z0/Z1`.
    One,
}

impl Chart {
    pub const BOTH: [Chart; 2] = [Chart::Zero, Chart::One];

    pub fn index(self) -> usize {
        match self {
            Chart::Zero => 0,
            Chart::One => 1,
        }
    }

    pub fn other(self) -> Chart {
        match self {
            Chart::Zero => Chart::One,
            Chart::One => Chart::Zero,
        }
    }

    pub fn from_index(i: usize) -> Chart {
        if i == 0 {
            Chart::Zero
        } else {
            Chart::One
        }
    }
}

/// A point `[Z0 : Z1]` of the projective line.
///
/// Stored normalized: the coordinate of larger modulus is exactly 1
/// (ties go to `Z0`), so `max(|z0|, |z1|) = 1` and two representatives of
/// the same point normalize to bitwise-equal values in exact arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjPoint {
    z0: Complex64,
    z1: Complex64,
}

impl ProjPoint {
    pub fn new(z0: Complex64, z1: Complex64) -> Result<Self> {
        let (a0, a1) = (z0.norm(), z1.norm());
        if !(a0.is_finite() && a1.is_finite()) {
            return Err(Error::Domain(format!("non-finite homogeneous coordinates [{z0}:{z1}]")));
        }
        if a0 == 0.0 && a1 == 0.0 {
            return Err(Error::Domain("[0:0] is not a point of CP^1".into()));
        }
        Ok(Self::normalized(z0, z1, a0, a1))
    }

    fn normalized(z0: Complex64, z1: Complex64, a0: f64, a1: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        if a0 >= a1 {
            ProjPoint { z0: one, z1: z1 / z0 }
        } else {
            ProjPoint { z0: z0 / z1, z1: one }
        }
    }

    /// The point `[1 : z]`.
    pub fn affine(z: Complex64) -> Self {
        let a = z.norm();
        if a.is_infinite() {
            return Self::infinity();
        }
        Self::normalized(Complex64::new(1.0, 0.0), z, 1.0, a)
    }

    /// The point at infinity `[0 : 1]`.
    pub fn infinity() -> Self {
        ProjPoint { z0: Complex64::new(0.0, 0.0), z1: Complex64::new(1.0, 0.0) }
    }

    /// The point whose coordinate in `chart` is `coord`.
    pub fn from_chart(chart: Chart, coord: Complex64) -> Self {
        match chart {
            Chart::Zero => Self::affine(coord),
            Chart::One => {
                let a = coord.norm();
                if a.is_infinite() {
                    return Self::affine(Complex64::new(0.0, 0.0));
                }
                Self::normalized(coord, Complex64::new(1.0, 0.0), a, 1.0)
            }
        }
    }

    pub fn z0(&self) -> Complex64 {
        self.z0
    }

    pub fn z1(&self) -> Complex64 {
        self.z1
    }

    /// Coordinate of the point in `chart`, or `None` when the point is the
    /// one excluded from that chart.
    pub fn coord(&self, chart: Chart) -> Option<Complex64> {
        let (num, den) = match chart {
            Chart::Zero => (self.z1, self.z0),
            Chart::One => (self.z0, self.z1),
        };
        if den.norm() == 0.0 {
            None
        } else {
            Some(num / den)
        }
    }

    /// Chordal distance `|Z ^ W| / (|Z| |W|)`, which lies in `[0, 1]`.
    pub fn chordal_distance(&self, other: &ProjPoint) -> f64 {
        let cross = self.z0 * other.z1 - self.z1 * other.z0;
        let n1 = (self.z0.norm_sqr() + self.z1.norm_sqr()).sqrt();
        let n2 = (other.z0.norm_sqr() + other.z1.norm_sqr()).sqrt();
        cross.norm() / (n1 * n2)
    }

    /// Projective equality up to a chordal tolerance.
    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        self.chordal_distance(other) <= tol
    }
}

/// Picks the chart in which the point's coordinate has modulus at most 1
/// (ties go to chart 0) and returns that coordinate.
pub fn chart_transition(point: &ProjPoint) -> (Chart, Complex64) {
    if point.z0 == Complex64::new(1.0, 0.0) {
        (Chart::Zero, point.z1)
    } else {
        (Chart::One, point.z0)
    }
}
