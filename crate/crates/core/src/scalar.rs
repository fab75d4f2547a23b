//! Floating-point scalar abstraction.
//!
//! Everything numeric in this crate is generic over [`Scalar`], which is
//! implemented for `f32` and `f64`. The numerical thresholds used by the
//! decision procedures are attached to the scalar type through
//! [`Tolerances`], since a gate that is meaningful in double precision is
//! below the rounding floor of single precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Thresholds used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<S> {
    /// Half-width of the band around zero inside which a strict sign
    /// condition (spectral bounds, strict inequalities) is undecidable.
    pub gate: S,
    /// Minimal LP margin accepted as a strict inequality.
    pub feasibility: S,
    /// Componentwise lower bound on cone vectors after normalization.
    pub cone_floor: S,
    /// Target accuracy of spectral-bound and root bisections.
    pub bisection: S,
    /// Newton residual target.
    pub newton_residual: S,
    /// Newton step target.
    pub newton_step: S,
    /// Residual below which a point is accepted as an equilibrium.
    pub equilibrium: S,
    /// Componentwise magnitude below which an equilibrium coordinate snaps to 0.
    pub snap: S,
    /// Infinity-norm radius used to merge equilibria.
    pub dedup: S,
}

pub trait Scalar: Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static {
    fn tolerances() -> Tolerances<Self>;

    /// Converts a literal. Every `f64` literal used in this crate is
    /// representable (possibly rounded) in every implementing type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn tolerances() -> Tolerances<f64> {
        Tolerances {
            gate: 1e-8,
            feasibility: 1e-9,
            cone_floor: 1e-9,
            bisection: 1e-10,
            newton_residual: 1e-12,
            newton_step: 1e-13,
            equilibrium: 1e-10,
            snap: 1e-9,
            dedup: 1e-6,
        }
    }
}

impl Scalar for f32 {
    fn tolerances() -> Tolerances<f32> {
        Tolerances {
            gate: 1e-4,
            feasibility: 1e-5,
            cone_floor: 1e-5,
            bisection: 1e-5,
            newton_residual: 1e-5,
            newton_step: 1e-6,
            equilibrium: 1e-4,
            snap: 1e-4,
            dedup: 1e-3,
        }
    }
}

/// Three-way sign of a quantity with an undecidable band around zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum BandSign {
    Negative,
    Boundary,
    Positive,
}

impl BandSign {
    pub fn of<S: Scalar>(value: S, band: S) -> Self {
        if value > band {
            BandSign::Positive
        } else if value < -band {
            BandSign::Negative
        } else {
            BandSign::Boundary
        }
    }
}

pub(crate) fn max_abs<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_sign_edges() {
        assert_eq!(BandSign::of(1e-7, 1e-8), BandSign::Positive);
        assert_eq!(BandSign::of(-1e-7, 1e-8), BandSign::Negative);
        assert_eq!(BandSign::of(1e-8, 1e-8), BandSign::Boundary);
        assert_eq!(BandSign::of(0.0f32, 1e-4), BandSign::Boundary);
    }

    #[test]
    fn f32_tolerances_are_looser() {
        assert!(f32::tolerances().gate as f64 > f64::tolerances().gate);
    }
}
