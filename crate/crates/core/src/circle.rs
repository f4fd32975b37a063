//! Points and oriented arcs on the unit circle, represented as `[0, 2π)`.
//!
//! Arcs run anticlockwise from `start` to `end` and are closed at both ends,
//! so `[3π/2, π/2]` wraps through zero.

use std::f64::consts::TAU;
use std::fmt;

use crate::error::{Error, Result};

/// An angle normalized to `[0, 2π)`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Reduces `raw` modulo 2π onto `[0, 2π)`.
    pub fn new(raw: f64) -> Result<Self> {
        if !raw.is_finite() {
            return Err(Error::NonFiniteAngle(raw));
        }
        Ok(Angle(reduce(raw)))
    }

    /// Same as [`Angle::new`] for inputs known to be finite.
    ///
    /// # Panics
    /// Panics on NaN or infinite input.
    pub fn wrap(raw: f64) -> Self {
        Self::new(raw).expect("angle must be finite")
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    /// Rotates anticlockwise by `delta` radians.
    pub fn rotate(self, delta: f64) -> Self {
        Angle::wrap(self.0 + delta)
    }

    /// Anticlockwise distance from `self` to `other`, in `[0, 2π)`.
    pub fn distance_to(self, other: Angle) -> f64 {
        reduce(other.0 - self.0)
    }
}

fn reduce(raw: f64) -> f64 {
    let r = raw.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Angle({})", self.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(raw: f64) -> Result<Self> {
        Angle::new(raw)
    }
}

/// A closed anticlockwise arc `[start, end]` with `start ≠ end`.
#[derive(Clone, Copy, PartialEq)]
pub struct CircularArc {
    start: Angle,
    end: Angle,
}

impl CircularArc {
    pub fn new(start: Angle, end: Angle) -> Result<Self> {
        if start == end {
            return Err(Error::DegenerateArc(start.radians()));
        }
        Ok(CircularArc { start, end })
    }

    /// Builds an arc from raw radians, normalizing both endpoints.
    pub fn from_radians(start: f64, end: f64) -> Result<Self> {
        Self::new(Angle::new(start)?, Angle::new(end)?)
    }

    #[inline]
    pub fn start(&self) -> Angle {
        self.start
    }

    #[inline]
    pub fn end(&self) -> Angle {
        self.end
    }

    pub fn wraps(&self) -> bool {
        self.start > self.end
    }

    pub fn contains(&self, x: Angle) -> bool {
        let (s, e, x) = (self.start.0, self.end.0, x.0);
        if s <= e {
            s <= x && x <= e
        } else {
            x >= s || x <= e
        }
    }

    /// Arc length in `(0, 2π)`.
    pub fn length(&self) -> f64 {
        let (s, e) = (self.start.0, self.end.0);
        if e > s {
            e - s
        } else {
            TAU - (s - e)
        }
    }

    /// The arc `[end, start]`: the rest of the circle, sharing both endpoints.
    pub fn complement(&self) -> CircularArc {
        CircularArc {
            start: self.end,
            end: self.start,
        }
    }

    pub fn rotate(&self, delta: f64) -> CircularArc {
        CircularArc {
            start: self.start.rotate(delta),
            end: self.end.rotate(delta),
        }
    }
}

impl fmt::Debug for CircularArc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start.0, self.end.0)
    }
}

/// One censored draw: the observation window `[L, U]` and, when `X` fell
/// inside it, the observed angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensoredObservation {
    observed: Option<Angle>,
    window: CircularArc,
}

impl CensoredObservation {
    pub fn observed(angle: Angle, window: CircularArc) -> Result<Self> {
        if !window.contains(angle) {
            return Err(Error::OutsideWindow {
                angle: angle.radians(),
                start: window.start().radians(),
                end: window.end().radians(),
            });
        }
        Ok(CensoredObservation {
            observed: Some(angle),
            window,
        })
    }

    pub fn censored(window: CircularArc) -> Self {
        CensoredObservation {
            observed: None,
            window,
        }
    }

    /// Observed when `x` lies in the window, censored otherwise.
    pub fn from_draw(x: Angle, window: CircularArc) -> Self {
        CensoredObservation {
            observed: window.contains(x).then_some(x),
            window,
        }
    }

    #[inline]
    pub fn is_observed(&self) -> bool {
        self.observed.is_some()
    }

    #[inline]
    pub fn angle(&self) -> Option<Angle> {
        self.observed
    }

    #[inline]
    pub fn window(&self) -> CircularArc {
        self.window
    }

    /// The censoring arc `(U, L)`, returned in its closed form `[U, L]`.
    pub fn censoring_arc(&self) -> CircularArc {
        self.window.complement()
    }
}
