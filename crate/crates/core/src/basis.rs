//! Trigonometric orthonormal basis of L²(𝕊¹) and closed-form integrals of
//! basis products over arcs.
//!
//! Index `0` is the constant `1/√(2π)`, index `2j-1` is `cos(jx)/√π` and
//! index `2j` is `sin(jx)/√π`.

use std::f64::consts::TAU;

use crate::circle::{Angle, CircularArc};
use crate::error::{Error, Result};

/// Largest supported model index `m`.
pub const MAX_M: usize = 64;

const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Constant,
    Cosine,
    Sine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex(pub usize);

impl BasisIndex {
    #[inline]
    pub fn frequency(self) -> usize {
        self.0.div_ceil(2)
    }

    #[inline]
    pub fn kind(self) -> BasisKind {
        match self.0 {
            0 => BasisKind::Constant,
            l if l % 2 == 1 => BasisKind::Cosine,
            _ => BasisKind::Sine,
        }
    }

    pub fn eval(self, x: Angle) -> f64 {
        let j = self.frequency() as f64;
        match self.kind() {
            BasisKind::Constant => INV_SQRT_TAU,
            BasisKind::Cosine => (j * x.radians()).cos() * INV_SQRT_PI,
            BasisKind::Sine => (j * x.radians()).sin() * INV_SQRT_PI,
        }
    }
}

/// Model index `m` of the sieve `S_m`, of dimension `2m + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelDim(usize);

impl ModelDim {
    pub fn new(m: usize) -> Result<Self> {
        if m > MAX_M {
            return Err(Error::InvalidParameter(format!(
                "model index {m} exceeds the supported maximum {MAX_M}"
            )));
        }
        Ok(ModelDim(m))
    }

    /// Recovers the model from a basis dimension `2m + 1`.
    pub fn from_dim(dim: usize) -> Result<Self> {
        if dim % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "basis dimension {dim} is not of the form 2m+1"
            )));
        }
        Self::new(dim / 2)
    }

    #[inline]
    pub fn m(self) -> usize {
        self.0
    }

    #[inline]
    pub fn dim(self) -> usize {
        2 * self.0 + 1
    }

    pub fn indices(self) -> impl Iterator<Item = BasisIndex> {
        (0..self.dim()).map(BasisIndex)
    }
}

/// Evaluates every basis function of `S_m` at `x`, writing into `out`.
pub fn eval_all(m: ModelDim, x: Angle, out: &mut [f64]) {
    debug_assert_eq!(out.len(), m.dim());
    out[0] = INV_SQRT_TAU;
    let t = x.radians();
    for j in 1..=m.m() {
        let (s, c) = (j as f64 * t).sin_cos();
        out[2 * j - 1] = c * INV_SQRT_PI;
        out[2 * j] = s * INV_SQRT_PI;
    }
}

/// `∫_arc cos(kx) dx` and `∫_arc sin(kx) dx`.
pub fn arc_trig_integrals(arc: &CircularArc, k: usize) -> (f64, f64) {
    if k == 0 {
        return (arc.length(), 0.0);
    }
    // For integer k the antiderivatives are 2π-periodic, so evaluating at the
    // endpoints also covers arcs that wrap through zero.
    let kf = k as f64;
    let (ss, cs) = (kf * arc.start().radians()).sin_cos();
    let (se, ce) = (kf * arc.end().radians()).sin_cos();
    ((se - ss) / kf, (cs - ce) / kf)
}

/// Weighted trigonometric moments `∫ w(x) cos(kx) dx`, `∫ w(x) sin(kx) dx`
/// for `k = 0..=max_frequency`.
///
/// For an average of arc indicators these are all the numbers needed to form
/// every basis inner product up to frequency `max_frequency / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigMoments {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigMoments {
    pub fn zeros(max_frequency: usize) -> Self {
        TrigMoments {
            cos: vec![0.0; max_frequency + 1],
            sin: vec![0.0; max_frequency + 1],
        }
    }

    pub fn of_arc(arc: &CircularArc, max_frequency: usize) -> Self {
        let mut out = Self::zeros(max_frequency);
        out.add_arc(arc, 1.0);
        out
    }

    /// Moments of the weight `(1/n) Σ 1{x ∈ arc_i}`.
    pub fn of_arcs<'a>(arcs: impl IntoIterator<Item = &'a CircularArc>, max_frequency: usize) -> Self {
        let mut out = Self::zeros(max_frequency);
        let mut count = 0usize;
        for arc in arcs {
            out.add_arc(arc, 1.0);
            count += 1;
        }
        if count > 0 {
            out.scale(1.0 / count as f64);
        }
        out
    }

    /// Moments of an arbitrary weight function by periodic trapezoid rule.
    pub fn of_weight(weight: impl Fn(Angle) -> f64, max_frequency: usize, nodes: usize) -> Self {
        let mut out = Self::zeros(max_frequency);
        let h = TAU / nodes as f64;
        for i in 0..nodes {
            let x = i as f64 * h;
            let w = weight(Angle::wrap(x)) * h;
            for k in 0..=max_frequency {
                let (s, c) = (k as f64 * x).sin_cos();
                out.cos[k] += w * c;
                out.sin[k] += w * s;
            }
        }
        out
    }

    pub fn add_arc(&mut self, arc: &CircularArc, weight: f64) {
        self.cos[0] += weight * arc.length();
        if self.max_frequency() == 0 {
            return;
        }
        let (s0, e0) = (arc.start().radians(), arc.end().radians());
        let (ss1, cs1) = s0.sin_cos();
        let (se1, ce1) = e0.sin_cos();
        // angle-addition recurrence for cos(kx), sin(kx) at both endpoints
        let (mut cs, mut ss) = (1.0f64, 0.0f64);
        let (mut ce, mut se) = (1.0f64, 0.0f64);
        for k in 1..=self.max_frequency() {
            let ncs = cs * cs1 - ss * ss1;
            let nss = ss * cs1 + cs * ss1;
            let nce = ce * ce1 - se * se1;
            let nse = se * ce1 + ce * se1;
            cs = ncs;
            ss = nss;
            ce = nce;
            se = nse;
            let kf = k as f64;
            self.cos[k] += weight * (se - ss) / kf;
            self.sin[k] += weight * (cs - ce) / kf;
        }
    }

    fn scale(&mut self, factor: f64) {
        self.cos.iter_mut().for_each(|v| *v *= factor);
        self.sin.iter_mut().for_each(|v| *v *= factor);
    }

    #[inline]
    pub fn max_frequency(&self) -> usize {
        self.cos.len() - 1
    }

    #[inline]
    pub fn cos(&self, k: usize) -> f64 {
        self.cos[k]
    }

    #[inline]
    pub fn sin(&self, k: usize) -> f64 {
        self.sin[k]
    }

    fn sin_signed(&self, k: isize) -> f64 {
        match k.cmp(&0) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => self.sin[k as usize],
            std::cmp::Ordering::Less => -self.sin[(-k) as usize],
        }
    }

    /// `∫ w φ_a φ_b` from the moments via product-to-sum identities.
    ///
    /// # Panics
    /// Panics if the moments do not reach frequency `freq(a) + freq(b)`.
    pub fn basis_product(&self, a: BasisIndex, b: BasisIndex) -> f64 {
        use BasisKind::*;
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let (j, k) = (a.frequency(), b.frequency());
        let diff = j.abs_diff(k);
        match (a.kind(), b.kind()) {
            (Constant, Constant) => self.cos[0] / TAU,
            (Constant, Cosine) => self.cos[k] * INV_SQRT_TAU * INV_SQRT_PI,
            (Constant, Sine) => self.sin[k] * INV_SQRT_TAU * INV_SQRT_PI,
            (Cosine, Cosine) => (self.cos[diff] + self.cos[j + k]) / TAU,
            (Sine, Sine) => (self.cos[diff] - self.cos[j + k]) / TAU,
            (Cosine, Sine) => mixed(self, j, k),
            (Sine, Cosine) => mixed(self, k, j),
            (_, Constant) => unreachable!("indices are ordered"),
        }
    }
}

// cos(jx)·sin(kx) = [sin((j+k)x) + sin((k-j)x)] / 2
fn mixed(m: &TrigMoments, cos_freq: usize, sin_freq: usize) -> f64 {
    let sum = m.sin[cos_freq + sin_freq];
    let diff = m.sin_signed(sin_freq as isize - cos_freq as isize);
    (sum + diff) / TAU
}

/// Exact `∫_arc φ_a(x) φ_b(x) dx`.
pub fn arc_inner_product(a: BasisIndex, b: BasisIndex, arc: &CircularArc) -> f64 {
    let moments = TrigMoments::of_arc(arc, a.frequency() + b.frequency());
    moments.basis_product(a, b)
}

/// `1/√π`, the sup norm of every non-constant basis function.
pub const fn non_constant_bound() -> f64 {
    INV_SQRT_PI
}
