//! Projection estimator of a circular density under arc censoring.
//!
//! For a model `S_m` the coefficients solve `Ĝ_m A = Û_m`, where `Ĝ_m` is the
//! Gram matrix of the basis under the coverage weight
//! `σ̂(x) = (1/n) #{i : x ∈ [L_i, U_i]}` and `Û_m` averages the basis over
//! the uncensored points.

use std::f64::consts::TAU;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::basis::{self, BasisIndex, ModelDim, TrigMoments};
use crate::circle::{Angle, CensoredObservation, CircularArc};
use crate::error::{Error, Result};

/// Eigenvalue ratio below which a Gram matrix is treated as singular.
pub const CONDITION_FLOOR: f64 = 1e-12;

const QUADRATURE_NODES: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct CensoredSample {
    observations: Vec<CensoredObservation>,
}

impl CensoredSample {
    pub fn new(observations: Vec<CensoredObservation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidParameter("sample must not be empty".into()));
        }
        Ok(CensoredSample { observations })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[CensoredObservation] {
        &self.observations
    }

    pub fn iter(&self) -> impl Iterator<Item = &CensoredObservation> {
        self.observations.iter()
    }

    pub fn windows(&self) -> impl Iterator<Item = CircularArc> + '_ {
        self.observations.iter().map(|o| o.window())
    }

    pub fn censored_fraction(&self) -> f64 {
        let censored = self.iter().filter(|o| !o.is_observed()).count();
        censored as f64 / self.len() as f64
    }

    /// Trigonometric moments of `σ̂` up to `max_frequency`.
    pub fn coverage_moments(&self, max_frequency: usize) -> TrigMoments {
        let arcs: Vec<CircularArc> = self.windows().collect();
        TrigMoments::of_arcs(arcs.iter(), max_frequency)
    }
}

/// `σ̂(x)`: the fraction of observation windows containing `x`.
pub fn empirical_sigma(sample: &CensoredSample, x: Angle) -> f64 {
    let hits = sample.windows().filter(|w| w.contains(x)).count();
    hits as f64 / sample.len() as f64
}

/// Extreme eigenvalues of a symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    pub min: f64,
    pub max: f64,
}

impl Spectrum {
    pub fn ratio(&self) -> f64 {
        self.min / self.max
    }

    pub fn is_admissible(&self) -> bool {
        self.max > 0.0 && self.ratio() >= CONDITION_FLOOR
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    model: ModelDim,
    entries: DMatrix<f64>,
}

impl GramMatrix {
    /// Assembles the Gram matrix of `S_m` from weight moments reaching
    /// frequency `2m`.
    pub fn from_moments(model: ModelDim, moments: &TrigMoments) -> Self {
        assert!(
            moments.max_frequency() >= 2 * model.m(),
            "moments reach frequency {}, need {}",
            moments.max_frequency(),
            2 * model.m()
        );
        let d = model.dim();
        let mut entries = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let v = moments.basis_product(BasisIndex(a), BasisIndex(b));
                entries[(a, b)] = v;
                entries[(b, a)] = v;
            }
        }
        GramMatrix { model, entries }
    }

    /// Gram matrix under an arbitrary coverage function, e.g. the population
    /// `σ(x) = P(x ∈ [L, U])`, by periodic quadrature.
    pub fn from_coverage(model: ModelDim, coverage: impl Fn(Angle) -> f64) -> Self {
        let moments = TrigMoments::of_weight(coverage, 2 * model.m(), QUADRATURE_NODES);
        Self::from_moments(model, &moments)
    }

    /// Wraps a matrix; it must be square, symmetric and of odd size.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidParameter("Gram matrix must be square".into()));
        }
        let model = ModelDim::from_dim(entries.nrows())?;
        if (&entries - entries.transpose()).amax() > 1e-14 {
            return Err(Error::InvalidParameter("Gram matrix must be symmetric".into()));
        }
        Ok(GramMatrix { model, entries })
    }

    #[inline]
    pub fn model(&self) -> ModelDim {
        self.model
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn spectrum(&self) -> Spectrum {
        let eig = SymmetricEigen::new(self.entries.clone());
        Spectrum {
            min: eig.eigenvalues.min(),
            max: eig.eigenvalues.max(),
        }
    }

    /// `ᵗt Ĝ t`, the squared seminorm `‖t‖²_{n,σ}` of the function with
    /// coefficients `t`.
    pub fn quadratic_form(&self, t: &DVector<f64>) -> f64 {
        t.dot(&(&self.entries * t))
    }
}

/// `Ĝ_m` with entries `(1/n) Σ_i ∫_{[L_i, U_i]} φ_λ φ_λ'`.
pub fn build_gram(sample: &CensoredSample, model: ModelDim) -> GramMatrix {
    GramMatrix::from_moments(model, &sample.coverage_moments(2 * model.m()))
}

/// `Û_m = ((1/n) Σ Δ_i φ_λ(X_i))_λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    model: ModelDim,
    entries: DVector<f64>,
}

impl MomentVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let model = ModelDim::from_dim(entries.len())?;
        Ok(MomentVector {
            model,
            entries: DVector::from_vec(entries),
        })
    }

    #[inline]
    pub fn model(&self) -> ModelDim {
        self.model
    }

    pub fn entries(&self) -> &DVector<f64> {
        &self.entries
    }

    /// The leading `2m+1` entries, i.e. the moment vector of a nested model.
    pub fn truncate_to(&self, model: ModelDim) -> MomentVector {
        assert!(model <= self.model, "cannot extend a moment vector");
        MomentVector {
            model,
            entries: self.entries.rows(0, model.dim()).into_owned(),
        }
    }
}

pub fn build_moments(sample: &CensoredSample, model: ModelDim) -> MomentVector {
    let d = model.dim();
    let mut sum = vec![0.0; d];
    let mut phi = vec![0.0; d];
    for x in sample.iter().filter_map(|o| o.angle()) {
        basis::eval_all(model, x, &mut phi);
        sum.iter_mut().zip(&phi).for_each(|(s, p)| *s += p);
    }
    let n = sample.len() as f64;
    MomentVector {
        model,
        entries: DVector::from_iterator(d, sum.into_iter().map(|s| s / n)),
    }
}

/// Coefficients of a function of `S_m` in the trigonometric basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficients {
    model: ModelDim,
    values: DVector<f64>,
}

impl FourierCoefficients {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let model = ModelDim::from_dim(values.len())?;
        Ok(FourierCoefficients {
            model,
            values: DVector::from_vec(values),
        })
    }

    pub fn zeros(model: ModelDim) -> Self {
        FourierCoefficients {
            model,
            values: DVector::zeros(model.dim()),
        }
    }

    #[inline]
    pub fn model(&self) -> ModelDim {
        self.model
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// `‖t‖²₂` by Parseval.
    pub fn squared_norm(&self) -> f64 {
        self.values.norm_squared()
    }

    pub fn eval(&self, x: Angle) -> f64 {
        let mut phi = vec![0.0; self.model.dim()];
        basis::eval_all(self.model, x, &mut phi);
        self.values.iter().zip(&phi).map(|(a, p)| a * p).sum()
    }

    /// Coefficients of `x ↦ t(x - delta)`.
    pub fn rotate(&self, delta: f64) -> Self {
        let mut values = self.values.clone();
        for j in 1..=self.model.m() {
            let (s, c) = (j as f64 * delta).sin_cos();
            let (a, b) = (self.values[2 * j - 1], self.values[2 * j]);
            values[2 * j - 1] = a * c - b * s;
            values[2 * j] = a * s + b * c;
        }
        FourierCoefficients {
            model: self.model,
            values,
        }
    }
}

/// Solves `Ĝ_m A = Û_m` by Cholesky factorization.
///
/// Fails with [`Error::IllConditioned`] when `λ_min < 1e-12 λ_max`.
pub fn solve_coefficients(gram: &GramMatrix, moments: &MomentVector) -> Result<FourierCoefficients> {
    solve_with_spectrum(gram, moments, &gram.spectrum())
}

pub(crate) fn solve_with_spectrum(
    gram: &GramMatrix,
    moments: &MomentVector,
    spectrum: &Spectrum,
) -> Result<FourierCoefficients> {
    if gram.model() != moments.model() {
        return Err(Error::DimensionMismatch {
            expected: gram.model().dim(),
            actual: moments.model().dim(),
        });
    }
    let m = gram.model().m();
    let ill = || Error::IllConditioned {
        m,
        ratio: spectrum.ratio(),
    };
    if !spectrum.is_admissible() {
        return Err(ill());
    }
    let chol = Cholesky::new(gram.entries.clone()).ok_or_else(ill)?;
    let rhs = &moments.entries;
    let mut solution = chol.solve(rhs);
    // Refinement against a compensated residual drives Ĝ Â - Û to rounding
    // level even near the condition floor, so that -ᵗÂÛ is the contrast of
    // the returned coefficients and not just of the exact solution.
    let mut residual = accurate_residual(&gram.entries, &solution, rhs);
    for _ in 0..REFINEMENT_STEPS {
        let before = residual.amax();
        if before <= f64::EPSILON * rhs.amax() {
            break;
        }
        let candidate = &solution + chol.solve(&residual);
        let after = accurate_residual(&gram.entries, &candidate, rhs);
        if after.amax() >= before {
            break;
        }
        solution = candidate;
        residual = after;
    }
    if residual.amax() > 1e-8 * rhs.amax().max(1.0) {
        return Err(ill());
    }
    Ok(FourierCoefficients {
        model: gram.model(),
        values: solution,
    })
}

const REFINEMENT_STEPS: usize = 4;

/// `Σ x_i y_i` with error-free products and compensated summation.
pub(crate) fn compensated_dot(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut add = |v: f64| {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    };
    for (x, y) in pairs {
        let p = x * y;
        add(p);
        add(x.mul_add(y, -p));
    }
    sum + comp
}

/// `b - G x`, each entry accumulated with [`compensated_dot`].
fn accurate_residual(g: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(b.len(), |i, _| {
        let row = g.row(i);
        b[i] - compensated_dot(row.iter().zip(x.iter()).map(|(a, v)| (*a, *v)))
    })
}

/// `ζ(f̊_m) = -ᵗÂ_m Û_m`.
pub fn contrast_value(coeffs: &FourierCoefficients, moments: &MomentVector) -> Result<f64> {
    if coeffs.model() != moments.model() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.model().dim(),
            actual: moments.model().dim(),
        });
    }
    Ok(-compensated_dot(coeffs.values.iter().copied().zip(moments.entries.iter().copied())))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    coeffs: FourierCoefficients,
    truncated: bool,
    threshold: f64,
}

impl DensityEstimate {
    /// An estimate that is never truncated, e.g. exact coefficients of a known
    /// density.
    pub fn untruncated(coeffs: FourierCoefficients) -> Self {
        DensityEstimate {
            coeffs,
            truncated: false,
            threshold: f64::INFINITY,
        }
    }

    pub fn coefficients(&self) -> &FourierCoefficients {
        &self.coeffs
    }

    #[inline]
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    #[inline]
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn model(&self) -> ModelDim {
        self.coeffs.model()
    }

    pub fn evaluate(&self, x: Angle) -> f64 {
        if self.truncated {
            0.0
        } else {
            self.coeffs.eval(x)
        }
    }

    /// `‖f̃‖²₂` by Parseval.
    pub fn squared_norm(&self) -> f64 {
        if self.truncated {
            0.0
        } else {
            self.coeffs.squared_norm()
        }
    }

    /// `∫ f̃`, which need not be 1 for a projection estimate.
    pub fn total_mass(&self) -> f64 {
        if self.truncated {
            0.0
        } else {
            self.coeffs.values()[0] * TAU.sqrt()
        }
    }
}

/// Zeroes the estimate when `‖f̊_m‖²₂ > n²`.
pub fn truncate_estimate(coeffs: FourierCoefficients, n: usize) -> DensityEstimate {
    let threshold = (n as f64).powi(2);
    let truncated = coeffs.squared_norm() > threshold;
    DensityEstimate {
        coeffs,
        truncated,
        threshold,
    }
}

pub fn evaluate_density(est: &DensityEstimate, x: Angle) -> f64 {
    est.evaluate(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn arc(s: f64, e: f64) -> CircularArc {
        CircularArc::from_radians(s, e).unwrap()
    }

    #[test]
    fn compensated_dot_survives_cancellation() {
        let pairs = [(1e16, 1.0), (1.0, 1.0), (-1e16, 1.0), (1.0 + 2f64.powi(-30), 1.0 - 2f64.powi(-30))];
        assert_eq!(compensated_dot(pairs), 2.0 - 2f64.powi(-60));
        assert_eq!(pairs.iter().map(|(a, b)| a * b).sum::<f64>(), 1.0);
    }

    #[test]
    fn refined_solution_has_rounding_level_residual() {
        // Hilbert-like Gram close to the condition floor
        let d = 5;
        let g = DMatrix::from_fn(d, d, |i, j| 1.0 / (i + j + 1) as f64);
        let gram = GramMatrix::from_matrix(g.clone()).unwrap();
        let u = MomentVector::new(vec![1.0, -1.0, 0.5, 0.25, -0.3]).unwrap();
        let a = solve_coefficients(&gram, &u).unwrap();
        let r = accurate_residual(&g, a.values(), u.entries());
        // storing Â in f64 already costs about ε ‖Ĝ‖ ‖Â‖
        let floor = f64::EPSILON * g.norm() * a.values().norm();
        assert!(r.amax() <= floor, "residual {} vs floor {floor}", r.amax());
    }

    fn md(m: usize) -> ModelDim {
        ModelDim::new(m).unwrap()
    }

    fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> CensoredSample {
        let obs = (0..n)
            .map(|_| {
                let w = arc(rng.random::<f64>() * TAU, rng.random::<f64>() * TAU);
                CensoredObservation::from_draw(Angle::wrap(rng.random::<f64>() * TAU), w)
            })
            .collect();
        CensoredSample::new(obs).unwrap()
    }

    // Plain Gaussian elimination with partial pivoting.
    fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = b.len();
        let mut m = a.clone();
        let mut r = b.clone();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs())).unwrap();
            m.swap_rows(col, piv);
            r.swap_rows(col, piv);
            for row in col + 1..n {
                let f = m[(row, col)] / m[(col, col)];
                for k in col..n {
                    m[(row, k)] -= f * m[(col, k)];
                }
                r[row] -= f * r[col];
            }
        }
        let mut x = DVector::zeros(n);
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| m[(row, k)] * x[k]).sum();
            x[row] = (r[row] - s) / m[(row, row)];
        }
        x
    }

    #[test]
    fn sigma_examples() {
        let w = arc(0.0, PI);
        let all = CensoredSample::new(vec![CensoredObservation::censored(w); 3]).unwrap();
        assert_eq!(empirical_sigma(&all, Angle::wrap(FRAC_PI_2)), 1.0);
        assert_eq!(empirical_sigma(&all, Angle::wrap(3.0 * FRAC_PI_2)), 0.0);
        let two = CensoredSample::new(vec![
            CensoredObservation::censored(arc(0.0, PI)),
            CensoredObservation::censored(arc(PI, 0.0)),
        ])
        .unwrap();
        assert_eq!(empirical_sigma(&two, Angle::wrap(FRAC_PI_4)), 0.5);
    }

    #[test]
    fn gram_examples() {
        let full = CensoredSample::new(vec![CensoredObservation::censored(arc(0.2, 0.2 - 1e-12)); 5]).unwrap();
        let g = build_gram(&full, md(6));
        assert!((g.entries() - DMatrix::identity(13, 13)).amax() < 1e-8);

        let half = CensoredSample::new(vec![CensoredObservation::censored(arc(0.0, PI)); 4]).unwrap();
        let g0 = build_gram(&half, md(0));
        assert!((g0.entries()[(0, 0)] - 0.5).abs() < 1e-15);

        let two = CensoredSample::new(vec![
            CensoredObservation::censored(arc(0.0, PI)),
            CensoredObservation::censored(arc(PI, 0.0)),
        ])
        .unwrap();
        // σ̂ ≡ 1/2 here: the two window integrals add up to the full circle
        for m in [1, 5, 12] {
            let g = build_gram(&two, md(m));
            assert!((g.entries() * 2.0 - DMatrix::identity(2 * m + 1, 2 * m + 1)).amax() < 1e-10);
        }
    }

    #[test]
    fn gram_equals_mean_of_arc_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sample = random_sample(&mut rng, 30);
        let m = md(4);
        let g = build_gram(&sample, m);
        for a in m.indices() {
            for b in m.indices() {
                let direct: f64 = sample
                    .windows()
                    .map(|w| basis::arc_inner_product(a, b, &w))
                    .sum::<f64>()
                    / sample.len() as f64;
                assert!((g.entries()[(a.0, b.0)] - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn population_gram_with_constant_coverage() {
        let g = GramMatrix::from_coverage(md(3), |_| 0.4);
        assert!((g.entries() - DMatrix::identity(7, 7) * 0.4).amax() < 1e-12);
    }

    #[test]
    fn moments_examples() {
        let w = arc(0.0, PI);
        let censored = CensoredSample::new(vec![CensoredObservation::censored(w); 4]).unwrap();
        assert_eq!(build_moments(&censored, md(3)).entries().amax(), 0.0);

        let one = CensoredSample::new(vec![CensoredObservation::observed(Angle::ZERO, arc(5.0, 1.0)).unwrap()])
            .unwrap();
        let u = build_moments(&one, md(1));
        let expected = [1.0 / TAU.sqrt(), 1.0 / PI.sqrt(), 0.0];
        for (got, want) in u.entries().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }

        let two = CensoredSample::new(vec![
            CensoredObservation::observed(Angle::wrap(FRAC_PI_2), arc(0.0, PI)).unwrap(),
            CensoredObservation::censored(arc(0.0, PI)),
        ])
        .unwrap();
        let u = build_moments(&two, md(1));
        let expected = [1.0 / (2.0 * TAU.sqrt()), 0.0, 1.0 / (2.0 * PI.sqrt())];
        for (got, want) in u.entries().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn solve_examples() {
        let u = MomentVector::new(vec![0.3, -0.2, 0.1]).unwrap();
        let id = GramMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        let a = solve_coefficients(&id, &u).unwrap();
        assert!((a.values() - u.entries()).amax() < 1e-15);

        let half = CensoredSample::new(vec![CensoredObservation::censored(arc(0.0, PI)); 3]).unwrap();
        let scalar = build_gram(&half, md(0));
        let a = solve_coefficients(&scalar, &MomentVector::new(vec![1.0]).unwrap()).unwrap();
        assert!((a.values()[0] - 2.0).abs() < 1e-14);

        let g = GramMatrix::from_matrix(DMatrix::identity(5, 5) * 0.5).unwrap();
        let ones = MomentVector::new(vec![1.0; 5]).unwrap();
        let a = solve_coefficients(&g, &ones).unwrap();
        assert!(a.values().iter().all(|v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn solve_matches_gaussian_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let b = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>() - 0.5);
            let spd = &b * b.transpose() + DMatrix::identity(5, 5) * 0.1;
            let g = GramMatrix::from_matrix((&spd + spd.transpose()) * 0.5).unwrap();
            let u = MomentVector::new((0..5).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
            let a = solve_coefficients(&g, &u).unwrap();
            let oracle = gauss_solve(g.entries(), u.entries());
            assert!((a.values() - oracle).amax() < 1e-10);
        }
    }

    #[test]
    fn singular_gram_is_rejected() {
        let mut m = DMatrix::identity(3, 3);
        m[(2, 2)] = 0.0;
        let g = GramMatrix::from_matrix(m).unwrap();
        let u = MomentVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(solve_coefficients(&g, &u), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let g = GramMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        let u = MomentVector::new(vec![1.0; 5]).unwrap();
        assert!(matches!(solve_coefficients(&g, &u), Err(Error::DimensionMismatch { .. })));
        let a = FourierCoefficients::zeros(md(1));
        assert!(contrast_value(&a, &u).is_err());
    }

    #[test]
    fn contrast_examples() {
        let zero = FourierCoefficients::zeros(md(1));
        let u = MomentVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(contrast_value(&zero, &u).unwrap(), 0.0);
        let ones = FourierCoefficients::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(contrast_value(&ones, &u).unwrap(), -3.0);
    }

    #[test]
    fn contrast_matches_full_criterion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sample = random_sample(&mut rng, 200);
        for m in 1..=6 {
            let g = build_gram(&sample, md(m));
            let u = build_moments(&sample, md(m));
            let a = solve_coefficients(&g, &u).unwrap();
            let zeta = contrast_value(&a, &u).unwrap();
            // (1/n) Σ [∫_{window} t² - 2 Δ t(X)] evaluated observation by observation
            let n = sample.len() as f64;
            let full: f64 = sample
                .iter()
                .map(|o| {
                    let w = o.window();
                    let quad: f64 = md(m)
                        .indices()
                        .flat_map(|p| md(m).indices().map(move |q| (p, q)))
                        .map(|(p, q)| a.values()[p.0] * a.values()[q.0] * basis::arc_inner_product(p, q, &w))
                        .sum();
                    quad - 2.0 * o.angle().map_or(0.0, |x| a.eval(x))
                })
                .sum::<f64>()
                / n;
            assert!((zeta - full).abs() < 1e-8, "m={m}: {zeta} vs {full}");
            assert!(zeta <= 0.0);
        }
    }

    #[test]
    fn truncation_examples() {
        let unit = FourierCoefficients::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(!truncate_estimate(unit, 10).is_truncated());

        let big = FourierCoefficients::new(vec![10.0, 1.0, 0.0]).unwrap();
        let est = truncate_estimate(big, 10);
        assert!(est.is_truncated());
        assert_eq!(est.evaluate(Angle::wrap(1.0)), 0.0);
        assert_eq!(est.squared_norm(), 0.0);

        let boundary = FourierCoefficients::new(vec![6.0, 8.0, 0.0]).unwrap();
        assert!(!truncate_estimate(boundary, 10).is_truncated());
    }

    #[test]
    fn evaluate_examples() {
        let flat = DensityEstimate::untruncated(FourierCoefficients::new(vec![TAU.sqrt(), 0.0, 0.0]).unwrap());
        assert!((flat.evaluate(Angle::wrap(2.0)) - 1.0).abs() < 1e-15);
        let cosine = DensityEstimate::untruncated(FourierCoefficients::new(vec![0.0, PI.sqrt(), 0.0]).unwrap());
        assert!((cosine.evaluate(Angle::ZERO) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_shifts_the_function() {
        let a = FourierCoefficients::new(vec![0.2, 0.5, -0.3, 0.1, 0.7]).unwrap();
        let r = a.rotate(0.9);
        for i in 0..20 {
            let x = Angle::wrap(i as f64 * 0.31);
            assert!((r.eval(x) - a.eval(x.rotate(-0.9))).abs() < 1e-13);
        }
    }

    #[test]
    fn no_censoring_reduces_to_classical_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let obs = (0..1000)
            .map(|_| {
                let x = Angle::wrap(rng.random::<f64>() * TAU);
                // full circle minus a 1e-12 gap placed away from x
                let start = x.rotate(1e-6 + rng.random::<f64>()).radians();
                CensoredObservation::observed(x, arc(start, start - 1e-12)).unwrap()
            })
            .collect();
        let sample = CensoredSample::new(obs).unwrap();
        let m = md(10);
        let a = solve_coefficients(&build_gram(&sample, m), &build_moments(&sample, m)).unwrap();
        for idx in m.indices() {
            let classical: f64 = sample.iter().map(|o| idx.eval(o.angle().unwrap())).sum::<f64>() / 1000.0;
            assert!((a.values()[idx.0] - classical).abs() < 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gram_structure(seed in any::<u64>(), n in 4usize..60, m in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sample = random_sample(&mut rng, n);
            let g = build_gram(&sample, md(m));
            let e = g.entries();
            prop_assert!((e - e.transpose()).amax() <= 1e-14);
            let sp = g.spectrum();
            prop_assert!(sp.min >= -1e-10);
            prop_assert!(sp.max <= 1.0 + 1e-10);
            if sp.is_admissible() {
                prop_assert!(1.0 / sp.min >= 1.0 - 1e-10);
            }
            let t = DVector::from_fn(md(m).dim(), |_, _| rng.random::<f64>() * 2.0 - 1.0);
            prop_assert!(g.quadratic_form(&t) <= t.norm_squared() + 1e-10);
        }

        #[test]
        fn moment_entries_bounded(seed in any::<u64>(), n in 4usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sample = random_sample(&mut rng, n);
            let u = build_moments(&sample, md(8));
            for v in u.entries().iter().skip(1) {
                prop_assert!(v.abs() <= basis::non_constant_bound() + 1e-15);
            }
        }

        #[test]
        fn nested_contrast_is_monotone(seed in any::<u64>(), n in 20usize..120) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sample = random_sample(&mut rng, n);
            let top = md(8);
            let moments = build_moments(&sample, top);
            let mut prev: Option<f64> = None;
            for m in 1..=8 {
                let g = build_gram(&sample, md(m));
                let Ok(a) = solve_coefficients(&g, &moments.truncate_to(md(m))) else { continue };
                let z = contrast_value(&a, &moments.truncate_to(md(m))).unwrap();
                if let Some(p) = prev {
                    prop_assert!(z <= p + 1e-10);
                }
                prev = Some(z);
            }
        }
    }
}
