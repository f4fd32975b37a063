//! Penalized model selection over the trigonometric sieve and calibration of
//! the penalty constant κ.
//!
//! The criterion is `ζ(f̊_m) + κ ‖Ĝ_m⁻¹‖_op D_m / (2πn)`. Everything that does
//! not depend on κ is computed once per sample by [`fit_models`], so scanning
//! or calibrating κ costs no further linear algebra.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::basis::{ModelDim, TrigMoments, MAX_M};
use crate::estimator::{
    build_moments, contrast_value, solve_with_spectrum, truncate_estimate, CensoredSample, DensityEstimate,
    FourierCoefficients, GramMatrix, Spectrum,
};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_CAP: usize = 25;

/// κ used when calibration is impossible: the smallest constant covered by
/// the oracle inequality.
pub const FALLBACK_KAPPA: f64 = 32.0;

/// Calibration needs at least this many admissible models.
pub const MIN_CALIBRATION_MODELS: usize = 8;

pub const MAX_KAPPA: f64 = 1e4;
pub const MIN_SLOPE_KAPPA: f64 = 1.0;
pub const DEFAULT_KAPPA_FLOOR: f64 = 1e-3;

/// The models `m = 1, …, min(⌊n/2⌋ - 1, cap)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelGrid {
    n: usize,
    models: Vec<ModelDim>,
}

impl ModelGrid {
    pub fn new(n: usize, cap: usize) -> Result<Self> {
        if cap == 0 || cap > MAX_M {
            return Err(Error::InvalidParameter(format!("grid cap must lie in 1..={MAX_M}, got {cap}")));
        }
        let top = (n / 2).saturating_sub(1).min(cap);
        if top == 0 {
            return Err(Error::InvalidParameter(format!(
                "sample size {n} is too small for any model (need n ≥ 4)"
            )));
        }
        let models = (1..=top).map(|m| ModelDim::new(m).expect("m ≤ cap ≤ MAX_M")).collect();
        Ok(ModelGrid { n, models })
    }

    pub fn with_default_cap(n: usize) -> Result<Self> {
        Self::new(n, DEFAULT_GRID_CAP)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn models(&self) -> &[ModelDim] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn largest(&self) -> ModelDim {
        *self.models.last().expect("grid is non-empty")
    }
}

/// `‖Ĝ⁻¹‖_op = 1/λ_min(Ĝ)` for an admissible Gram matrix.
pub fn inverse_op_norm(gram: &GramMatrix) -> Result<f64> {
    op_norm_from_spectrum(gram.model(), &gram.spectrum())
}

fn op_norm_from_spectrum(model: ModelDim, spectrum: &Spectrum) -> Result<f64> {
    if !spectrum.is_admissible() {
        return Err(Error::IllConditioned {
            m: model.m(),
            ratio: spectrum.ratio(),
        });
    }
    Ok(1.0 / spectrum.min)
}

/// The penalty divided by κ.
pub fn penalty_shape(model: ModelDim, n: usize, op_norm_inv: f64) -> f64 {
    op_norm_inv * model.dim() as f64 / (TAU * n as f64)
}

/// `κ ‖Ĝ_m⁻¹‖_op D_m / (2πn)`.
pub fn penalty(model: ModelDim, n: usize, op_norm_inv: f64, kappa: f64) -> f64 {
    debug_assert!(kappa > 0.0 && n >= 1);
    kappa * penalty_shape(model, n, op_norm_inv)
}

/// The κ-independent part of one model's fit.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFit {
    pub model: ModelDim,
    pub spectrum: Spectrum,
    /// Coefficients and contrast, absent for inadmissible models.
    pub solution: Option<(FourierCoefficients, f64)>,
}

impl ModelFit {
    pub fn is_admissible(&self) -> bool {
        self.solution.is_some()
    }

    pub fn contrast(&self) -> Option<f64> {
        self.solution.as_ref().map(|(_, z)| *z)
    }

    pub fn op_norm_inv(&self) -> Option<f64> {
        self.is_admissible().then(|| 1.0 / self.spectrum.min)
    }
}

/// Fits of every grid model on one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFits {
    n: usize,
    fits: Vec<ModelFit>,
}

impl ModelFits {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fits(&self) -> &[ModelFit] {
        &self.fits
    }

    pub fn get(&self, model: ModelDim) -> Option<&ModelFit> {
        self.fits.iter().find(|f| f.model == model)
    }

    pub fn admissible_count(&self) -> usize {
        self.fits.iter().filter(|f| f.is_admissible()).count()
    }

    /// `(D_m, ζ, penalty shape)` for every admissible model.
    pub fn contrast_points(&self) -> Vec<ContrastPoint> {
        self.fits
            .iter()
            .filter_map(|f| {
                let (_, contrast) = f.solution.as_ref()?;
                Some(ContrastPoint {
                    dim: f.model.dim(),
                    contrast: *contrast,
                    shape: penalty_shape(f.model, self.n, 1.0 / f.spectrum.min),
                })
            })
            .collect()
    }
}

/// Solves every grid model. Coverage moments are computed once up to
/// frequency `2·m_max` and the moment vector once for `m_max`; nested models
/// reuse their leading entries.
pub fn fit_models(sample: &CensoredSample, grid: &ModelGrid) -> ModelFits {
    let top = grid.largest();
    let coverage: TrigMoments = sample.coverage_moments(2 * top.m());
    let moments = build_moments(sample, top);
    let fits = grid
        .models()
        .par_iter()
        .map(|&model| {
            let gram = GramMatrix::from_moments(model, &coverage);
            let spectrum = gram.spectrum();
            let u = moments.truncate_to(model);
            let solution = solve_with_spectrum(&gram, &u, &spectrum).ok().map(|a| {
                let z = contrast_value(&a, &u).expect("dimensions agree");
                (a, z)
            });
            ModelFit {
                model,
                spectrum,
                solution,
            }
        })
        .collect();
    ModelFits { n: sample.len(), fits }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelRecord {
    pub model: ModelDim,
    pub admissible: bool,
    /// `ζ(f̊_m)`; NaN when inadmissible.
    pub contrast: f64,
    /// `‖Ĝ_m⁻¹‖_op`; infinite when inadmissible.
    pub op_norm_inv: f64,
    /// Penalty at the trace's κ; infinite when inadmissible.
    pub penalty: f64,
}

impl ModelRecord {
    pub fn criterion(&self) -> f64 {
        if self.admissible {
            self.contrast + self.penalty
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionTrace {
    records: Vec<ModelRecord>,
    chosen: usize,
    kappa: f64,
    calibration: Option<KappaCalibration>,
}

impl SelectionTrace {
    pub fn records(&self) -> &[ModelRecord] {
        &self.records
    }

    pub fn chosen(&self) -> ModelDim {
        self.records[self.chosen].model
    }

    pub fn chosen_record(&self) -> &ModelRecord {
        &self.records[self.chosen]
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// How κ was obtained when it was not given explicitly.
    pub fn calibration(&self) -> Option<&KappaCalibration> {
        self.calibration.as_ref()
    }
}

/// Index of the smallest criterion, ties going to the earliest (smallest m).
pub fn argmin_criterion(criteria: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in criteria.into_iter().enumerate() {
        if c.is_finite() && best.is_none_or(|(_, b)| c < b) {
            best = Some((i, c));
        }
    }
    best.map(|(i, _)| i)
}

pub fn select_from_fits(fits: &ModelFits, kappa: f64) -> Result<SelectionTrace> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("κ must be positive and finite, got {kappa}")));
    }
    let records: Vec<ModelRecord> = fits
        .fits
        .iter()
        .map(|f| match f.solution {
            Some((_, contrast)) => {
                let op = 1.0 / f.spectrum.min;
                ModelRecord {
                    model: f.model,
                    admissible: true,
                    contrast,
                    op_norm_inv: op,
                    penalty: penalty(f.model, fits.n, op, kappa),
                }
            }
            None => ModelRecord {
                model: f.model,
                admissible: false,
                contrast: f64::NAN,
                op_norm_inv: f64::INFINITY,
                penalty: f64::INFINITY,
            },
        })
        .collect();
    let chosen = argmin_criterion(records.iter().map(ModelRecord::criterion)).ok_or(Error::EstimationImpossible)?;
    Ok(SelectionTrace {
        records,
        chosen,
        kappa,
        calibration: None,
    })
}

/// `m̂* = argmin_m ζ(f̊_m) + pen(m)` at a fixed κ.
pub fn select_model(sample: &CensoredSample, grid: &ModelGrid, kappa: f64) -> Result<SelectionTrace> {
    select_from_fits(&fit_models(sample, grid), kappa)
}

/// One admissible model as seen by κ calibration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContrastPoint {
    pub dim: usize,
    pub contrast: f64,
    /// `‖Ĝ_m⁻¹‖_op D_m / (2πn)`.
    pub shape: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CalibrationStrategy {
    /// Follows the selected dimension as κ decreases and doubles the κ at
    /// which it jumps the most. Breakpoints below `kappa_floor` are ignored.
    DimensionJump { kappa_floor: f64 },
    /// Least-squares slope of `-ζ` against the penalty shape over the largest
    /// third of models, doubled and clamped to `[1, 10⁴]`.
    SlopeRegression,
}

impl Default for CalibrationStrategy {
    fn default() -> Self {
        CalibrationStrategy::DimensionJump {
            kappa_floor: DEFAULT_KAPPA_FLOOR,
        }
    }
}

impl fmt::Display for CalibrationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationStrategy::DimensionJump { .. } => f.write_str("djump"),
            CalibrationStrategy::SlopeRegression => f.write_str("slope"),
        }
    }
}

impl FromStr for CalibrationStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "djump" | "dimension-jump" | "jump" => Ok(CalibrationStrategy::default()),
            "slope" | "slope-regression" | "regression" => Ok(CalibrationStrategy::SlopeRegression),
            other => Err(format!("unknown calibration strategy `{other}` (expected `djump` or `slope`)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaCalibration {
    pub kappa: f64,
    /// Set when there were too few models and [`FALLBACK_KAPPA`] was used.
    pub fallback: bool,
    pub strategy: CalibrationStrategy,
}

pub fn calibrate_kappa(points: &[ContrastPoint], strategy: CalibrationStrategy) -> KappaCalibration {
    let fallback = KappaCalibration {
        kappa: FALLBACK_KAPPA,
        fallback: true,
        strategy,
    };
    if points.len() < MIN_CALIBRATION_MODELS {
        return fallback;
    }
    let kappa = match strategy {
        CalibrationStrategy::SlopeRegression => Some(slope_kappa(points)),
        CalibrationStrategy::DimensionJump { kappa_floor } => jump_kappa(points, kappa_floor),
    };
    match kappa {
        Some(kappa) => KappaCalibration {
            kappa,
            fallback: false,
            strategy,
        },
        None => fallback,
    }
}

fn slope_kappa(points: &[ContrastPoint]) -> f64 {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.dim);
    let keep = sorted.len().div_ceil(3).max(2);
    let tail = &sorted[sorted.len() - keep..];
    let k = tail.len() as f64;
    let mx = tail.iter().map(|p| p.shape).sum::<f64>() / k;
    let my = tail.iter().map(|p| -p.contrast).sum::<f64>() / k;
    let sxx: f64 = tail.iter().map(|p| (p.shape - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.shape - mx) * (-p.contrast - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (2.0 * slope).clamp(MIN_SLOPE_KAPPA, MAX_KAPPA)
}

/// Walks the exact piecewise-constant path `κ ↦ m̂(κ)` from κ = ∞ down to
/// `floor`, then returns twice the κ at the largest dimension jump.
fn jump_kappa(points: &[ContrastPoint], floor: f64) -> Option<f64> {
    let start = (0..points.len()).min_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        pa.shape
            .total_cmp(&pb.shape)
            .then(pa.contrast.total_cmp(&pb.contrast))
            .then(pa.dim.cmp(&pb.dim))
    })?;
    let mut current = start;
    // (breakpoint κ, dimension jump)
    let mut jumps: Vec<(f64, i64)> = Vec::new();
    loop {
        let c = &points[current];
        let next = points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.shape > c.shape && p.contrast < c.contrast)
            .map(|(j, p)| (j, (c.contrast - p.contrast) / (p.shape - c.shape)))
            .max_by(|(ja, ka), (jb, kb)| ka.total_cmp(kb).then(points[*ja].shape.total_cmp(&points[*jb].shape)));
        let Some((j, kappa)) = next else { break };
        if kappa < floor {
            break;
        }
        jumps.push((kappa, points[j].dim as i64 - c.dim as i64));
        current = j;
    }
    let (kappa, _) = jumps
        .iter()
        .copied()
        .max_by(|(ka, da), (kb, db)| da.cmp(db).then(kb.total_cmp(ka)))?;
    Some((2.0 * kappa).min(MAX_KAPPA))
}

/// How the penalty constant is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KappaChoice {
    Fixed(f64),
    Calibrated(CalibrationStrategy),
}

impl Default for KappaChoice {
    fn default() -> Self {
        KappaChoice::Calibrated(CalibrationStrategy::default())
    }
}

/// The selected, truncated estimate together with its selection trace.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveFit {
    pub trace: SelectionTrace,
    pub estimate: DensityEstimate,
}

/// Fits the grid, chooses κ, selects `m̂*` and truncates.
pub fn adaptive_estimate(sample: &CensoredSample, grid: &ModelGrid, choice: KappaChoice) -> Result<AdaptiveFit> {
    let fits = fit_models(sample, grid);
    adaptive_from_fits(&fits, choice)
}

pub fn adaptive_from_fits(fits: &ModelFits, choice: KappaChoice) -> Result<AdaptiveFit> {
    if fits.admissible_count() == 0 {
        return Err(Error::EstimationImpossible);
    }
    let (kappa, calibration) = match choice {
        KappaChoice::Fixed(k) => (k, None),
        KappaChoice::Calibrated(strategy) => {
            let cal = calibrate_kappa(&fits.contrast_points(), strategy);
            (cal.kappa, Some(cal))
        }
    };
    let mut trace = select_from_fits(fits, kappa)?;
    trace.calibration = calibration;
    let (coeffs, _) = fits.fits[trace.chosen]
        .solution
        .clone()
        .expect("chosen model is admissible");
    let estimate = truncate_estimate(coeffs, fits.n);
    Ok(AdaptiveFit { trace, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{Angle, CensoredObservation, CircularArc};
    use crate::simulate::{generate_sample, Benchmark, StreamRng};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn md(m: usize) -> ModelDim {
        ModelDim::new(m).unwrap()
    }

    fn model1_sample(n: usize, seed: u64) -> CensoredSample {
        generate_sample(&Benchmark::Model1.spec(), n, &mut StreamRng::new(seed, 0)).unwrap()
    }

    fn random_sample(seed: u64, n: usize) -> CensoredSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs = (0..n)
            .map(|_| {
                let w = CircularArc::from_radians(rng.random::<f64>() * TAU, rng.random::<f64>() * TAU).unwrap();
                CensoredObservation::from_draw(Angle::wrap(rng.random::<f64>() * TAU), w)
            })
            .collect();
        CensoredSample::new(obs).unwrap()
    }

    #[test]
    fn grid_bounds() {
        assert_eq!(ModelGrid::with_default_cap(500).unwrap().len(), 25);
        assert_eq!(ModelGrid::with_default_cap(50).unwrap().len(), 24);
        assert_eq!(ModelGrid::with_default_cap(4).unwrap().len(), 1);
        assert!(ModelGrid::with_default_cap(3).is_err());
        assert_eq!(ModelGrid::new(500, 10).unwrap().largest(), md(10));
        for n in 4..200 {
            let g = ModelGrid::with_default_cap(n).unwrap();
            assert!(g.models().iter().all(|m| m.dim() <= n));
        }
    }

    #[test]
    fn op_norm_examples() {
        let id = GramMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        assert!((inverse_op_norm(&id).unwrap() - 1.0).abs() < 1e-15);
        let half = GramMatrix::from_matrix(DMatrix::identity(3, 3) * 0.5).unwrap();
        assert!((inverse_op_norm(&half).unwrap() - 2.0).abs() < 1e-14);
        let mut sing = DMatrix::identity(3, 3);
        sing[(1, 1)] = 0.0;
        let sing = GramMatrix::from_matrix(sing).unwrap();
        assert!(matches!(inverse_op_norm(&sing), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn op_norm_matches_inverse_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let b = DMatrix::from_fn(7, 7, |_, _| rng.random::<f64>() - 0.5);
            let spd = &b * b.transpose() + DMatrix::identity(7, 7) * 0.05;
            let spd = (&spd + spd.transpose()) * 0.5;
            let lu = spd.clone().lu();
            let mut v = DVector::from_element(7, 1.0);
            let mut estimate = 0.0;
            for _ in 0..5000 {
                let w = lu.solve(&v).unwrap();
                estimate = w.dot(&v) / v.dot(&v);
                v = &w / w.norm();
            }
            let g = GramMatrix::from_matrix(spd).unwrap();
            let got = inverse_op_norm(&g).unwrap();
            assert!((got - estimate).abs() < 1e-8 * got, "{got} vs {estimate}");
        }
    }

    #[test]
    fn penalty_examples() {
        let p = penalty(md(1), 100, 1.0, 32.0);
        assert!((p - 96.0 / (200.0 * PI)).abs() < 1e-15);
        assert!((p - 0.15279).abs() < 1e-5);
        assert_eq!(penalty(md(1), 100, 1.0, 64.0), 2.0 * p);
        assert!((penalty(md(1), 100, 2.0, 32.0) - 0.30558).abs() < 1e-5);
    }

    #[test]
    fn extreme_kappas() {
        let sample = model1_sample(300, 1);
        let grid = ModelGrid::with_default_cap(300).unwrap();
        let fits = fit_models(&sample, &grid);
        assert_eq!(select_from_fits(&fits, 1e6).unwrap().chosen(), md(1));
        let largest = fits.fits().iter().rev().find(|f| f.is_admissible()).unwrap().model;
        assert_eq!(select_from_fits(&fits, 1e-12).unwrap().chosen(), largest);
    }

    #[test]
    fn model1_selects_low_dimensions() {
        let grid = ModelGrid::with_default_cap(500).unwrap();
        let small = (0..100)
            .filter(|&rep| {
                let sample = generate_sample(&Benchmark::Model1.spec(), 500, &mut StreamRng::new(2024, rep)).unwrap();
                let fit = adaptive_estimate(&sample, &grid, KappaChoice::Calibrated(CalibrationStrategy::SlopeRegression))
                    .unwrap();
                fit.trace.chosen().dim() <= 9
            })
            .count();
        assert!(small >= 90, "{small}/100 replications chose D ≤ 9");
    }

    #[test]
    fn all_inadmissible_is_impossible() {
        // a single tiny window leaves most of the circle uncovered
        let w = CircularArc::from_radians(0.0, 1e-4).unwrap();
        let sample = CensoredSample::new(vec![CensoredObservation::censored(w); 8]).unwrap();
        let grid = ModelGrid::with_default_cap(8).unwrap();
        assert!(matches!(select_model(&sample, &grid, 1.0), Err(Error::EstimationImpossible)));
        assert!(matches!(
            adaptive_estimate(&sample, &grid, KappaChoice::default()),
            Err(Error::EstimationImpossible)
        ));
    }

    fn line(slope: f64, intercept: f64) -> Vec<ContrastPoint> {
        (1..=20)
            .map(|m| {
                let shape = (2 * m + 1) as f64 / 100.0 * (1.0 + 0.1 * m as f64);
                ContrastPoint {
                    dim: 2 * m + 1,
                    contrast: -(intercept + slope * shape),
                    shape,
                }
            })
            .collect()
    }

    #[test]
    fn slope_calibration_examples() {
        let cal = calibrate_kappa(&line(5.0, 0.3), CalibrationStrategy::SlopeRegression);
        assert!((cal.kappa - 10.0).abs() < 1e-9);
        assert!(!cal.fallback);
        let flat = calibrate_kappa(&line(0.0, 0.3), CalibrationStrategy::SlopeRegression);
        assert_eq!(flat.kappa, 1.0);
        let huge = calibrate_kappa(&line(1e6, 0.0), CalibrationStrategy::SlopeRegression);
        assert_eq!(huge.kappa, MAX_KAPPA);
    }

    #[test]
    fn too_few_models_fall_back() {
        for strategy in [CalibrationStrategy::SlopeRegression, CalibrationStrategy::default()] {
            let cal = calibrate_kappa(&line(5.0, 0.0)[..7], strategy);
            assert!(cal.fallback);
            assert_eq!(cal.kappa, FALLBACK_KAPPA);
        }
    }

    #[test]
    fn dimension_jump_on_a_kinked_contrast() {
        // Contrast drops steeply up to D = 7 then flattens with slope 1 in the
        // shape. Once κ falls below 1 the flat part becomes free and the
        // selected dimension jumps straight to the top.
        let points: Vec<ContrastPoint> = (1..=12)
            .map(|m| {
                let shape = (2 * m + 1) as f64;
                let contrast = if m <= 3 { -10.0 * shape } else { -70.0 - 1.0 * (shape - 7.0) * 1.05 };
                ContrastPoint { dim: 2 * m + 1, contrast, shape }
            })
            .collect();
        let cal = calibrate_kappa(&points, CalibrationStrategy::default());
        assert!(!cal.fallback);
        assert!((cal.kappa - 2.0 * 1.05).abs() < 1e-12, "{cal:?}");
    }

    #[test]
    fn dimension_jump_without_breakpoints_falls_back() {
        // contrast increasing with the shape: the smallest model always wins
        let points: Vec<ContrastPoint> = (1..=10)
            .map(|m| ContrastPoint {
                dim: 2 * m + 1,
                contrast: m as f64,
                shape: m as f64,
            })
            .collect();
        let cal = calibrate_kappa(&points, CalibrationStrategy::default());
        assert!(cal.fallback);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("slope".parse::<CalibrationStrategy>().unwrap(), CalibrationStrategy::SlopeRegression);
        assert_eq!("djump".parse::<CalibrationStrategy>().unwrap(), CalibrationStrategy::default());
        assert!("capushe".parse::<CalibrationStrategy>().is_err());
    }

    #[test]
    fn adaptive_estimate_records_calibration() {
        let sample = model1_sample(200, 5);
        let grid = ModelGrid::with_default_cap(200).unwrap();
        let fit = adaptive_estimate(&sample, &grid, KappaChoice::default()).unwrap();
        let cal = fit.trace.calibration().unwrap();
        assert_eq!(cal.kappa, fit.trace.kappa());
        assert_eq!(fit.estimate.model(), fit.trace.chosen());
        let fixed = adaptive_estimate(&sample, &grid, KappaChoice::Fixed(3.0)).unwrap();
        assert!(fixed.trace.calibration().is_none());
        assert_eq!(fixed.trace.kappa(), 3.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn chosen_model_minimizes_criterion(seed in any::<u64>(), n in 20usize..200, kappa in 0.01f64..100.0) {
            let sample = random_sample(seed, n);
            let grid = ModelGrid::with_default_cap(n).unwrap();
            let Ok(trace) = select_model(&sample, &grid, kappa) else { return Ok(()) };
            let best = trace.chosen_record().criterion();
            for r in trace.records().iter().filter(|r| r.admissible) {
                prop_assert!(best <= r.criterion() + 1e-12);
                prop_assert!(r.op_norm_inv >= 1.0 - 1e-10);
            }
        }

        #[test]
        fn dimension_decreases_with_kappa(seed in any::<u64>(), n in 20usize..200, k1 in 0.01f64..50.0, k2 in 0.01f64..50.0) {
            let (lo, hi) = if k1 < k2 { (k1, k2) } else { (k2, k1) };
            let sample = random_sample(seed, n);
            let fits = fit_models(&sample, &ModelGrid::with_default_cap(n).unwrap());
            let (Ok(a), Ok(b)) = (select_from_fits(&fits, lo), select_from_fits(&fits, hi)) else { return Ok(()) };
            prop_assert!(b.chosen().dim() <= a.chosen().dim());
        }

        #[test]
        fn selection_is_deterministic(seed in any::<u64>(), n in 20usize..120, kappa in 0.1f64..10.0) {
            let sample = random_sample(seed, n);
            let grid = ModelGrid::with_default_cap(n).unwrap();
            let a = select_model(&sample, &grid, kappa);
            let b = select_model(&sample, &grid, kappa);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "non-deterministic outcome"),
            }
        }

        #[test]
        fn calibrated_kappa_is_bounded(seed in any::<u64>(), n in 20usize..200) {
            let sample = random_sample(seed, n);
            let fits = fit_models(&sample, &ModelGrid::with_default_cap(n).unwrap());
            for strategy in [CalibrationStrategy::SlopeRegression, CalibrationStrategy::default()] {
                let cal = calibrate_kappa(&fits.contrast_points(), strategy);
                prop_assert!(cal.kappa > 0.0 && cal.kappa <= MAX_KAPPA);
            }
        }
    }
}
