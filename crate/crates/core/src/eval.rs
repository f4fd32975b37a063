//! Integrated squared error, Monte Carlo MISE studies, fixed-model oracle
//! scans and von Mises parameter extraction.

use std::f64::consts::TAU;
use std::fmt;

use rayon::prelude::*;

use crate::basis::ModelDim;
use crate::circle::Angle;
use crate::error::{Error, Result};
use crate::estimator::{
    build_gram, build_moments, solve_coefficients, truncate_estimate, CensoredSample, DensityEstimate,
    FourierCoefficients,
};
use crate::selection::{adaptive_estimate, fit_models, KappaChoice, ModelGrid, DEFAULT_GRID_CAP};
use crate::simulate::{generate_sample, CircularDistribution, ScenarioSpec, StreamRng};
use crate::special::inverse_mean_resultant;

/// Nodes of the periodic trapezoid rule used for every integral here.
pub const QUADRATURE_NODES: usize = 4096;

/// `R̄` at or below this counts as a flat estimate.
pub const FLAT_RESULTANT: f64 = 1e-12;

fn nodes() -> impl Iterator<Item = Angle> {
    let h = TAU / QUADRATURE_NODES as f64;
    (0..QUADRATURE_NODES).map(move |i| Angle::wrap(i as f64 * h))
}

/// Anything that can be evaluated on the circle.
pub trait CircularDensity {
    fn value(&self, x: Angle) -> f64;

    /// Model dimension, when the notion applies.
    fn dimension(&self) -> Option<usize> {
        None
    }
}

impl CircularDensity for DensityEstimate {
    fn value(&self, x: Angle) -> f64 {
        self.evaluate(x)
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.model().dim())
    }
}

impl CircularDensity for FourierCoefficients {
    fn value(&self, x: Angle) -> f64 {
        self.eval(x)
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.model().dim())
    }
}

/// Truth values on the quadrature nodes.
#[derive(Clone, Debug)]
pub struct TruthGrid {
    values: Vec<f64>,
}

impl TruthGrid {
    pub fn new(truth: &CircularDistribution) -> Result<Self> {
        if !truth.has_density() {
            return Err(Error::NoDensity(truth.to_string()));
        }
        let values = nodes().map(|x| truth.density(x).expect("checked above")).collect();
        Ok(TruthGrid { values })
    }

    /// `∫ (est - f)²` by the trapezoid rule.
    pub fn ise<D: CircularDensity + ?Sized>(&self, est: &D) -> f64 {
        let h = TAU / QUADRATURE_NODES as f64;
        nodes()
            .zip(&self.values)
            .map(|(x, f)| (est.value(x) - f).powi(2))
            .sum::<f64>()
            * h
    }
}

/// `∫ (f̃ - f)²` over the circle.
pub fn integrated_squared_error(est: &DensityEstimate, truth: &CircularDistribution) -> Result<f64> {
    Ok(TruthGrid::new(truth)?.ise(est))
}

/// Coefficients of the `L²` projection of `dist` on `S_m`, by quadrature.
pub fn project_density(dist: &CircularDistribution, model: ModelDim) -> Result<FourierCoefficients> {
    if !dist.has_density() {
        return Err(Error::NoDensity(dist.to_string()));
    }
    let h = TAU / QUADRATURE_NODES as f64;
    let mut acc = vec![0.0; model.dim()];
    let mut phi = vec![0.0; model.dim()];
    for x in nodes() {
        let f = dist.density(x).expect("checked above");
        crate::basis::eval_all(model, x, &mut phi);
        acc.iter_mut().zip(&phi).for_each(|(a, p)| *a += f * p * h);
    }
    FourierCoefficients::new(acc)
}

/// A density estimator that can be plugged into the Monte Carlo harness.
pub trait SampleEstimator: Sync {
    type Output: CircularDensity;

    fn fit(&self, sample: &CensoredSample) -> Result<Self::Output>;
}

/// Penalized selection over the model grid followed by truncation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveEstimator {
    pub grid_cap: usize,
    pub kappa: KappaChoice,
}

impl Default for AdaptiveEstimator {
    fn default() -> Self {
        AdaptiveEstimator {
            grid_cap: DEFAULT_GRID_CAP,
            kappa: KappaChoice::default(),
        }
    }
}

impl SampleEstimator for AdaptiveEstimator {
    type Output = DensityEstimate;

    fn fit(&self, sample: &CensoredSample) -> Result<DensityEstimate> {
        let grid = ModelGrid::new(sample.len(), self.grid_cap)?;
        Ok(adaptive_estimate(sample, &grid, self.kappa)?.estimate)
    }
}

/// The truncated projection estimator on one fixed model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedModelEstimator {
    pub model: ModelDim,
}

impl SampleEstimator for FixedModelEstimator {
    type Output = DensityEstimate;

    fn fit(&self, sample: &CensoredSample) -> Result<DensityEstimate> {
        let gram = build_gram(sample, self.model);
        let coeffs = solve_coefficients(&gram, &build_moments(sample, self.model))?;
        Ok(truncate_estimate(coeffs, sample.len()))
    }
}

/// Stream id of replication `rep` at sample size `n`. Every study under one
/// seed draws the same sample for the same `(n, rep)`.
pub fn replication_stream(n: usize, rep: u64) -> u64 {
    ((n as u64) << 32) | (rep & 0xffff_ffff)
}

/// Outcome of one Monte Carlo replication.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Replication {
    pub index: u64,
    /// `None` when estimation failed for statistical reasons.
    pub ise: Option<f64>,
    pub censored_fraction: f64,
    pub dim: Option<usize>,
}

pub fn run_replications<E: SampleEstimator>(
    spec: &ScenarioSpec,
    n: usize,
    replications: u64,
    seed: u64,
    estimator: &E,
) -> Result<Vec<Replication>> {
    let truth = TruthGrid::new(&spec.target)?;
    (0..replications)
        .into_par_iter()
        .map(|index| {
            let mut rng = StreamRng::new(seed, replication_stream(n, index));
            let sample = generate_sample(spec, n, &mut rng)?;
            let censored_fraction = sample.censored_fraction();
            match estimator.fit(&sample) {
                Ok(est) => Ok(Replication {
                    index,
                    ise: Some(truth.ise(&est)),
                    censored_fraction,
                    dim: est.dimension(),
                }),
                Err(e) if e.is_statistical() => Ok(Replication {
                    index,
                    ise: None,
                    censored_fraction,
                    dim: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Neumaier-compensated sum of the values in ascending order, so the result
/// does not depend on the order they were produced in.
pub fn sorted_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in sorted {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// One row of a MISE report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiseRow {
    pub n: usize,
    pub replications: usize,
    pub mise: f64,
    /// Sample standard deviation of the ISEs over `√N`.
    pub stderr: f64,
    pub censored_fraction: f64,
    pub mean_dim: f64,
    pub failures: usize,
}

pub fn aggregate(n: usize, reps: &[Replication]) -> MiseRow {
    let ises: Vec<f64> = reps.iter().filter_map(|r| r.ise).collect();
    let k = ises.len() as f64;
    let mise = sorted_sum(&ises) / k;
    let squares: Vec<f64> = ises.iter().map(|v| (v - mise).powi(2)).collect();
    let stderr = if ises.len() > 1 {
        (sorted_sum(&squares) / (k - 1.0)).sqrt() / k.sqrt()
    } else {
        f64::NAN
    };
    let fractions: Vec<f64> = reps.iter().map(|r| r.censored_fraction).collect();
    let dims: Vec<f64> = reps.iter().filter_map(|r| r.dim).map(|d| d as f64).collect();
    MiseRow {
        n,
        replications: reps.len(),
        mise,
        stderr,
        censored_fraction: sorted_sum(&fractions) / reps.len() as f64,
        mean_dim: sorted_sum(&dims) / dims.len() as f64,
        failures: reps.len() - ises.len(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiseReport {
    pub scenario: String,
    pub rows: Vec<MiseRow>,
}

impl MiseReport {
    pub fn row(&self, n: usize) -> Option<&MiseRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

impl fmt::Display for MiseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.scenario)?;
        writeln!(
            f,
            "{:>6} {:>5} {:>10} {:>10} {:>8} {:>8} {:>8}",
            "n", "N", "MISE", "stderr", "%cens", "mean D", "failed"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>6} {:>5} {:>10.5} {:>10.5} {:>8.1} {:>8.2} {:>8}",
                r.n,
                r.replications,
                r.mise,
                r.stderr,
                100.0 * r.censored_fraction,
                r.mean_dim,
                r.failures
            )?;
        }
        Ok(())
    }
}

fn check_replications(replications: u64) -> Result<()> {
    if replications < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replications, got {replications}"
        )));
    }
    Ok(())
}

/// MISE of `estimator` for each sample size in `sizes`.
pub fn run_mise<E: SampleEstimator>(
    spec: &ScenarioSpec,
    sizes: &[usize],
    replications: u64,
    seed: u64,
    estimator: &E,
) -> Result<MiseReport> {
    check_replications(replications)?;
    let rows = sizes
        .iter()
        .map(|&n| Ok(aggregate(n, &run_replications(spec, n, replications, seed, estimator)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MiseReport {
        scenario: spec.name.clone(),
        rows,
    })
}

/// MISE of the truncated estimator on one fixed model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleRow {
    pub model: ModelDim,
    pub mise: f64,
    pub stderr: f64,
    pub failures: usize,
}

/// MISE of every fixed model of `grid`, on the same samples [`run_mise`]
/// draws for size `n` under `seed`.
pub fn fixed_m_oracle_scan(
    spec: &ScenarioSpec,
    n: usize,
    replications: u64,
    seed: u64,
    grid: &ModelGrid,
) -> Result<Vec<OracleRow>> {
    check_replications(replications)?;
    let truth = TruthGrid::new(&spec.target)?;
    let per_rep: Vec<Vec<Option<f64>>> = (0..replications)
        .into_par_iter()
        .map(|index| {
            let mut rng = StreamRng::new(seed, replication_stream(n, index));
            let sample = generate_sample(spec, n, &mut rng)?;
            let fits = fit_models(&sample, grid);
            Ok(fits
                .fits()
                .iter()
                .map(|f| {
                    f.solution
                        .as_ref()
                        .map(|(coeffs, _)| truth.ise(&truncate_estimate(coeffs.clone(), n)))
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(grid
        .models()
        .iter()
        .enumerate()
        .map(|(j, &model)| {
            let reps: Vec<Replication> = per_rep
                .iter()
                .enumerate()
                .map(|(i, row)| Replication {
                    index: i as u64,
                    ise: row[j],
                    censored_fraction: 0.0,
                    dim: None,
                })
                .collect();
            let agg = aggregate(n, &reps);
            OracleRow {
                model,
                mise: agg.mise,
                stderr: agg.stderr,
                failures: agg.failures,
            }
        })
        .collect())
}

/// The fixed model with the smallest MISE; failed models are ignored.
pub fn best_fixed(scan: &[OracleRow]) -> Option<&OracleRow> {
    scan.iter()
        .filter(|r| r.mise.is_finite())
        .min_by(|a, b| a.mise.total_cmp(&b.mise))
}

/// Von Mises parameters matched to the first trigonometric moment of an
/// estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VonMisesFit {
    pub mean: Angle,
    pub concentration: f64,
    pub resultant_length: f64,
    /// No preferred direction: `mean` is reported as 0 and `concentration`
    /// is 0.
    pub flat: bool,
}

pub fn fit_von_mises<D: CircularDensity + ?Sized>(est: &D) -> VonMisesFit {
    let h = TAU / QUADRATURE_NODES as f64;
    let (mut c, mut s, mut mass) = (0.0, 0.0, 0.0);
    for x in nodes() {
        let f = est.value(x);
        let (sx, cx) = x.radians().sin_cos();
        c += f * cx * h;
        s += f * sx * h;
        mass += f * h;
    }
    let r = ((c * c + s * s).sqrt() / mass.max(1e-9)).min(1.0);
    if r <= FLAT_RESULTANT {
        return VonMisesFit {
            mean: Angle::ZERO,
            concentration: 0.0,
            resultant_length: r,
            flat: true,
        };
    }
    VonMisesFit {
        mean: Angle::wrap(s.atan2(c)),
        concentration: inverse_mean_resultant(r),
        resultant_length: r,
        flat: false,
    }
}

/// [`fit_von_mises`] for a selected estimate; truncated estimates have no fit.
pub fn fit_von_mises_estimate(est: &DensityEstimate) -> Result<VonMisesFit> {
    if est.is_truncated() {
        return Err(Error::TruncatedEstimate);
    }
    Ok(fit_von_mises(est))
}

/// Mean fitted parameters over repeated samples of one scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterStudy {
    pub mean_mu: f64,
    pub mean_kappa: f64,
    pub fits: usize,
    pub failures: usize,
}

/// Draws `samples` samples of size `n`, selects an estimate on each and
/// averages the fitted `(μ̊, k̊)`. Failed or truncated fits are counted and
/// left out.
pub fn von_mises_study<E>(spec: &ScenarioSpec, n: usize, samples: u64, seed: u64, estimator: &E) -> Result<ParameterStudy>
where
    E: SampleEstimator<Output = DensityEstimate>,
{
    let fits: Vec<Option<VonMisesFit>> = (0..samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = StreamRng::new(seed, replication_stream(n, index));
            let sample = generate_sample(spec, n, &mut rng)?;
            match estimator.fit(&sample).and_then(|est| fit_von_mises_estimate(&est)) {
                Ok(fit) => Ok(Some(fit)),
                Err(e) if e.is_statistical() => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let ok: Vec<&VonMisesFit> = fits.iter().flatten().collect();
    let k = ok.len() as f64;
    let mus: Vec<f64> = ok.iter().map(|f| f.mean.radians()).collect();
    let kappas: Vec<f64> = ok.iter().map(|f| f.concentration).collect();
    Ok(ParameterStudy {
        mean_mu: sorted_sum(&mus) / k,
        mean_kappa: sorted_sum(&kappas) / k,
        fits: ok.len(),
        failures: fits.len() - ok.len(),
    })
}
