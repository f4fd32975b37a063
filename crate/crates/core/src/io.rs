//! CSV formats for samples, density grids, selection traces and MISE reports,
//! and the `key = value` scenario config.
//!
//! All angles are radians. Censored rows carry the sentinel `x = -π`; the
//! sentinel never leaves this module.

use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::circle::{Angle, CensoredObservation, CircularArc};
use crate::error::{Error, Result};
use crate::estimator::CensoredSample;
use crate::eval::{CircularDensity, MiseReport, OracleRow};
use crate::selection::SelectionTrace;
use crate::simulate::{parse_number, Benchmark, CircularDistribution, Coupling, ScenarioSpec};

pub const SAMPLE_HEADER: [&str; 4] = ["delta", "x", "l", "u"];

/// Wire value of `x` on censored rows.
pub const CENSORED_SENTINEL: f64 = -PI;

// Censored rows may carry a sentinel printed with fewer digits.
const SENTINEL_TOLERANCE: f64 = 1e-6;

/// 17 significant digits: enough for every `f64` to round-trip.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_field(field: &str, line: usize, name: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("column `{name}`: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("column `{name}` must be finite, got `{field}`")));
    }
    Ok(v)
}

/// Reads a `delta,x,l,u` sample.
pub fn read_sample_csv<R: Read>(source: R) -> Result<CensoredSample> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let header = reader.headers()?.clone();
    if header.len() != SAMPLE_HEADER.len() || header.iter().zip(SAMPLE_HEADER).any(|(a, b)| a != b) {
        return Err(Error::parse(1, format!("expected header `delta,x,l,u`, got `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut observations = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(Error::parse(line, format!("expected 4 fields, got {}", record.len())));
        }
        let delta = match record[0].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(line, format!("delta must be 0 or 1, got `{other}`"))),
        };
        let x = parse_field(&record[1], line, "x")?;
        let l = parse_field(&record[2], line, "l")?;
        let u = parse_field(&record[3], line, "u")?;
        let window = CircularArc::from_radians(l, u)
            .map_err(|_| Error::parse(line, format!("window endpoints coincide (l = u = {l})")))?;
        let obs = if delta {
            if !(0.0..TAU).contains(&x) {
                return Err(Error::parse(line, format!("observed x must lie in [0, 2π), got {x}")));
            }
            CensoredObservation::observed(Angle::wrap(x), window)
                .map_err(|_| Error::parse(line, format!("observed x = {x} lies outside its window [{l}, {u}]")))?
        } else {
            if (x - CENSORED_SENTINEL).abs() > SENTINEL_TOLERANCE {
                return Err(Error::parse(line, format!("censored rows must carry x = -π, got {x}")));
            }
            CensoredObservation::censored(window)
        };
        observations.push(obs);
    }
    CensoredSample::new(observations).map_err(|_| Error::parse(1, "sample has no rows"))
}

pub fn read_sample_path(path: impl AsRef<Path>) -> Result<CensoredSample> {
    read_sample_csv(BufReader::new(File::open(path)?))
}

pub fn write_sample_csv<W: Write>(sample: &CensoredSample, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SAMPLE_HEADER)?;
    for o in sample.iter() {
        let window = o.window();
        let (delta, x) = match o.angle() {
            Some(x) => ("1", x.radians()),
            None => ("0", CENSORED_SENTINEL),
        };
        w.write_record([
            delta.to_string(),
            num(x),
            num(window.start().radians()),
            num(window.end().radians()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `resolution` rows of `x, f̃(x)` at `x = j·2π/resolution`.
pub fn write_density_grid<D: CircularDensity + ?Sized, W: Write>(est: &D, resolution: usize, sink: W) -> Result<()> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!("grid resolution must be at least 2, got {resolution}")));
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["x", "density"])?;
    for j in 0..resolution {
        let x = j as f64 * TAU / resolution as f64;
        w.write_record([num(x), num(est.value(Angle::wrap(x)))])?;
    }
    w.flush()?;
    Ok(())
}

pub const TRACE_HEADER: [&str; 7] = ["m", "dim", "admissible", "contrast", "op_norm_inv", "penalty", "chosen"];

pub fn write_selection_trace<W: Write>(trace: &SelectionTrace, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRACE_HEADER)?;
    let chosen = trace.chosen();
    for r in trace.records() {
        w.write_record([
            r.model.m().to_string(),
            r.model.dim().to_string(),
            r.admissible.to_string(),
            num(r.contrast),
            num(r.op_norm_inv),
            num(r.penalty),
            (r.model == chosen).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const MISE_HEADER: [&str; 8] = ["scenario", "n", "N", "mise", "stderr", "censored_frac", "mean_dim", "failures"];

pub fn write_mise_report<W: Write>(report: &MiseReport, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(MISE_HEADER)?;
    for r in &report.rows {
        w.write_record([
            report.scenario.clone(),
            r.n.to_string(),
            r.replications.to_string(),
            num(r.mise),
            num(r.stderr),
            num(r.censored_fraction),
            num(r.mean_dim),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_oracle_scan<W: Write>(scenario: &str, n: usize, scan: &[OracleRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["scenario", "n", "m", "dim", "mise", "stderr", "failures"])?;
    for r in scan {
        w.write_record([
            scenario.to_string(),
            n.to_string(),
            r.model.m().to_string(),
            r.model.dim().to_string(),
            num(r.mise),
            num(r.stderr),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const DEFAULT_SIZES: [usize; 3] = [50, 100, 500];
pub const DEFAULT_REPLICATIONS: u64 = 100;

/// A scenario read from a `key = value` file.
///
/// Recognized keys: `name`, `model` (`model1` … `model4`), `target`, `lower`,
/// `upper` (distribution expressions such as `vonmises(pi, 1)`), `coupling`
/// (`independent` or `fixed_offset(alpha)`), `n` (comma-separated sizes),
/// `replications` and `seed`. `#` starts a comment.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub spec: ScenarioSpec,
    pub sizes: Vec<usize>,
    pub replications: u64,
    pub seed: Option<u64>,
}

fn parse_coupling(value: &str) -> std::result::Result<Coupling, String> {
    let v = value.trim().to_ascii_lowercase();
    if v == "independent" {
        return Ok(Coupling::Independent);
    }
    let inner = v
        .strip_prefix("fixed_offset(")
        .or_else(|| v.strip_prefix("offset("))
        .and_then(|rest| rest.strip_suffix(')'))
        .ok_or_else(|| format!("coupling must be `independent` or `fixed_offset(alpha)`, got `{value}`"))?;
    Ok(Coupling::FixedOffset(parse_number(inner)?))
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut name = None;
    let mut model: Option<Benchmark> = None;
    let (mut target, mut lower, mut upper) = (None, None, None);
    let mut coupling = Coupling::Independent;
    let mut sizes = DEFAULT_SIZES.to_vec();
    let mut replications = DEFAULT_REPLICATIONS;
    let mut seed = None;
    let mut last_line = 1;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        let bad = |msg: String| Error::parse(line, msg);
        let dist = |v: &str| v.parse::<CircularDistribution>().map_err(|e| Error::parse(line, e));
        match key.as_str() {
            "name" => name = Some(value.to_string()),
            "model" => model = Some(value.parse().map_err(bad)?),
            "target" => target = Some(dist(value)?),
            "lower" => lower = Some(dist(value)?),
            "upper" => upper = Some(dist(value)?),
            "coupling" => coupling = parse_coupling(value).map_err(bad)?,
            "n" => {
                sizes = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>().map_err(|_| Error::parse(line, format!("bad sample size `{}`", s.trim()))))
                    .collect::<Result<_>>()?;
                if sizes.is_empty() || sizes.iter().any(|&n| n < 4) {
                    return Err(Error::parse(line, "sample sizes must be at least 4"));
                }
            }
            "replications" => {
                replications = value
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad replication count `{value}`")))?
            }
            "seed" => seed = Some(value.parse().map_err(|_| Error::parse(line, format!("bad seed `{value}`")))?),
            other => return Err(Error::parse(line, format!("unknown key `{other}`"))),
        }
    }
    let missing = |what: &str| Error::parse(last_line, format!("config gives neither `model` nor `{what}`"));
    let base = model.map(Benchmark::spec);
    let target = match (target, &base) {
        (Some(t), _) => t,
        (None, Some(b)) => b.target.clone(),
        (None, None) => return Err(missing("target")),
    };
    let spec = match coupling {
        Coupling::FixedOffset(alpha) => {
            let mut spec = ScenarioSpec::fixed_offset(String::new(), target, alpha)
                .map_err(|e| Error::parse(last_line, e.to_string()))?;
            if let Some(l) = lower.or_else(|| base.as_ref().map(|b| b.lower.clone())) {
                spec.lower = l;
            }
            spec
        }
        Coupling::Independent => ScenarioSpec {
            name: String::new(),
            target,
            lower: match (lower, &base) {
                (Some(l), _) => l,
                (None, Some(b)) => b.lower.clone(),
                (None, None) => return Err(missing("lower")),
            },
            upper: match (upper, &base) {
                (Some(u), _) => u,
                (None, Some(b)) => b.upper.clone(),
                (None, None) => return Err(missing("upper")),
            },
            coupling,
        },
    };
    let name = name
        .or_else(|| model.map(|m| m.name().to_string()))
        .unwrap_or_else(|| "custom".to_string());
    Ok(ScenarioConfig {
        spec: ScenarioSpec { name, ..spec },
        sizes,
        replications,
        seed,
    })
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
