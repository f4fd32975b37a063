//! Circular distributions, censoring scenarios and reproducible generation of
//! censored samples.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circle::{Angle, CensoredObservation, CircularArc};
use crate::error::{Error, Result};
use crate::estimator::CensoredSample;
use crate::special::bessel_i0;

/// A seeded random stream. Identical `(seed, stream)` pairs yield identical
/// draws; distinct streams under one seed are independent.
#[derive(Clone, Debug)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        StreamRng { inner }
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> Angle {
    Angle::wrap(rng.random::<f64>() * TAU)
}

/// Von Mises law `M(μ, k)` with density `exp(k cos(x - μ)) / (2π I₀(k))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VonMises {
    mean: Angle,
    concentration: f64,
}

impl VonMises {
    pub fn new(mean: f64, concentration: f64) -> Result<Self> {
        if !(concentration.is_finite() && concentration >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "von Mises concentration must be finite and non-negative, got {concentration}"
            )));
        }
        Ok(VonMises {
            mean: Angle::new(mean)?,
            concentration,
        })
    }

    pub fn mean(&self) -> Angle {
        self.mean
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    pub fn density(&self, x: Angle) -> f64 {
        von_mises_density(self.mean, self.concentration, x).expect("validated concentration")
    }

    /// Best–Fisher rejection sampler.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Angle {
        let k = self.concentration;
        if k < 1e-8 {
            return uniform_angle(rng);
        }
        let s = if k < 1e-5 {
            1.0 / k + k
        } else {
            let r = 1.0 + (1.0 + 4.0 * k * k).sqrt();
            let rho = (r - (2.0 * r).sqrt()) / (2.0 * k);
            (1.0 + rho * rho) / (2.0 * rho)
        };
        let w = loop {
            let z = (PI * rng.random::<f64>()).cos();
            let w = (1.0 + s * z) / (s + z);
            let y = k * (s - w);
            let v: f64 = rng.random();
            if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
                break w;
            }
        };
        let theta = w.clamp(-1.0, 1.0).acos();
        let theta = if rng.random::<f64>() < 0.5 { -theta } else { theta };
        self.mean.rotate(theta)
    }
}

/// `exp(k cos(x - μ)) / (2π I₀(k))`, with `I₀` from its power series.
pub fn von_mises_density(mean: Angle, concentration: f64, x: Angle) -> Result<f64> {
    if !(concentration >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "von Mises concentration must be non-negative, got {concentration}"
        )));
    }
    let c = (x.radians() - mean.radians()).cos();
    Ok((concentration * c).exp() / (TAU * bessel_i0(concentration)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    components: Vec<(f64, VonMises)>,
}

impl Mixture {
    pub fn new(components: Vec<(f64, VonMises)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("mixture needs at least one component".into()));
        }
        if components.iter().any(|(w, _)| !(*w > 0.0)) {
            return Err(Error::InvalidParameter("mixture weights must be positive".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        Ok(Mixture { components })
    }

    pub fn components(&self) -> &[(f64, VonMises)] {
        &self.components
    }

    pub fn density(&self, x: Angle) -> f64 {
        self.components.iter().map(|(w, c)| w * c.density(x)).sum()
    }

    /// Draws an angle together with the index of the component that produced it.
    pub fn sample_tagged<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, Angle) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let last = self.components.len() - 1;
        let index = self
            .components
            .iter()
            .position(|(w, _)| {
                acc += w;
                u < acc
            })
            .unwrap_or(last);
        (index, self.components[index].1.sample(rng))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircularDistribution {
    /// Uniform on the whole circle.
    Uniform,
    VonMises(VonMises),
    Mixture(Mixture),
    /// Uniform on an arc, respecting wrap-around.
    UniformArc(CircularArc),
    /// Degenerate law concentrated at one angle; it has no density.
    PointMass(Angle),
}

impl CircularDistribution {
    pub fn von_mises(mean: f64, concentration: f64) -> Result<Self> {
        Ok(CircularDistribution::VonMises(VonMises::new(mean, concentration)?))
    }

    pub fn uniform_arc(start: f64, end: f64) -> Result<Self> {
        Ok(CircularDistribution::UniformArc(CircularArc::from_radians(start, end)?))
    }

    /// Lebesgue density at `x`, or `None` for a point mass.
    pub fn density(&self, x: Angle) -> Option<f64> {
        match self {
            CircularDistribution::Uniform => Some(1.0 / TAU),
            CircularDistribution::VonMises(v) => Some(v.density(x)),
            CircularDistribution::Mixture(m) => Some(m.density(x)),
            CircularDistribution::UniformArc(a) => Some(if a.contains(x) { 1.0 / a.length() } else { 0.0 }),
            CircularDistribution::PointMass(_) => None,
        }
    }

    pub fn has_density(&self) -> bool {
        !matches!(self, CircularDistribution::PointMass(_))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Angle {
        match self {
            CircularDistribution::Uniform => uniform_angle(rng),
            CircularDistribution::VonMises(v) => v.sample(rng),
            CircularDistribution::Mixture(m) => m.sample_tagged(rng).1,
            CircularDistribution::UniformArc(a) => a.start().rotate(rng.random::<f64>() * a.length()),
            CircularDistribution::PointMass(x) => *x,
        }
    }
}

/// Parses `uniform`, `vonmises(mu, k)`, `uniform_arc(a, b)`, `point(x)` or
/// `mixture(w1 * vonmises(mu, k) + w2 * vonmises(mu, k) + ...)`. Numeric
/// fields accept `pi` and the operators `+ - * /`.
impl FromStr for CircularDistribution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        if lower == "uniform" {
            return Ok(CircularDistribution::Uniform);
        }
        let (head, args) = split_call(s)?;
        let err = |e: Error| e.to_string();
        match head.as_str() {
            "vonmises" => {
                let [mu, k] = numeric_args::<2>(args)?;
                CircularDistribution::von_mises(mu, k).map_err(err)
            }
            "uniform_arc" => {
                let [a, b] = numeric_args::<2>(args)?;
                CircularDistribution::uniform_arc(a, b).map_err(err)
            }
            "point" => {
                let [x] = numeric_args::<1>(args)?;
                Ok(CircularDistribution::PointMass(Angle::new(x).map_err(err)?))
            }
            "mixture" => {
                let mut components = Vec::new();
                for part in split_top_level(args, '+') {
                    let (w, rest) = part
                        .split_once('*')
                        .ok_or_else(|| format!("mixture term `{part}` must read `weight * vonmises(mu, k)`"))?;
                    let weight = parse_number(w)?;
                    match rest.trim().parse::<CircularDistribution>()? {
                        CircularDistribution::VonMises(v) => components.push((weight, v)),
                        _ => return Err(format!("mixture component `{}` is not a von Mises law", rest.trim())),
                    }
                }
                Ok(CircularDistribution::Mixture(Mixture::new(components).map_err(err)?))
            }
            other => Err(format!("unknown distribution `{other}`")),
        }
    }
}

impl fmt::Display for CircularDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircularDistribution::Uniform => write!(f, "uniform"),
            CircularDistribution::VonMises(v) => write!(f, "vonmises({}, {})", v.mean, v.concentration),
            CircularDistribution::Mixture(m) => {
                write!(f, "mixture(")?;
                for (i, (w, v)) in m.components.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{w} * vonmises({}, {})", v.mean, v.concentration)?;
                }
                write!(f, ")")
            }
            CircularDistribution::UniformArc(a) => write!(f, "uniform_arc({}, {})", a.start(), a.end()),
            CircularDistribution::PointMass(x) => write!(f, "point({x})"),
        }
    }
}

fn split_call(s: &str) -> std::result::Result<(String, &str), String> {
    let open = s.find('(').ok_or_else(|| format!("expected `name(...)`, got `{s}`"))?;
    if !s.ends_with(')') {
        return Err(format!("unbalanced parentheses in `{s}`"));
    }
    Ok((s[..open].trim().to_ascii_lowercase(), &s[open + 1..s.len() - 1]))
}

fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(s[start..].trim());
    parts
}

fn numeric_args<const N: usize>(args: &str) -> std::result::Result<[f64; N], String> {
    let parts = split_top_level(args, ',');
    if parts.len() != N {
        return Err(format!("expected {N} arguments, got {}", parts.len()));
    }
    let mut out = [0.0; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = parse_number(part)?;
    }
    Ok(out)
}

/// Evaluates a constant expression over numbers and `pi` with `+ - * /`.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty numeric field".into());
    }
    // Split on binary + and - (not exponents or unary signs), then * and /.
    let bytes = s.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        let c = bytes[i];
        if c == b'+' || c == b'-' {
            let prev = s[..i].trim_end();
            let prev_char = prev.chars().last();
            let is_exponent = matches!(prev_char, Some('e' | 'E'))
                && prev.len() >= 2
                && prev[..prev.len() - 1].chars().last().is_some_and(|c| c.is_ascii_digit() || c == '.');
            let is_unary = matches!(prev_char, None | Some('*' | '/' | '+' | '-'));
            if !is_exponent && !is_unary {
                split = Some(i);
                break;
            }
        }
    }
    if let Some(i) = split {
        let lhs = parse_number(&s[..i])?;
        let rhs = parse_number(&s[i + 1..])?;
        return Ok(if bytes[i] == b'+' { lhs + rhs } else { lhs - rhs });
    }
    if let Some(i) = s.rfind(['*', '/']) {
        let lhs = parse_number(&s[..i])?;
        let rhs = parse_number(&s[i + 1..])?;
        return Ok(if &s[i..=i] == "*" { lhs * rhs } else { lhs / rhs });
    }
    if let Some(rest) = s.strip_prefix('-') {
        return parse_number(rest).map(|v| -v);
    }
    if let Some(rest) = s.strip_prefix('+') {
        return parse_number(rest);
    }
    if s.eq_ignore_ascii_case("pi") {
        return Ok(PI);
    }
    s.parse::<f64>().map_err(|_| format!("cannot parse `{s}` as a number"))
}

/// How the upper window endpoint relates to the lower one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    /// `L` and `U` drawn independently from their own laws.
    Independent,
    /// `U = L - α`, so the censoring arc always has length `α`.
    FixedOffset(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub target: CircularDistribution,
    pub lower: CircularDistribution,
    pub upper: CircularDistribution,
    pub coupling: Coupling,
}

/// The four benchmark censoring designs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Benchmark {
    /// `X ~ M(π,1)`, `L ~ M(2π/3,1)`, `U ~ M(4π/3,1)`.
    Model1,
    /// Model 1 with the laws of `L` and `U` exchanged.
    Model2,
    /// `X ~ 0.6 M(π/3,3) + 0.4 M(15π/9,3)`, `L ~ M(2π/3,3)`, `U ~ M(4π/3,3)`.
    Model3,
    /// `X ~ M(π,1)`, `L ~ U[-π/12, π+π/12]`, `U ~ U[π-π/12, π/12]`.
    Model4,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [Benchmark::Model1, Benchmark::Model2, Benchmark::Model3, Benchmark::Model4];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Model1 => "model1",
            Benchmark::Model2 => "model2",
            Benchmark::Model3 => "model3",
            Benchmark::Model4 => "model4",
        }
    }

    pub fn spec(self) -> ScenarioSpec {
        let vm = |mu: f64, k: f64| CircularDistribution::von_mises(mu, k).expect("valid constants");
        let (target, lower, upper) = match self {
            Benchmark::Model1 => (vm(PI, 1.0), vm(2.0 * PI / 3.0, 1.0), vm(4.0 * PI / 3.0, 1.0)),
            Benchmark::Model2 => (vm(PI, 1.0), vm(4.0 * PI / 3.0, 1.0), vm(2.0 * PI / 3.0, 1.0)),
            Benchmark::Model3 => {
                let mix = Mixture::new(vec![
                    (0.6, VonMises::new(PI / 3.0, 3.0).expect("valid")),
                    (0.4, VonMises::new(15.0 * PI / 9.0, 3.0).expect("valid")),
                ])
                .expect("weights sum to one");
                (
                    CircularDistribution::Mixture(mix),
                    vm(2.0 * PI / 3.0, 3.0),
                    vm(4.0 * PI / 3.0, 3.0),
                )
            }
            Benchmark::Model4 => {
                let pad = PI / 12.0;
                (
                    vm(PI, 1.0),
                    CircularDistribution::uniform_arc(-pad, PI + pad).expect("valid arc"),
                    CircularDistribution::uniform_arc(PI - pad, pad).expect("valid arc"),
                )
            }
        };
        ScenarioSpec {
            name: self.name().to_string(),
            target,
            lower,
            upper,
            coupling: Coupling::Independent,
        }
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key: String = s.trim().to_ascii_lowercase().chars().filter(|c| !c.is_whitespace() && *c != '_').collect();
        match key.as_str() {
            "model1" | "1" => Ok(Benchmark::Model1),
            "model2" | "2" => Ok(Benchmark::Model2),
            "model3" | "3" => Ok(Benchmark::Model3),
            "model4" | "4" => Ok(Benchmark::Model4),
            _ => Err(format!("unknown benchmark model `{s}`")),
        }
    }
}

impl ScenarioSpec {
    /// `L` uniform on the circle and `U = L - α`.
    pub fn fixed_offset(name: impl Into<String>, target: CircularDistribution, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < TAU) {
            return Err(Error::InvalidParameter(format!(
                "censoring arc length must lie in (0, 2π), got {alpha}"
            )));
        }
        Ok(ScenarioSpec {
            name: name.into(),
            target,
            lower: CircularDistribution::Uniform,
            upper: CircularDistribution::Uniform,
            coupling: Coupling::FixedOffset(alpha),
        })
    }

    /// Draws an observation window, redrawing the null event `L = U`.
    pub fn sample_window<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CircularArc> {
        for _ in 0..1000 {
            let lower = self.lower.sample(rng);
            let upper = match self.coupling {
                Coupling::Independent => self.upper.sample(rng),
                Coupling::FixedOffset(alpha) => lower.rotate(-alpha),
            };
            if let Ok(arc) = CircularArc::new(lower, upper) {
                return Ok(arc);
            }
        }
        Err(Error::InvalidParameter(format!(
            "scenario `{}` keeps producing L = U; the window laws are degenerate",
            self.name
        )))
    }

    /// Draws `(X, [L, U])` in that order.
    pub fn sample_triplet<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Angle, CircularArc)> {
        let x = self.target.sample(rng);
        let window = self.sample_window(rng)?;
        Ok((x, window))
    }
}

/// `n` independent censored observations from `spec`.
pub fn generate_sample<R: Rng + ?Sized>(spec: &ScenarioSpec, n: usize, rng: &mut R) -> Result<CensoredSample> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let observations = (0..n)
        .map(|_| {
            let (x, window) = spec.sample_triplet(rng)?;
            Ok(CensoredObservation::from_draw(x, window))
        })
        .collect::<Result<Vec<_>>>()?;
    CensoredSample::new(observations)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensoringStats {
    pub censored_fraction: f64,
    /// Mean length of the censoring arc `(U, L)`.
    pub mean_censoring_arc: f64,
}

pub fn mean_censoring_stats<R: Rng + ?Sized>(spec: &ScenarioSpec, n: usize, rng: &mut R) -> Result<CensoringStats> {
    let sample = generate_sample(spec, n, rng)?;
    Ok(censoring_stats(&sample))
}

pub fn censoring_stats(sample: &CensoredSample) -> CensoringStats {
    let n = sample.len() as f64;
    let arc_total: f64 = sample.iter().map(|o| TAU - o.window().length()).sum();
    CensoringStats {
        censored_fraction: sample.censored_fraction(),
        mean_censoring_arc: arc_total / n,
    }
}
