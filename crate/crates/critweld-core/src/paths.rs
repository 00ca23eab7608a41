//! Samplers for the one-dimensional processes behind all wedge radial parts:
//! Brownian motion with drift/speed, 3-d Bessel processes, drifted Brownian
//! motion conditioned to stay below a line, and the martingale reweighting
//! that exchanges the two.

use crate::error::{CoreError, Result};
use crate::numerics::{lerp, normal_cdf, normal_pdf};
use crate::rng::RngStream;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A real-valued process sampled on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    times: Vec<f64>,
    values: Vec<f64>,
    meta: PathMeta,
}

/// Process label and parameters, kept for serialization headers.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMeta {
    pub label: String,
    pub params: Vec<(String, f64)>,
    pub seed: u64,
    pub stream_id: u64,
}

impl Path {
    pub fn new(times: Vec<f64>, values: Vec<f64>, meta: PathMeta) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(CoreError::InvalidArgument("times/values length mismatch or empty"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidArgument("time grid must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NumericFailure("non-finite path value"));
        }
        Ok(Path { times, values, meta })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &PathMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation between grid points (clamped at the ends).
    pub fn value_at(&self, t: f64) -> f64 {
        lerp(&self.times, &self.values, t)
    }

    /// Largest grid index with time ≤ t.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        if t < self.times[0] - 1e-12 || t > *self.times.last().unwrap() + 1e-12 {
            return Err(CoreError::InvalidArgument("time beyond path range"));
        }
        Ok(self.times.partition_point(|&u| u <= t + 1e-12).saturating_sub(1))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(CoreError::InvalidArgument("empty time grid"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::InvalidArgument("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Brownian motion on `grid` with the given drift (per unit time), variance
/// rate `speed` (variance per unit time) and initial value at `grid[0]`.
pub fn sample_bm(grid: &[f64], drift: f64, speed: f64, start: f64, stream: RngStream) -> Result<Path> {
    check_grid(grid)?;
    if speed < 0.0 {
        return Err(CoreError::InvalidArgument("speed must be non-negative"));
    }
    let mut rng = stream.rng();
    let mut values = Vec::with_capacity(grid.len());
    values.push(start);
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        let z: f64 = StandardNormal.sample(&mut rng);
        let prev = *values.last().unwrap();
        values.push(prev + drift * dt + libm::sqrt(speed * dt) * z);
    }
    Path::new(
        grid.to_vec(),
        values,
        PathMeta {
            label: String::from("bm"),
            params: alloc::vec![
                (String::from("drift"), drift),
                (String::from("speed"), speed),
                (String::from("start"), start),
            ],
            seed: stream.seed,
            stream_id: stream.stream_id,
        },
    )
}

/// 3-d Bessel process sampled as the modulus of a 3-d Brownian motion
/// (exact marginals, no boundary bias at 0). `start ≥ 0`.
pub fn sample_bessel3(grid: &[f64], start: f64, stream: RngStream) -> Result<Path> {
    check_grid(grid)?;
    if start < 0.0 {
        return Err(CoreError::InvalidArgument("bessel start must be non-negative"));
    }
    let mut rng = stream.rng();
    let mut pos = [start, 0.0, 0.0];
    let mut values = Vec::with_capacity(grid.len());
    values.push(start);
    for w in grid.windows(2) {
        let sd = libm::sqrt(w[1] - w[0]);
        for p in pos.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p += sd * z;
        }
        values.push(libm::sqrt(pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]));
    }
    Path::new(
        grid.to_vec(),
        values,
        PathMeta {
            label: String::from("bessel3"),
            params: alloc::vec![(String::from("start"), start)],
            seed: stream.seed,
            stream_id: stream.stream_id,
        },
    )
}

/// Marginal cdf of a 3-d Bessel process at time `t` started from `x0 > 0`,
/// run at variance rate `speed` per coordinate-time. Used as a KS oracle.
pub fn bessel3_cdf(x0: f64, speed: f64, t: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let s = libm::sqrt(speed * t);
    if x0 <= 1e-12 {
        // BES(3) from 0: density ∝ y² e^{-y²/2s²}
        let u = y / s;
        return (normal_cdf(u) - normal_cdf(-u) - 2.0 * u * normal_pdf(u)).clamp(0.0, 1.0);
    }
    let a = (y - x0) / s;
    let b = (-y - x0) / s;
    (normal_cdf(a) - normal_cdf(b) - (s / x0) * (normal_pdf(a) - normal_pdf(b))).clamp(0.0, 1.0)
}

/// Law of (B_{speed·s} + alpha·s) conditioned to stay below (Q·s) for all
/// s ≥ 0, sampled exactly on `grid` (which must start at 0).
///
/// The gap V_s = Q·s − value is a speed-`speed` Brownian motion with drift
/// δ = Q − alpha conditioned to stay positive, realized as |W³(speed·s) +
/// δ·s·e₁| (the modulus of 3-d Brownian motion with drift, which is the Doob
/// h-transform diffusion with drift δ·coth(δ·x/speed) per unit s). δ = 0
/// reduces to a 3-d Bessel process, the (2,2)-wedge case.
pub fn sample_conditioned_below_line(
    grid: &[f64],
    alpha: f64,
    q_slope: f64,
    speed: f64,
    stream: RngStream,
) -> Result<Path> {
    check_grid(grid)?;
    if q_slope < alpha {
        return Err(CoreError::InvalidArgument("requires Q >= alpha"));
    }
    if speed <= 0.0 {
        return Err(CoreError::InvalidArgument("speed must be positive"));
    }
    if libm::fabs(grid[0]) > 1e-12 {
        return Err(CoreError::InvalidArgument("conditioned sampler grid must start at 0"));
    }
    let delta = q_slope - alpha;
    let mut rng = stream.rng();
    let mut pos = [0.0f64, 0.0, 0.0];
    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    for w in grid.windows(2) {
        let ds = w[1] - w[0];
        let sd = libm::sqrt(speed * ds);
        for (i, p) in pos.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p += sd * z + if i == 0 { delta * ds } else { 0.0 };
        }
        let gap = libm::sqrt(pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]);
        values.push(q_slope * w[1] - gap);
    }
    Path::new(
        grid.to_vec(),
        values,
        PathMeta {
            label: String::from("conditioned_below_line"),
            params: alloc::vec![
                (String::from("alpha"), alpha),
                (String::from("q"), q_slope),
                (String::from("speed"), speed),
            ],
            seed: stream.seed,
            stream_id: stream.stream_id,
        },
    )
}

/// Exact sampler for the positive gap process itself (the conditioned
/// diffusion V with V_0 = start ≥ 0): |W³(speed·s) + δ·s·e₁| with the
/// Pitman–Rogers angular initialization when start > 0.
pub fn sample_conditioned_gap(
    grid: &[f64],
    delta: f64,
    speed: f64,
    start: f64,
    stream: RngStream,
) -> Result<Path> {
    check_grid(grid)?;
    if delta < 0.0 || speed <= 0.0 || start < 0.0 {
        return Err(CoreError::InvalidArgument("delta, start >= 0 and speed > 0 required"));
    }
    let mut rng = stream.rng();
    let mut pos = if start > 0.0 && delta > 0.0 {
        // cosθ density ∝ e^{(δ/speed)·start·c} on [-1,1]
        let mu = delta * start / speed;
        let u: f64 = rng.random();
        let c = if mu < 1e-9 {
            2.0 * u - 1.0
        } else {
            let emu = libm::exp(-mu);
            libm::log(emu + u * (libm::exp(mu) - emu)) / mu
        };
        let s = libm::sqrt((1.0 - c * c).max(0.0));
        [start * c, start * s, 0.0]
    } else {
        [start, 0.0, 0.0]
    };
    let mut values = Vec::with_capacity(grid.len());
    values.push(start);
    for w in grid.windows(2) {
        let ds = w[1] - w[0];
        let sd = libm::sqrt(speed * ds);
        for (i, p) in pos.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p += sd * z + if i == 0 { delta * ds } else { 0.0 };
        }
        values.push(libm::sqrt(pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]));
    }
    Path::new(
        grid.to_vec(),
        values,
        PathMeta {
            label: String::from("conditioned_gap"),
            params: alloc::vec![
                (String::from("delta"), delta),
                (String::from("speed"), speed),
                (String::from("start"), start),
            ],
            seed: stream.seed,
            stream_id: stream.stream_id,
        },
    )
}

/// Drift per unit time of the conditioned gap diffusion at value `x`:
/// δ·coth(δ·x/speed), with the δ→0 limit speed/x.
pub fn conditioned_gap_drift(delta: f64, speed: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let a = delta * x / speed;
    if a < 1e-8 {
        speed / x + delta * delta * x / (3.0 * speed)
    } else {
        delta * libm::cosh(a) / libm::sinh(a)
    }
}

/// Martingale weight M_t for a Brownian path `path` at variance rate
/// `alpha_var`:
///
/// M_t = (−B_t + γ·α·t + β) · 1{−B_u + γ·α·u + β > 0 for all grid u ≤ t}
///        · exp(γ·B_t − γ²·α·t/2).
///
/// The indicator is monitored on the grid only.
pub fn martingale_weight(path: &Path, beta: f64, gamma_w: f64, alpha_var: f64, t: f64) -> Result<f64> {
    if beta <= 0.0 || gamma_w <= 0.0 || alpha_var <= 0.0 {
        return Err(CoreError::InvalidArgument("beta, gamma_w, alpha_var must be positive"));
    }
    let idx = path.index_at(t)?;
    let times = path.times();
    let values = path.values();
    for k in 0..=idx {
        let x = -values[k] + gamma_w * alpha_var * times[k] + beta;
        if x <= 0.0 {
            return Ok(0.0);
        }
    }
    let tt = times[idx];
    let bt = values[idx];
    let front = -bt + gamma_w * alpha_var * tt + beta;
    Ok(front * libm::exp(gamma_w * bt - 0.5 * gamma_w * gamma_w * alpha_var * tt))
}

/// Serialize a path as two-column CSV with a one-line header recording the
/// process label, parameters, seed and stream id.
pub fn path_to_csv(path: &Path) -> String {
    let mut header = format!("# label={}", path.meta().label);
    for (k, v) in &path.meta().params {
        header.push_str(&format!(" {k}={v}"));
    }
    header.push_str(&format!(
        " seed={} stream={}\ntime,value\n",
        path.meta().seed,
        path.meta().stream_id
    ));
    let mut out = header;
    for (t, v) in path.times().iter().zip(path.values()) {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}
