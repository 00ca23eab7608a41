//! Discrete chordal Loewner engine parametrised by half-plane capacity:
//! piecewise-constant driving with exact per-step slit maps, forward and
//! centred reverse flows, boundary swallowing times, the Carathéodory+
//! distance and driving-function extraction from curves.

use crate::error::{CoreError, Result};
use crate::numerics::half_plane_sqrt;
use crate::rng::RngStream;
use alloc::vec::Vec;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

/// Sampled driving function on a uniform grid t_k = k·dt, W_0 = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingFunction {
    pub dt: f64,
    pub values: Vec<f64>,
    pub kappa: Option<f64>,
}

impl DrivingFunction {
    pub fn new(dt: f64, values: Vec<f64>, kappa: Option<f64>) -> Result<Self> {
        if dt <= 0.0 || values.len() < 2 {
            return Err(CoreError::InvalidArgument("driving needs dt > 0 and >= 2 samples"));
        }
        if values[0] != 0.0 {
            return Err(CoreError::InvalidArgument("driving must start at 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NumericFailure("non-finite driving value"));
        }
        Ok(DrivingFunction { dt, values, kappa })
    }

    pub fn t_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = (t / self.dt).clamp(0.0, (self.values.len() - 1) as f64);
        let i = libm::floor(k) as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let frac = k - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Number of whole steps up to capacity t plus the partial remainder.
    fn steps_until(&self, t: f64) -> Result<(usize, f64)> {
        if t < 0.0 || t > self.t_max() + 1e-12 {
            return Err(CoreError::InvalidArgument("time beyond driving range"));
        }
        let k = libm::floor(t / self.dt + 1e-12) as usize;
        let k = k.min(self.values.len() - 1);
        let rem = (t - k as f64 * self.dt).max(0.0);
        Ok((k, rem))
    }
}

/// W_t = sqrt(κ)·B_t on a uniform grid.
pub fn sample_driving(kappa: f64, t_max: f64, dt: f64, stream: RngStream) -> Result<DrivingFunction> {
    if kappa < 0.0 || dt <= 0.0 || t_max <= 0.0 {
        return Err(CoreError::InvalidArgument("kappa >= 0, dt > 0, t_max > 0 required"));
    }
    let n = libm::ceil(t_max / dt - 1e-12) as usize;
    let mut rng = stream.rng();
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let sk = libm::sqrt(kappa);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        let prev = *values.last().unwrap();
        values.push(prev + sk * libm::sqrt(dt) * z);
    }
    DrivingFunction::new(dt, values, Some(kappa))
}

/// Reuse one Brownian path at several κ values (the shared-noise coupling):
/// scale a κ = 1 driving by sqrt(κ).
pub fn scale_driving(unit: &DrivingFunction, kappa: f64) -> DrivingFunction {
    let sk = libm::sqrt(kappa);
    DrivingFunction {
        dt: unit.dt,
        values: unit.values.iter().map(|v| v * sk).collect(),
        kappa: Some(kappa),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowDirection {
    Forward,
    Reverse,
}

/// A Loewner flow: a driving function plus the direction it is solved in.
/// Per-step elementary maps are the exact piecewise-constant-driving slit
/// maps, so composed capacity is additive to rounding error.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerFlow {
    pub driving: DrivingFunction,
    pub direction: FlowDirection,
}

impl LoewnerFlow {
    pub fn forward(driving: DrivingFunction) -> Self {
        LoewnerFlow { driving, direction: FlowDirection::Forward }
    }

    pub fn reverse(driving: DrivingFunction) -> Self {
        LoewnerFlow { driving, direction: FlowDirection::Reverse }
    }
}

fn forward_step(z: Complex64, c: f64, cap4: f64) -> Result<Complex64> {
    let u = z - Complex64::new(c, 0.0);
    let s = half_plane_sqrt(u * u + Complex64::new(cap4, 0.0));
    if s.im < 0.0 || !s.re.is_finite() {
        return Err(CoreError::SwallowedPoint);
    }
    Ok(s + Complex64::new(c, 0.0))
}

/// Uncentred forward map g̃_t(z); set `centred` for g_t = g̃_t − W_t.
/// Errors with `SwallowedPoint` if z is inside the hull at time t.
pub fn forward_map(flow: &LoewnerFlow, t: f64, z: Complex64, centred: bool) -> Result<Complex64> {
    if flow.direction != FlowDirection::Forward {
        return Err(CoreError::InvalidArgument("forward_map needs a forward flow"));
    }
    if z.im <= 0.0 {
        return Err(CoreError::InvalidArgument("forward_map expects Im z > 0; use forward_boundary"));
    }
    let (k, rem) = flow.driving.steps_until(t)?;
    let mut w = z;
    for j in 0..k {
        w = forward_step(w, flow.driving.values[j], 4.0 * flow.driving.dt)?;
        if w.im <= 1e-14 {
            return Err(CoreError::SwallowedPoint);
        }
    }
    if rem > 0.0 {
        w = forward_step(w, flow.driving.values[k], 4.0 * rem)?;
    }
    if centred {
        w -= Complex64::new(flow.driving.value_at(t), 0.0);
    }
    Ok(w)
}

/// Forward evolution of a boundary point; `side` (±1) selects the side when
/// the point sits exactly at the driving value. Returns the uncentred image.
pub fn forward_boundary(flow: &LoewnerFlow, t: f64, x: f64, side: f64) -> Result<f64> {
    if flow.direction != FlowDirection::Forward {
        return Err(CoreError::InvalidArgument("forward_boundary needs a forward flow"));
    }
    let (k, rem) = flow.driving.steps_until(t)?;
    let mut u = x;
    // The continuous boundary evolution never crosses the driving value; the
    // discrete driving jumps can leapfrog a point sitting near the base, so
    // the order is enforced by clamping to the current driving position.
    let step = |u: f64, c: f64, cap4: f64| -> f64 {
        let mut d = u - c;
        if d * side < 0.0 {
            d = 0.0;
        }
        let sign = if d == 0.0 { side.signum() } else { d.signum() };
        c + sign * libm::sqrt(d * d + cap4)
    };
    for j in 0..k {
        u = step(u, flow.driving.values[j], 4.0 * flow.driving.dt);
    }
    if rem > 0.0 {
        u = step(u, flow.driving.values[k], 4.0 * rem);
    }
    Ok(u)
}

/// One reverse slit sub-step: sqrt(w² − 4·cap) with the branch mapping the
/// half-plane to itself; real points keep their sign (and continue from 0
/// after mid-step swallowing).
fn reverse_slit(w: Complex64, cap4: f64) -> Complex64 {
    if w.im == 0.0 {
        let d = w.re * w.re - cap4;
        if d <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        return Complex64::new(libm::copysign(libm::sqrt(d), w.re), 0.0);
    }
    half_plane_sqrt(w * w - Complex64::new(cap4, 0.0))
}

/// Centred reverse flow f_t(z) solving df = −2/f dt − dW on the grid
/// (slit decay then driving translation per step). Defined for all t in the
/// driving range and any z in the closed half-plane except 0; real points
/// are continued from 0 after their swallowing time.
pub fn reverse_map(flow: &LoewnerFlow, t: f64, z: Complex64) -> Result<Complex64> {
    if flow.direction != FlowDirection::Reverse {
        return Err(CoreError::InvalidArgument("reverse_map needs a reverse flow"));
    }
    let (k, rem) = flow.driving.steps_until(t)?;
    let mut w = z;
    for j in 0..k {
        let s = reverse_slit(w, 4.0 * flow.driving.dt);
        let dw = flow.driving.values[j + 1] - flow.driving.values[j];
        w = s - Complex64::new(dw, 0.0);
    }
    if rem > 0.0 {
        w = reverse_slit(w, 4.0 * rem);
    }
    Ok(w)
}

/// Swallowing time σ(x) = inf{t ≥ 0 : f_t(x) = 0} of the centred reverse
/// flow, exact within each constant-driving step; `None` if x survives the
/// whole driving range.
pub fn swallow_time(flow: &LoewnerFlow, x: f64) -> Result<Option<f64>> {
    if flow.direction != FlowDirection::Reverse {
        return Err(CoreError::InvalidArgument("swallow_time needs a reverse flow"));
    }
    if x == 0.0 {
        return Ok(Some(0.0));
    }
    let dt = flow.driving.dt;
    let mut u = x;
    for j in 0..flow.driving.values.len() - 1 {
        // within the step the centred point decays by du²/dt = −4
        if u * u <= 4.0 * dt {
            return Ok(Some(j as f64 * dt + u * u / 4.0));
        }
        let s = libm::copysign(libm::sqrt(u * u - 4.0 * dt), u);
        let dw = flow.driving.values[j + 1] - flow.driving.values[j];
        let next = s - dw;
        if next == 0.0 || next.signum() != u.signum() {
            // crossed zero at the driving translation: swallowed at step end
            return Ok(Some((j + 1) as f64 * dt));
        }
        u = next;
    }
    Ok(None)
}

/// σ on a mesh, with the defining invariants checked.
#[derive(Debug, Clone, PartialEq)]
pub struct SwallowFunction {
    pub xs: Vec<f64>,
    pub sigma: Vec<Option<f64>>,
}

pub fn swallow_function(flow: &LoewnerFlow, xs: &[f64]) -> Result<SwallowFunction> {
    let sigma = xs.iter().map(|&x| swallow_time(flow, x)).collect::<Result<Vec<_>>>()?;
    Ok(SwallowFunction { xs: xs.to_vec(), sigma })
}

/// Carathéodory+ distance between two reverse flows on [0, T]:
/// max of sup |f_A − f_B| over a deterministic 64 × 64 mesh of
/// [0, T] × {Im z = eps, |Re z| ≤ K} and sup |σ_A − σ_B| over a 129-point
/// x-mesh of [−K, K], swallowing times clamped at T.
pub fn caratheodory_plus_distance(
    a: &LoewnerFlow,
    b: &LoewnerFlow,
    t_max: f64,
    eps: f64,
    k_half: f64,
) -> Result<f64> {
    if a.direction != FlowDirection::Reverse || b.direction != FlowDirection::Reverse {
        return Err(CoreError::InvalidArgument("caratheodory distance needs reverse flows"));
    }
    const NT: usize = 64;
    const NX: usize = 64;
    const NSIG: usize = 129;
    let mut d: f64 = 0.0;
    for ix in 0..NX {
        let x = -k_half + 2.0 * k_half * ix as f64 / (NX - 1) as f64;
        let z = Complex64::new(x, eps);
        let mut za = z;
        let mut zb = z;
        let mut t_prev = 0.0;
        for it in 1..=NT {
            let t = t_max * it as f64 / NT as f64;
            za = advance_reverse(a, t_prev, t, za)?;
            zb = advance_reverse(b, t_prev, t, zb)?;
            d = d.max((za - zb).norm());
            t_prev = t;
        }
    }
    for ix in 0..NSIG {
        let x = -k_half + 2.0 * k_half * ix as f64 / (NSIG - 1) as f64;
        let sa = swallow_time(a, x)?.unwrap_or(t_max).min(t_max);
        let sb = swallow_time(b, x)?.unwrap_or(t_max).min(t_max);
        d = d.max(libm::fabs(sa - sb));
    }
    Ok(d)
}

/// Advance a centred reverse flow from capacity t0 to t1 (grid-aligned
/// endpoints assumed within rounding).
fn advance_reverse(flow: &LoewnerFlow, t0: f64, t1: f64, z: Complex64) -> Result<Complex64> {
    let dt = flow.driving.dt;
    let k0 = libm::round(t0 / dt) as usize;
    let k1 = libm::round(t1 / dt) as usize;
    let mut w = z;
    for j in k0..k1.min(flow.driving.values.len() - 1) {
        let s = half_plane_sqrt(w * w - Complex64::new(4.0 * dt, 0.0));
        let dw = flow.driving.values[j + 1] - flow.driving.values[j];
        w = s - Complex64::new(dw, 0.0);
    }
    Ok(w)
}

/// Tip trace η(t) of the forward Loewner evolution at `m` capacity samples,
/// computed by the reversed-driving reverse flow (exact per step).
pub fn trace_curve(driving: &DrivingFunction, m: usize) -> Vec<Complex64> {
    let kmax = driving.values.len() - 1;
    let m = m.min(kmax).max(1);
    let mut tips = Vec::with_capacity(m);
    for i in 1..=m {
        let k = i * kmax / m;
        let mut z = Complex64::new(0.0, 0.0);
        // z evolves under the reverse flow driven by s -> W_{k-s} − W_k
        for j in (1..=k).rev() {
            let s = half_plane_sqrt(z * z - Complex64::new(4.0 * driving.dt, 0.0));
            let dw = driving.values[j] - driving.values[j - 1];
            z = s + Complex64::new(dw, 0.0);
        }
        tips.push(z);
    }
    tips
}

/// Driving function extracted from a curve, on its own (non-uniform)
/// capacity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedDriving {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Fraction of unzip steps that fell back to the vertical-slit map.
    pub fallback_fraction: f64,
}

impl ExtractedDriving {
    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        crate::numerics::lerp(&self.times, &self.values, t)
    }
}

/// Inverse Loewner transform: unzip the curve with tilted-slit elementary
/// maps (vertical-slit fallback per step when the Newton solve fails) and
/// return the driving in half-plane capacity parametrisation.
pub fn extract_driving(curve: &[Complex64]) -> Result<ExtractedDriving> {
    if curve.len() < 2 {
        return Err(CoreError::InvalidCurve("need at least 2 curve points"));
    }
    let mut pts: Vec<Complex64> = Vec::with_capacity(curve.len());
    for (i, z) in curve.iter().enumerate() {
        if i == 0 && z.norm() < 1e-15 {
            continue; // base point at the origin
        }
        if z.im <= 0.0 {
            return Err(CoreError::InvalidCurve("curve must stay in the open upper half-plane"));
        }
        pts.push(*z);
    }
    if pts.len() < 2 {
        return Err(CoreError::InvalidCurve("need at least 2 interior points"));
    }
    let mut times = Vec::with_capacity(pts.len() + 1);
    let mut values = Vec::with_capacity(pts.len() + 1);
    times.push(0.0);
    values.push(0.0);
    let mut fallbacks = 0usize;
    let total = pts.len();
    let mut idx = 0usize;
    while idx < pts.len() {
        let z1 = pts[idx];
        idx += 1;
        let rest = &mut pts[idx..];
        let ang = z1.arg() / core::f64::consts::PI;
        let tilt_ok = ang > 1e-6 && ang < 1.0 - 1e-6;
        let mut used_fallback = false;
        let (dt_k, dw_k) = if tilt_ok {
            let p_hat = ang;
            let q_hat = 1.0 - ang;
            let c = z1.norm() / (libm::pow(p_hat, p_hat) * libm::pow(q_hat, q_hat));
            let p = p_hat * c;
            let q = q_hat * c;
            match unzip_tilted(rest, p, q) {
                Ok(()) => (p * q / 4.0, q - p),
                Err(_) => {
                    used_fallback = true;
                    unzip_vertical(rest, z1);
                    (z1.im * z1.im / 4.0, z1.re)
                }
            }
        } else {
            used_fallback = true;
            unzip_vertical(rest, z1);
            (z1.im * z1.im / 4.0, z1.re)
        };
        if used_fallback {
            fallbacks += 1;
        }
        times.push(times.last().unwrap() + dt_k);
        values.push(values.last().unwrap() + dw_k);
    }
    Ok(ExtractedDriving { times, values, fallback_fraction: fallbacks as f64 / total as f64 })
}

/// Map the remaining points by the inverse of the tilted-slit weld map
/// φ(w) = (w+q)^{q/(p+q)}·(w−p)^{p/(p+q)} via damped Newton; points are
/// processed in curve order with warm starts.
fn unzip_tilted(rest: &mut [Complex64], p: f64, q: f64) -> Result<()> {
    let p_hat = p / (p + q);
    let q_hat = 1.0 - p_hat;
    let mut prev: Option<Complex64> = None;
    for z in rest.iter_mut() {
        let lz = z.ln();
        let mut w = match prev {
            Some(w0) => w0,
            None => {
                let guess = *z - Complex64::new(q - p, 0.0);
                if guess.im > 1e-12 {
                    guess
                } else {
                    Complex64::new(guess.re, z.im.max(1e-9))
                }
            }
        };
        let mut converged = false;
        for _ in 0..80 {
            let f = q_hat * (w + Complex64::new(q, 0.0)).ln()
                + p_hat * (w - Complex64::new(p, 0.0)).ln()
                - lz;
            let fp = q_hat / (w + Complex64::new(q, 0.0)) + p_hat / (w - Complex64::new(p, 0.0));
            let mut step = f / fp;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            let mut wn = w - step;
            let mut halvings = 0;
            while wn.im <= 0.0 && halvings < 40 {
                step *= 0.5;
                wn = w - step;
                halvings += 1;
            }
            if wn.im <= 0.0 {
                break;
            }
            let done = step.norm() < 1e-13 * (1.0 + wn.norm());
            w = wn;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(CoreError::NumericFailure("tilted-slit inversion did not converge"));
        }
        // residual check
        let phi = (q_hat * (w + Complex64::new(q, 0.0)).ln()
            + p_hat * (w - Complex64::new(p, 0.0)).ln())
        .exp();
        if (phi - *z).norm() > 1e-7 * (1.0 + z.norm()) {
            return Err(CoreError::NumericFailure("tilted-slit inversion residual too large"));
        }
        *z = w;
        prev = Some(w);
    }
    Ok(())
}

/// Closed-form vertical-slit unzip step absorbing tip z1 (centred frame).
fn unzip_vertical(rest: &mut [Complex64], z1: Complex64) {
    let c = z1.re;
    let h = z1.im;
    for z in rest.iter_mut() {
        let u = *z - Complex64::new(c, 0.0);
        *z = half_plane_sqrt(u * u + Complex64::new(h * h, 0.0));
    }
}
