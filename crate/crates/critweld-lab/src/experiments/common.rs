//! Shared helpers for the experiment implementations.

use crate::config::KvMap;
use crate::Result;
use critweld_core::field::{CovarianceSpec, FieldSampler, GridSpec};

pub fn field_sampler(params: &KvMap) -> Result<FieldSampler> {
    let grid = GridSpec {
        x_min: -2.0,
        x_max: 2.0,
        n: params.usize("grid_n")?,
        j_max: params.u64("grid_jmax")? as u32,
    };
    let spec = CovarianceSpec { kappa0: params.f64("kappa0").unwrap_or(0.0) };
    Ok(FieldSampler::new(grid, spec)?)
}

pub const GRID_DEFAULTS: [(&str, &str); 3] =
    [("grid_n", "1024"), ("grid_jmax", "12"), ("kappa0", "0")];

pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let ws: f64 = weights.iter().sum();
    values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / ws
}

pub fn weighted_var(values: &[f64], weights: &[f64]) -> f64 {
    let m = weighted_mean(values, weights);
    let ws: f64 = weights.iter().sum();
    values.iter().zip(weights).map(|(v, w)| w * (v - m) * (v - m)).sum::<f64>() / ws
}

/// Delta-method standard error of the self-normalized weighted mean:
/// se^2 = sum_i [w_i (f_i - fhat)]^2 / (sum_i w_i)^2. More faithful than
/// var/ESS when a few weights dominate.
pub fn weighted_se(values: &[f64], weights: &[f64]) -> f64 {
    let m = weighted_mean(values, weights);
    let ws: f64 = weights.iter().sum();
    let s2: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| {
            let d = w * (v - m);
            d * d
        })
        .sum();
    s2.sqrt() / ws
}

/// Strictly decreasing along a ladder.
pub fn strictly_decreasing(vals: &[f64]) -> bool {
    vals.windows(2).all(|w| w[1] < w[0])
}

/// One importance-sampled draw of a measure-typical boundary point: the
/// replica's field weight is its truncated-measure mass of [-1, 1], the point
/// is drawn from the measure restricted there, and the returned values are
/// the field's scale process h_{2^{-j}}(z) at the sampled cell.
pub struct RootedDraw {
    pub weight: f64,
    pub scale_values: Vec<f64>,
}

pub fn rooted_draw(
    sampler: &FieldSampler,
    beta: f64,
    eps: f64,
    stream: critweld_core::RngStream,
) -> critweld_core::error::Result<RootedDraw> {
    use rand::Rng;
    let f = sampler.sample_neumann(stream.fork(1));
    let m = critweld_core::measures::truncated_derivative_measure(&f, beta, eps)?;
    let weight = m.mass(-1.0, 1.0);
    if weight <= 0.0 {
        return Ok(RootedDraw { weight: 0.0, scale_values: Vec::new() });
    }
    let mut rng = stream.fork(2).rng();
    let u: f64 = rng.random();
    let target = u * weight;
    // walk the cells of [-1, 1]
    let mut acc = 0.0;
    let mut cell = None;
    for i in 0..f.n() {
        let l = m.edges()[i].max(-1.0);
        let r = m.edges()[i + 1].min(1.0);
        if r <= l {
            continue;
        }
        acc += m.density()[i] * (r - l);
        if acc >= target {
            cell = Some(i);
            break;
        }
    }
    let i = cell.unwrap_or(f.n() / 2);
    let scale_values = (0..=f.j_max()).map(|j| f.value(j, i)).collect();
    Ok(RootedDraw { weight, scale_values })
}

/// Draw rooted replicas in deterministic blocks until the weights reach the
/// target effective sample size (or the replica cap). The stream ids are
/// consumed in order, so the stopping rule keeps runs byte-reproducible.
pub fn rooted_draws_until(
    sampler: &FieldSampler,
    beta: f64,
    eps: f64,
    seed: u64,
    workers: usize,
    ess_min: f64,
    block: u64,
    max_replicas: u64,
) -> critweld_core::error::Result<(Vec<RootedDraw>, f64)> {
    let mut rows: Vec<RootedDraw> = Vec::new();
    let mut next = 0u64;
    loop {
        let n = block.min(max_replicas - next);
        if n == 0 {
            break;
        }
        let chunk: Vec<critweld_core::error::Result<RootedDraw>> =
            crate::runner::run_replicas(n, seed, workers, |s| {
                let shifted = critweld_core::RngStream::new(s.seed, s.stream_id + next);
                rooted_draw(sampler, beta, eps, shifted)
            });
        for c in chunk {
            rows.push(c?);
        }
        next += n;
        let weights: Vec<f64> = rows.iter().map(|r| r.weight).collect();
        if critweld_core::stats::effective_sample_size(&weights) >= ess_min {
            break;
        }
    }
    let weights: Vec<f64> = rows.iter().map(|r| r.weight).collect();
    Ok((rows, critweld_core::stats::effective_sample_size(&weights)))
}
