//! Williams decomposition: the infimum of a 3-d Bessel process after its
//! first passage of a level L is uniform on [0, L]. Samples come from direct
//! Bessel simulation with in-step bridge minima and the exact tail infimum.

use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::runner::run_replicas;
use crate::Result;
use crate::LabError;
use critweld_core::stats;
use critweld_core::RngStream;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct WilliamsDecomposition;

/// One θ sample: run BES(3) at speed 2 (as |3-d BM|) from 0 until it first
/// reaches `level`, keep going to `exit_level`, track the running minimum
/// after the first passage with Brownian-bridge in-step minima, then combine
/// with the exact future infimum exit_level·U from the exit.
fn sample_theta(level: f64, exit_level: f64, ds: f64, stream: RngStream) -> Option<f64> {
    let mut rng = stream.rng();
    let speed = 2.0f64;
    let mut pos = [0.0f64; 3];
    let mut r = 0.0f64;
    let mut passed = false;
    let mut min_after = f64::INFINITY;
    let max_steps = 10_000_000usize;
    for _ in 0..max_steps {
        // coarser steps far above the minimum-tracking region
        let step = if r > 1.5 * level { 8.0 * ds } else { ds };
        let sd = (speed * step).sqrt();
        let prev = r;
        for p in pos.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p += sd * z;
        }
        r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
        if passed {
            // in-step minimum of the radial motion, Brownian-bridge sample
            let u: f64 = rng.random();
            let d = r - prev;
            let m = 0.5 * ((prev + r) - (d * d - 2.0 * speed * step * u.ln()).sqrt());
            min_after = min_after.min(m.min(r));
        } else if r >= level {
            passed = true;
            min_after = level;
        }
        if passed && r >= exit_level {
            // exact future infimum from the current radius
            let u: f64 = rng.random();
            return Some(min_after.min(r * u));
        }
    }
    None
}

impl Experiment for WilliamsDecomposition {
    fn name(&self) -> &'static str {
        "exp_williams"
    }

    fn anchor(&self) -> &'static str {
        "theta = inf of BES(3) after first passage of C + beta is Uniform[0, C + beta]"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("c_plus_beta", "5.0"),
            ("exit_factor", "2.0"),
            ("ds", "5e-4"),
            ("p_threshold", "0.01"),
        ]
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let level = ctx.params.f64("c_plus_beta")?;
        let exit = level * ctx.params.f64("exit_factor")?;
        let ds = ctx.params.f64("ds")?;
        let p_min = ctx.params.f64("p_threshold")?;

        let thetas: Vec<Option<f64>> = run_replicas(ctx.replicas, ctx.seed, ctx.workers, |s| {
            sample_theta(level, exit, ds, s)
        });
        let thetas: Vec<f64> = thetas
            .into_iter()
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| LabError::Usage("a Bessel path failed to reach the exit level".into()))?;

        let out = stats::ks_test(&thetas, |x| (x / level).clamp(0.0, 1.0))?;
        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);
        report.stat("ks_statistic", out.statistic);
        report.stat("ks_p_value", out.p_value);
        report.stat("theta_mean", stats::mean(&thetas));
        report.series(
            "theta_ecdf",
            sorted_ecdf(&thetas, 64),
        );
        report.criterion(
            "theta_uniform",
            out.p_value > p_min,
            out.p_value,
            &format!("KS p > {p_min} against Uniform[0, {level}]"),
        );
        Ok(report)
    }
}

fn sorted_ecdf(xs: &[f64], points: usize) -> Vec<(f64, f64)> {
    let mut v = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    (0..points)
        .map(|k| {
            let i = k * (n - 1) / (points - 1);
            (v[i], (i + 1) as f64 / n as f64)
        })
        .collect()
}
