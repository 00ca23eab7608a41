//! First-moment check of the subcritical boundary measure: with the plain
//! log-correlated model at kappa0 = 0, the mean mass of [0, 1] is exactly the
//! interval length.

use super::common;
use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::runner::run_replicas;
use crate::Result;
use critweld_core::measures::subcritical_measure;
use critweld_core::stats;

pub struct GmcMoment;

impl Experiment for GmcMoment {
    fn name(&self) -> &'static str {
        "exp_gmc_moment"
    }

    fn anchor(&self) -> &'static str {
        "boundary measure first moment: E exp((gamma/2) h_eps) eps^{gamma^2/4} dz = dz"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        let mut d = vec![("gamma", "1.0"), ("eps_j", "8"), ("ci_mult", "3")];
        d.extend_from_slice(&common::GRID_DEFAULTS);
        d
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let gamma = ctx.params.f64("gamma")?;
        let eps = 2f64.powi(-(ctx.params.u64("eps_j")? as i32));
        let ci = ctx.params.f64("ci_mult")?;
        let sampler = common::field_sampler(&ctx.params)?;
        let masses: Vec<f64> = run_replicas(ctx.replicas, ctx.seed, ctx.workers, |s| {
            let f = sampler.sample_neumann(s);
            subcritical_measure(&f, gamma, eps).map(|m| m.mass(0.0, 1.0))
        })
        .into_iter()
        .collect::<critweld_core::error::Result<_>>()?;

        let mean = stats::mean(&masses);
        let se = stats::std_error(&masses);
        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);
        report.stat("mean_mass", mean);
        report.stat("std_error", se);
        report.series(
            "mass_histogram",
            histogram(&masses, 24),
        );
        report.criterion(
            "first_moment_within_ci",
            (mean - 1.0).abs() <= ci * se,
            mean,
            &format!("|mean - 1| <= {ci}*SE = {}", ci * se),
        );
        Ok(report)
    }
}

fn histogram(xs: &[f64], bins: usize) -> Vec<(f64, f64)> {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = ((hi - lo) / bins as f64).max(1e-12);
    let mut counts = vec![0.0; bins];
    for &x in xs {
        let b = (((x - lo) / w) as usize).min(bins - 1);
        counts[b] += 1.0;
    }
    counts.into_iter().enumerate().map(|(i, c)| (lo + (i as f64 + 0.5) * w, c)).collect()
}
