//! Rooted-measure description: under importance sampling by the truncated
//! measure, the gap process X_s = −h_{e^{−s}}(z) + 2s + 2β at a typical point
//! z has the exact BES(3) marginal (speed 2, started from 2β).

use super::common;
use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::Result;
use critweld_core::field::LN_2;
use critweld_core::paths::bessel3_cdf;
use critweld_core::stats;

pub struct RootedMeasure;

impl Experiment for RootedMeasure {
    fn name(&self) -> &'static str {
        "exp_rooted"
    }

    fn anchor(&self) -> &'static str {
        "sampling z from the truncated derivative measure reweights the scale process at z to -BES3_{2s} + 2s + 2 beta"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        let mut d = vec![
            ("beta", "5.0"),
            ("eps_j", "12"),
            ("probe_j", "2"),
            ("p_threshold", "0.01"),
            ("ess_min", "100"),
            ("max_replicas", "40000"),
            ("block", "2000"),
        ];
        d.extend_from_slice(&common::GRID_DEFAULTS);
        d
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let beta = ctx.params.f64("beta")?;
        let eps = 2f64.powi(-(ctx.params.u64("eps_j")? as i32));
        let probe_j = ctx.params.u64("probe_j")? as u32;
        let p_min = ctx.params.f64("p_threshold")?;
        let ess_min = ctx.params.f64("ess_min")?;
        let sampler = common::field_sampler(&ctx.params)?;

        let max_replicas = ctx.params.u64("max_replicas")?.max(ctx.replicas);
        let block = ctx.params.u64("block")?.max(ctx.replicas);
        let (rows, _ess) = common::rooted_draws_until(
            &sampler, beta, eps, ctx.seed, ctx.workers, ess_min, block, max_replicas,
        )?;

        let s_probe = probe_j as f64 * LN_2;
        let mut samples = Vec::new();
        let mut weights = Vec::new();
        for d in &rows {
            if d.weight <= 0.0 {
                continue;
            }
            let x = -d.scale_values[probe_j as usize] + 2.0 * s_probe + 2.0 * beta;
            samples.push(x);
            weights.push(d.weight);
        }
        let out = stats::ks_test_weighted(&samples, &weights, |y| {
            bessel3_cdf(2.0 * beta, 2.0, s_probe, y)
        })?;

        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);
        report.stat("ks_statistic", out.statistic);
        report.stat("ks_p_value", out.p_value);
        report.stat("effective_sample_size", out.n_eff);
        report.criterion(
            "weighted_gap_marginal_is_bessel3",
            out.p_value > p_min,
            out.p_value,
            &format!("KS p > {p_min}"),
        );
        report.criterion(
            "effective_sample_size",
            out.n_eff >= ess_min,
            out.n_eff,
            &format!("ESS >= {ess_min}"),
        );
        Ok(report)
    }
}
