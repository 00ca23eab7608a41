//! Zoom-in at a measure-typical point: under importance sampling by the
//! truncated-measure mass, the recentred radial scale process at the sampled
//! point, minus the 2s drift, has the increment statistics of −BES(3) run at
//! speed 2 from 2β; both sides are Monte Carlo, compared per increment.

use super::common;
use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::Result;
use critweld_core::field::LN_2;
use critweld_core::paths::sample_bessel3;
use critweld_core::stats;
use critweld_core::RngStream;

pub struct ZoomIn;

impl Experiment for ZoomIn {
    fn name(&self) -> &'static str {
        "exp_zoom"
    }

    fn anchor(&self) -> &'static str {
        "zooming in at a derivative-measure typical point yields the (2,2)-wedge radial law (-BES3_{2s} + 2s + const)"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        let mut d = vec![
            ("beta", "5.0"),
            ("eps_j", "12"),
            ("s_window_lo", "0.5"),
            ("s_window_hi", "2.1"),
            ("oracle_n", "20000"),
            ("ess_min", "500"),
            ("max_replicas", "120000"),
            ("block", "4000"),
            ("ci_mult", "3"),
        ];
        d.extend_from_slice(&common::GRID_DEFAULTS);
        d
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let beta = ctx.params.f64("beta")?;
        let eps = 2f64.powi(-(ctx.params.u64("eps_j")? as i32));
        let (s_lo, s_hi) = (ctx.params.f64("s_window_lo")?, ctx.params.f64("s_window_hi")?);
        let oracle_n = ctx.params.u64("oracle_n")?;
        let ess_min = ctx.params.f64("ess_min")?;
        let ci = ctx.params.f64("ci_mult")?;
        let sampler = common::field_sampler(&ctx.params)?;

        // dyadic depths inside the window
        let j_max = ctx.params.u64("grid_jmax")? as u32;
        let js: Vec<u32> = (1..=j_max).filter(|&j| {
            let s = j as f64 * LN_2;
            s >= s_lo && s <= s_hi
        }).collect();
        if js.len() < 2 {
            return Err(crate::LabError::Usage("s window contains fewer than two dyadic depths".into()));
        }

        // replicas are drawn in deterministic blocks until the importance
        // weights reach the configured effective sample size; ctx.replicas is
        // the initial block count
        let max_replicas = ctx.params.u64("max_replicas")?.max(ctx.replicas);
        let block = ctx.params.u64("block")?.max(ctx.replicas);
        let (rows, _ess) = common::rooted_draws_until(
            &sampler, beta, eps, ctx.seed, ctx.workers, ess_min, block, max_replicas,
        )?;

        // field-side increments of h(s) - 2s between consecutive window depths
        let mut field_incs: Vec<Vec<f64>> = vec![Vec::new(); js.len() - 1];
        let mut weights = Vec::new();
        for d in &rows {
            if d.weight <= 0.0 {
                continue;
            }
            weights.push(d.weight);
            for k in 0..js.len() - 1 {
                let (j0, j1) = (js[k], js[k + 1]);
                let inc = d.scale_values[j1 as usize] - d.scale_values[j0 as usize]
                    - 2.0 * (j1 - j0) as f64 * LN_2;
                field_incs[k].push(inc);
            }
        }
        let ess = stats::effective_sample_size(&weights);

        // oracle: direct BES(3) at speed 2 started from 2 beta, the increments
        // of -B_{2s}
        let s_pts: Vec<f64> = js.iter().map(|&j| 2.0 * j as f64 * LN_2).collect();
        let mut grid = vec![0.0];
        grid.extend_from_slice(&s_pts);
        let mut oracle_incs: Vec<Vec<f64>> = vec![Vec::new(); js.len() - 1];
        for r in 0..oracle_n {
            let p = sample_bessel3(&grid, 2.0 * beta, RngStream::new(ctx.seed ^ 0x5EED, r))
                .map_err(crate::LabError::from)?;
            for k in 0..js.len() - 1 {
                oracle_incs[k].push(-(p.values()[k + 2] - p.values()[k + 1]));
            }
        }

        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);
        report.stat("effective_sample_size", ess);
        report.criterion("effective_sample_size", ess >= ess_min, ess, &format!("ESS >= {ess_min}"));

        for k in 0..js.len() - 1 {
            let fm = common::weighted_mean(&field_incs[k], &weights);
            let fse = common::weighted_se(&field_incs[k], &weights);
            let om = stats::mean(&oracle_incs[k]);
            let ose = stats::std_error(&oracle_incs[k]);
            let se = (fse * fse + ose * ose).sqrt();
            let label = format!("increment_{}_{}", js[k], js[k + 1]);
            report.stat(&format!("{label}_field_mean"), fm);
            report.stat(&format!("{label}_oracle_mean"), om);
            report.criterion(
                &format!("{label}_mean_matches"),
                (fm - om).abs() <= ci * se,
                fm - om,
                &format!("|mean diff| <= {ci}*SE = {}", ci * se),
            );
            let fv = common::weighted_var(&field_incs[k], &weights);
            let ov = stats::variance(&oracle_incs[k]);
            // variance-of-variance SE via normal approximation
            let vse = ((2.0 * fv * fv / ess.max(2.0))
                + 2.0 * ov * ov / oracle_incs[k].len() as f64)
                .sqrt();
            report.stat(&format!("{label}_field_var"), fv);
            report.stat(&format!("{label}_oracle_var"), ov);
            report.criterion(
                &format!("{label}_var_matches"),
                (fv - ov).abs() <= ci * vse,
                fv - ov,
                &format!("|var diff| <= {ci}*SE = {}", ci * vse),
            );
        }
        Ok(report)
    }
}
