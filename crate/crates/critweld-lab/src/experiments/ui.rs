//! Uniform-integrability diagnostic for the truncated derivative measure:
//! the tail functional E[mass · 1{mass > K}] of the unit-interval mass is
//! bounded uniformly over the scale ladder and decays along the K ladder.

use super::common;
use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::runner::run_replicas;
use crate::Result;
use critweld_core::measures::truncated_derivative_measure;

pub struct UniformIntegrability;

impl Experiment for UniformIntegrability {
    fn name(&self) -> &'static str {
        "exp_ui"
    }

    fn anchor(&self) -> &'static str {
        "the truncated derivative masses are uniformly integrable over the scale ladder"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        let mut d = vec![
            ("beta", "5.0"),
            ("eps_js", "6,9,12"),
            ("k_ladder", "1,2,4,8,16"),
            ("uniformity_ratio", "1.6"),
        ];
        d.extend_from_slice(&common::GRID_DEFAULTS);
        d
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let beta = ctx.params.f64("beta")?;
        let eps_js = ctx.params.f64_list("eps_js")?;
        let ks = ctx.params.f64_list("k_ladder")?;
        let uni = ctx.params.f64("uniformity_ratio")?;
        let sampler = common::field_sampler(&ctx.params)?;

        type Row = critweld_core::error::Result<Vec<f64>>;
        let rows: Vec<Row> = run_replicas(ctx.replicas, ctx.seed, ctx.workers, |s| {
            let f = sampler.sample_neumann(s);
            eps_js
                .iter()
                .map(|&j| {
                    let m = truncated_derivative_measure(&f, beta, 2f64.powf(-j))?;
                    Ok(m.mass(0.0, 1.0))
                })
                .collect()
        });
        let rows: Vec<Vec<f64>> = rows.into_iter().collect::<critweld_core::error::Result<_>>()?;

        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);
        // tail(K, eps) = E[mass 1{mass > K}]
        let mut sup_tails = Vec::with_capacity(ks.len());
        let mut worst_ratio: f64 = 0.0;
        for &k in &ks {
            let mut sup: f64 = 0.0;
            let mut inf = f64::INFINITY;
            for (ei, &j) in eps_js.iter().enumerate() {
                let tail: f64 = rows
                    .iter()
                    .map(|r| if r[ei] > k { r[ei] } else { 0.0 })
                    .sum::<f64>()
                    / rows.len() as f64;
                report.stat(&format!("tail_K{k}_epsj{j}"), tail);
                sup = sup.max(tail);
                inf = inf.min(tail);
            }
            sup_tails.push(sup);
            if inf > 0.0 {
                worst_ratio = worst_ratio.max(sup / inf);
            }
        }
        report.series(
            "sup_tail_vs_K",
            ks.iter().cloned().zip(sup_tails.iter().cloned()).collect(),
        );
        let nonincreasing = sup_tails.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        report.criterion(
            "sup_tail_nonincreasing_in_K",
            nonincreasing,
            *sup_tails.last().unwrap(),
            "sup over eps of the tail functional non-increasing along the K ladder",
        );
        // uniform integrability shows up as eps-uniform tails: the spread of
        // the tail functional over the scale ladder stays bounded at every K
        report.stat("worst_eps_ratio", worst_ratio);
        report.criterion(
            "tail_uniform_over_scales",
            worst_ratio <= uni,
            worst_ratio,
            &format!("max over K of (sup_eps tail / inf_eps tail) <= {uni}"),
        );
        Ok(report)
    }
}
