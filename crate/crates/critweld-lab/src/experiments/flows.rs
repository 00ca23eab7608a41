//! Shared-noise reverse-flow convergence as κ_n ↑ 4: the Carathéodory+
//! distance to the κ = 4 flow decreases along the ladder in almost every
//! trial, and the rescaled swallowing times σ_n(√κ_n x / 2) increase
//! monotonically in n on the whole mesh in every trial.

use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::runner::run_replicas;
use crate::Result;
use critweld_core::loewner::{
    caratheodory_plus_distance, sample_driving, scale_driving, swallow_time, LoewnerFlow,
};
use critweld_core::stats;

pub struct FlowConvergence;

impl Experiment for FlowConvergence {
    fn name(&self) -> &'static str {
        "exp_flows"
    }

    fn anchor(&self) -> &'static str {
        "coupled reverse flows converge in the Caratheodory+ topology as kappa_n -> 4; sigma_n(sqrt(kappa_n) x/2) increases in n"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("n_ladder", "6"),
            ("t_max", "0.5"),
            ("dt", "1e-4"),
            ("mesh_eps", "0.1"),
            ("mesh_k", "1.2"),
            ("sigma_mesh", "33"),
            ("decrease_fraction", "0.95"),
        ]
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let n_ladder = ctx.params.u64("n_ladder")? as usize;
        let t_max = ctx.params.f64("t_max")?;
        let dt = ctx.params.f64("dt")?;
        let eps = ctx.params.f64("mesh_eps")?;
        let k_half = ctx.params.f64("mesh_k")?;
        let n_sigma = ctx.params.usize("sigma_mesh")?;
        let need = ctx.params.f64("decrease_fraction")?;

        let kappas: Vec<f64> = (1..=n_ladder).map(|n| 4.0 - 2f64.powi(-(n as i32))).collect();
        type Row = critweld_core::error::Result<(Vec<f64>, bool)>;
        let rows: Vec<Row> = run_replicas(ctx.replicas, ctx.seed, ctx.workers, |s| {
            let unit = sample_driving(1.0, t_max, dt, s)?;
            let limit = LoewnerFlow::reverse(scale_driving(&unit, 4.0));
            let mut dists = Vec::with_capacity(kappas.len());
            let mut monotone = true;
            let mut prev_sigma: Option<Vec<f64>> = None;
            for &kappa in &kappas {
                let flow = LoewnerFlow::reverse(scale_driving(&unit, kappa));
                dists.push(caratheodory_plus_distance(&flow, &limit, t_max, eps, k_half)?);
                // rescaled swallowing times sigma_n(sqrt(kappa_n)/2 * x)
                let sk = kappa.sqrt() / 2.0;
                let mut sig = Vec::with_capacity(n_sigma);
                for i in 0..n_sigma {
                    let x = -k_half + 2.0 * k_half * i as f64 / (n_sigma - 1) as f64;
                    let v = swallow_time(&flow, sk * x)?.unwrap_or(t_max).min(t_max);
                    sig.push(v);
                }
                if let Some(prev) = &prev_sigma {
                    if prev.iter().zip(&sig).any(|(a, b)| b + 1e-12 < *a) {
                        monotone = false;
                    }
                }
                prev_sigma = Some(sig);
            }
            // the limit flow bounds the ladder from above as well
            if let Some(prev) = &prev_sigma {
                for (i, a) in prev.iter().enumerate() {
                    let x = -k_half + 2.0 * k_half * i as f64 / (n_sigma - 1) as f64;
                    let v = swallow_time(&limit, x)?.unwrap_or(t_max).min(t_max);
                    if v + 1e-12 < *a {
                        monotone = false;
                    }
                }
            }
            Ok((dists, monotone))
        });
        let rows: Vec<(Vec<f64>, bool)> = rows.into_iter().collect::<critweld_core::error::Result<_>>()?;

        let decreasing = rows
            .iter()
            .filter(|(d, _)| d.windows(2).all(|w| w[1] < w[0]))
            .count();
        let frac = decreasing as f64 / rows.len() as f64;
        let monotone_all = rows.iter().all(|(_, m)| *m);

        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);
        let mut med = Vec::with_capacity(kappas.len());
        for (i, &kappa) in kappas.iter().enumerate() {
            let vals: Vec<f64> = rows.iter().map(|(d, _)| d[i]).collect();
            let m = stats::median(&vals);
            report.stat(&format!("median_distance_kappa_{kappa}"), m);
            med.push((i as f64 + 1.0, m));
        }
        report.series("median_caratheodory_distance", med);
        report.stat("fraction_strictly_decreasing", frac);
        report.criterion(
            "distance_decreasing_fraction",
            frac >= need,
            frac,
            &format!(">= {need} of trials strictly decreasing in n"),
        );
        report.criterion(
            "swallow_monotone_every_trial",
            monotone_all,
            if monotone_all { 1.0 } else { 0.0 },
            "rescaled swallowing times non-decreasing in n on the full mesh in every trial",
        );
        Ok(report)
    }
}
