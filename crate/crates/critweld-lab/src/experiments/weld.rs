//! Curve side-length matching: the quantum lengths measured along the two
//! sides of an independent SLE₄ on a (2,1)-wedge field agree in the fine-scale
//! limit; the relative mismatch decreases along the scale ladder.

use super::common;
use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::runner::run_replicas;
use crate::Result;
use critweld_core::field::Parametrisation;
use critweld_core::loewner::sample_driving;
use critweld_core::stats;
use critweld_core::wedge::sample_wedge;
use critweld_core::welding::side_lengths;

pub struct LengthMatching;

impl Experiment for LengthMatching {
    fn name(&self) -> &'static str {
        "exp_weld"
    }

    fn anchor(&self) -> &'static str {
        "quantum boundary lengths along the two sides of an independent SLE4 on a (2,1)-wedge agree"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        let mut d = vec![
            ("eps_js", "6,8,10"),
            ("beta", "5.0"),
            ("capacity", "0.5"),
            ("dt", "1e-4"),
            ("n_sub", "128"),
        ];
        d.extend_from_slice(&common::GRID_DEFAULTS);
        // deeper scales so the |psi'|-matched local scale stays resolved
        d.push(("grid_jmax", "14"));
        d
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let eps_js = ctx.params.f64_list("eps_js")?;
        let beta = ctx.params.f64("beta")?;
        let t = ctx.params.f64("capacity")?;
        let dt = ctx.params.f64("dt")?;
        let n_sub = ctx.params.usize("n_sub")?;
        let sampler = common::field_sampler(&ctx.params)?;

        type Row = critweld_core::error::Result<Vec<f64>>;
        let rows: Vec<Row> = run_replicas(ctx.replicas, ctx.seed, ctx.workers, |s| {
            let w = sample_wedge(2.0, 1.0, Parametrisation::LastExit, &sampler, s.fork(1))?;
            let d = sample_driving(4.0, t, dt, s.fork(2))?;
            eps_js
                .iter()
                .map(|&j| {
                    let (l, r) = side_lengths(&w.field, &d, t, 2f64.powf(-j), beta, n_sub)?;
                    Ok(if l + r > 0.0 { (l - r).abs() / (l + r) } else { 1.0 })
                })
                .collect()
        });
        let rows: Vec<Vec<f64>> = rows.into_iter().collect::<critweld_core::error::Result<_>>()?;

        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);
        let mut medians = Vec::with_capacity(eps_js.len());
        for (k, &j) in eps_js.iter().enumerate() {
            let vals: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let m = stats::median(&vals);
            report.stat(&format!("median_mismatch_epsj{j}"), m);
            medians.push(m);
        }
        report.series(
            "median_mismatch_vs_epsj",
            eps_js.iter().cloned().zip(medians.iter().cloned()).collect(),
        );
        report.criterion(
            "mismatch_decreasing_in_scale",
            common::strictly_decreasing(&medians),
            *medians.last().unwrap(),
            "median |L-R|/(L+R) strictly decreasing along the eps ladder",
        );
        Ok(report)
    }
}
