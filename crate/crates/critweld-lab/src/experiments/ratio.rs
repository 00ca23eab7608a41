//! Near-critical ratio trend: on shared wedge fields, the renormalized
//! subcritical masses (2−γ)^{-1} ν^γ track a fitted constant multiple of the
//! truncated critical mass better and better as γ ↑ 2, and the fitted
//! constant is stable across subintervals.

use super::common;
use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::runner::run_replicas;
use crate::{LabError, Result};
use critweld_core::field::Parametrisation;
use critweld_core::measures::{subcritical_measure, truncated_derivative_measure};
use critweld_core::stats;
use critweld_core::wedge::sample_wedge;

pub struct RatioTrend;

const INTERVALS: [(f64, f64); 3] = [(0.0, 1.0), (0.0, 0.5), (0.5, 1.0)];

impl Experiment for RatioTrend {
    fn name(&self) -> &'static str {
        "exp_ratio"
    }

    fn anchor(&self) -> &'static str {
        "nu^gamma_h / (2 - gamma) -> 2 nu_h as gamma -> 2 on a (2,1)-wedge"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        let mut d = vec![
            ("gamma_ladder", "1.8,1.9,1.95"),
            ("eps_j", "12"),
            ("beta", "5"),
            ("stability_tol", "0.20"),
        ];
        d.extend_from_slice(&common::GRID_DEFAULTS);
        d
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let ladder = ctx.params.f64_list("gamma_ladder")?;
        if ladder.len() < 3 {
            return Err(LabError::Usage("gamma_ladder needs at least 3 entries".into()));
        }
        let eps = 2f64.powi(-(ctx.params.u64("eps_j")? as i32));
        let beta = ctx.params.f64("beta")?;
        let tol = ctx.params.f64("stability_tol")?;
        let sampler = common::field_sampler(&ctx.params)?;

        // per replica: one (2,1)-wedge field; all measures share its noise
        type Row = critweld_core::error::Result<Vec<(Vec<f64>, f64)>>;
        let rows: Vec<Row> = run_replicas(ctx.replicas, ctx.seed, ctx.workers, |s| {
            let w = sample_wedge(2.0, 1.0, Parametrisation::LastExit, &sampler, s)?;
            let crit = truncated_derivative_measure(&w.field, beta, eps)?;
            let mut per_interval = Vec::with_capacity(INTERVALS.len());
            for &(a, b) in &INTERVALS {
                let crit_mass = crit.mass(a, b);
                let mut subs = Vec::with_capacity(ladder.len());
                for &g in &ladder {
                    let m = subcritical_measure(&w.field, g, eps)?;
                    subs.push(m.mass(a, b) / (2.0 - g));
                }
                per_interval.push((subs, crit_mass));
            }
            Ok(per_interval)
        });
        let rows: Vec<Vec<(Vec<f64>, f64)>> = rows.into_iter().collect::<critweld_core::error::Result<_>>()?;

        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);

        // fitted constant per interval, from the top of the ladder
        let top = ladder.len() - 1;
        let mut fitted = Vec::with_capacity(INTERVALS.len());
        for (iv, _) in INTERVALS.iter().enumerate() {
            let logs: Vec<f64> = rows
                .iter()
                .filter(|r| r[iv].1 > 0.0 && r[iv].0[top] > 0.0)
                .map(|r| (r[iv].0[top] / r[iv].1).ln())
                .collect();
            fitted.push(stats::median(&logs).exp());
        }
        for (k, c) in fitted.iter().enumerate() {
            report.stat(&format!("fitted_c_interval_{k}"), *c);
        }

        // medians of |log(m_gamma / (c * crit))| across the ladder on [0,1]
        let c0 = fitted[0];
        let mut medians = Vec::with_capacity(ladder.len());
        for (gi, _) in ladder.iter().enumerate() {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r[0].1 > 0.0 && r[0].0[gi] > 0.0)
                .map(|r| (r[0].0[gi] / (c0 * r[0].1)).ln().abs())
                .collect();
            medians.push(stats::median(&vals));
        }
        report.series(
            "median_abs_log_ratio",
            ladder.iter().cloned().zip(medians.iter().cloned()).collect(),
        );
        for (g, m) in ladder.iter().zip(&medians) {
            report.stat(&format!("median_abs_log_ratio_gamma_{g}"), *m);
        }
        report.criterion(
            "ratio_median_decreasing_in_gamma",
            common::strictly_decreasing(&medians),
            *medians.last().unwrap(),
            "median |log ratio| strictly decreasing along the gamma ladder",
        );

        let cmax = fitted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let cmin = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = (cmax - cmin) / fitted[0];
        report.stat("fitted_c_relative_spread", spread);
        report.criterion(
            "fitted_c_stable_across_intervals",
            spread <= 2.0 * tol,
            spread,
            &format!("relative spread of fitted c over intervals <= {}", 2.0 * tol),
        );
        report.note("the fitted constant c replaces the paper's literal factor 2, whose value depends on the kernel normalization; only constancy across intervals is asserted");
        Ok(report)
    }
}
