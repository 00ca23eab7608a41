//! Girsanov–Bessel exchange: reweighting Brownian paths by the martingale
//! M_t turns X_u = −B_u + γαu + β into a 3-d Bessel process at speed α; the
//! weighted marginal at t is tested against the exact Bessel cdf.

use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::runner::run_replicas;
use crate::Result;
use critweld_core::numerics::uniform_grid;
use critweld_core::paths::{bessel3_cdf, martingale_weight, sample_bm};
use critweld_core::stats;

pub struct GirsanovBessel;

impl Experiment for GirsanovBessel {
    fn name(&self) -> &'static str {
        "exp_rn"
    }

    fn anchor(&self) -> &'static str {
        "M_t = (-B_t + g a t + b) 1{positive} exp(g B_t - g^2 a t/2) is a martingale; under M_t the front is BES(3) at speed a"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("beta", "1.0"),
            ("gamma_w", "1.0"),
            ("alpha_var", "2.0"),
            ("t", "1.0"),
            ("dt", "1e-3"),
            ("p_threshold", "0.01"),
            ("ess_min", "100"),
        ]
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let beta = ctx.params.f64("beta")?;
        let gamma_w = ctx.params.f64("gamma_w")?;
        let alpha = ctx.params.f64("alpha_var")?;
        let t = ctx.params.f64("t")?;
        let dt = ctx.params.f64("dt")?;
        let p_min = ctx.params.f64("p_threshold")?;
        let ess_min = ctx.params.f64("ess_min")?;
        let grid = uniform_grid(t, dt);

        type Row = critweld_core::error::Result<(f64, f64)>;
        let rows: Vec<Row> = run_replicas(ctx.replicas, ctx.seed, ctx.workers, |s| {
            let path = sample_bm(&grid, 0.0, alpha, 0.0, s)?;
            let w = martingale_weight(&path, beta, gamma_w, alpha, t)?;
            let x_t = -path.values().last().unwrap() + gamma_w * alpha * t + beta;
            Ok((x_t, w))
        });
        let rows: Vec<(f64, f64)> = rows.into_iter().collect::<critweld_core::error::Result<_>>()?;
        let samples: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let weights: Vec<f64> = rows.iter().map(|r| r.1).collect();

        // martingale property: E M_t = M_0 = beta
        let mean_w = stats::mean(&weights);
        let se_w = stats::std_error(&weights);

        let out = stats::ks_test_weighted(&samples, &weights, |y| bessel3_cdf(beta, alpha, t, y))?;

        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);
        report.stat("mean_weight", mean_w);
        report.stat("mean_weight_se", se_w);
        report.stat("ks_statistic", out.statistic);
        report.stat("ks_p_value", out.p_value);
        report.stat("effective_sample_size", out.n_eff);
        report.criterion(
            "martingale_mean_conserved",
            (mean_w - beta).abs() <= 4.0 * se_w,
            mean_w,
            &format!("|E M_t - {beta}| <= 4 SE"),
        );
        report.criterion(
            "weighted_marginal_is_bessel3",
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
