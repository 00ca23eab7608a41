//! Deterministic exactness of the Loewner engine: zero-driving closed forms
//! for the forward map, reverse flow and swallowing times, and capacity
//! additivity of composed slit maps.

use super::Experiment;
use crate::config::RunContext;
use crate::report::Report;
use crate::Result;
use critweld_core::loewner::{
    forward_map, reverse_map, swallow_time, DrivingFunction, LoewnerFlow,
};
use critweld_core::numerics::half_plane_sqrt;
use num_complex::Complex64;

pub struct LoewnerExact;

impl Experiment for LoewnerExact {
    fn name(&self) -> &'static str {
        "exp_loewner_exact"
    }

    fn anchor(&self) -> &'static str {
        "W = 0 closed forms: g_t(z) = sqrt(z^2 + 4t), f_t(x) = sqrt(x^2 - 4t), sigma(x) = x^2/4; capacity a_t = 2t additive"
    }

    fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        vec![("dt", "1e-4"), ("tol", "1e-9")]
    }

    fn run(&self, ctx: &RunContext) -> Result<Report> {
        let dt = ctx.params.f64("dt")?;
        let tol = ctx.params.f64("tol")?;
        let n = (1.0 / dt).round() as usize;
        let zero = DrivingFunction::new(dt, vec![0.0; n + 1], Some(0.0))?;
        let fwd = LoewnerFlow::forward(zero.clone());
        let rev = LoewnerFlow::reverse(zero);

        let mut report = Report::new(self.name(), self.anchor(), ctx.seed, ctx.replicas, &ctx.params);

        let mut worst_fwd: f64 = 0.0;
        for &t in &[0.25, 0.5, 1.0] {
            for &(re, im) in &[(0.7, 0.4), (-1.3, 0.9), (0.3, 1.7), (2.0, 0.05)] {
                let z = Complex64::new(re, im);
                let g = forward_map(&fwd, t, z, false)?;
                let exact = half_plane_sqrt(z * z + Complex64::new(4.0 * t, 0.0));
                worst_fwd = worst_fwd.max((g - exact).norm() / exact.norm());
            }
        }
        report.stat("forward_closed_form_rel_err", worst_fwd);
        report.criterion("forward_closed_form", worst_fwd <= tol, worst_fwd, &format!("<= {tol}"));

        let mut worst_rev: f64 = 0.0;
        for &t in &[0.25, 1.0] {
            for &x in &[2.5f64, -3.0, 4.0] {
                let f = reverse_map(&rev, t, Complex64::new(x, 0.0))?;
                let exact = x.signum() * (x * x - 4.0 * t).sqrt();
                worst_rev = worst_rev.max((f.re - exact).abs() / exact.abs());
            }
        }
        report.stat("reverse_closed_form_rel_err", worst_rev);
        report.criterion("reverse_closed_form", worst_rev <= tol, worst_rev, &format!("<= {tol}"));

        let mut worst_sigma: f64 = 0.0;
        for &x in &[0.4f64, 1.0, -1.6, 1.9] {
            let s = swallow_time(&rev, x)?.expect("swallow within range");
            worst_sigma = worst_sigma.max((s - x * x / 4.0).abs() / (x * x / 4.0));
        }
        report.stat("swallow_closed_form_rel_err", worst_sigma);
        report.criterion("swallow_closed_form", worst_sigma <= tol, worst_sigma, &format!("<= {tol}"));

        // capacity additivity: composing [0, t1] and [t1, t2] equals [0, t2]
        let z = Complex64::new(0.35, 0.9);
        let mid = forward_map(&fwd, 0.4, z, false)?;
        let two = half_plane_sqrt(mid * mid + Complex64::new(4.0 * 0.6, 0.0));
        let direct = forward_map(&fwd, 1.0, z, false)?;
        let add_err = (two - direct).norm() / direct.norm();
        report.stat("capacity_additivity_rel_err", add_err);
        report.criterion("capacity_additivity", add_err <= tol, add_err, &format!("<= {tol}"));
        Ok(report)
    }
}
