//! Quantum wedge assembly: radial-process samplers for the (γ, α) family in
//! the last-exit / unit-circle / strip parametrisations, field assembly on the
//! boundary grid, reparametrisation by the Q-line crossing, the strip ↔
//! half-plane coordinate change and the zoom normalization.

use crate::error::{CoreError, Result};
use crate::field::{
    wedge_mean_radial, BoundaryFieldGrid, FieldModel, FieldSampler, Parametrisation, LN_2,
};
use crate::measures::truncated_derivative_measure;
use crate::paths::{sample_bm, sample_conditioned_below_line, Path, PathMeta};
use crate::rng::RngStream;
use alloc::string::String;
use alloc::vec::Vec;

/// Step of the double-sided radial grid in s.
pub const RADIAL_DS: f64 = 1.0 / 256.0;

/// One sampled wedge: parameters, the injected double-sided radial path and
/// the assembled boundary field.
#[derive(Debug, Clone)]
pub struct WedgeSample {
    pub gamma: f64,
    pub alpha: f64,
    pub q: f64,
    pub parametrisation: Parametrisation,
    pub radial: Path,
    pub field: BoundaryFieldGrid,
}

pub fn q_gamma(gamma: f64) -> f64 {
    2.0 / gamma + gamma / 2.0
}

fn check_wedge_params(gamma: f64, alpha: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(CoreError::InvalidArgument("gamma must lie in (0, 2]"));
    }
    let q = q_gamma(gamma);
    let critical_pair = (gamma - 2.0).abs() < 1e-12 && (alpha - 2.0).abs() < 1e-12;
    if !(alpha < q - 1e-12 || critical_pair) {
        return Err(CoreError::InvalidArgument("requires alpha < Q (or the (2,2) wedge)"));
    }
    Ok(q)
}

/// Double-sided radial path h_rad(e^{−s}) of a (γ, α)-wedge on a uniform grid
/// over [s_lo, s_hi], the two sides independent and sharing the value 0 at
/// s = 0 (speed-2 convention throughout).
pub fn sample_wedge_radial(
    gamma: f64,
    alpha: f64,
    par: Parametrisation,
    s_lo: f64,
    s_hi: f64,
    stream: RngStream,
) -> Result<Path> {
    let q = check_wedge_params(gamma, alpha)?;
    if !(s_lo < 0.0 && s_hi > 0.0) {
        return Err(CoreError::InvalidArgument("radial grid must straddle s = 0"));
    }
    let n_pos = libm::ceil(s_hi / RADIAL_DS) as usize;
    let n_neg = libm::ceil(-s_lo / RADIAL_DS) as usize;
    let pos_grid: Vec<f64> = (0..=n_pos).map(|k| k as f64 * RADIAL_DS).collect();
    let neg_grid: Vec<f64> = (0..=n_neg).map(|k| k as f64 * RADIAL_DS).collect();

    // conditioned side (below the Q-line) and free side, per parametrisation
    let (pos, neg) = match par {
        Parametrisation::LastExit | Parametrisation::Strip => {
            // s >= 0: (B_{2s} + alpha s) conditioned below Qs
            let cond =
                sample_conditioned_below_line(&pos_grid, alpha, q, 2.0, stream.fork(1))?;
            // s <= 0: Bhat_{-2s} + alpha s, sampled in u = -s
            let free = sample_bm(&neg_grid, -alpha, 2.0, 0.0, stream.fork(2))?;
            (cond.values().to_vec(), free.values().to_vec())
        }
        Parametrisation::UnitCircle => {
            // s >= 0: free B_{2s} + alpha s
            let free = sample_bm(&pos_grid, alpha, 2.0, 0.0, stream.fork(1))?;
            // s <= 0: conditioned above Qs; in u = -s the gap V_u = radial(-u) + Qu
            // is the same conditioned-positive diffusion, so radial(-u) = -Qu + V_u
            let cond =
                sample_conditioned_below_line(&neg_grid, alpha, q, 2.0, stream.fork(2))?;
            // cond gives Qu - V_u; we need -(Qu) + V_u = -(cond value)
            (free.values().to_vec(), cond.values().iter().map(|v| -v).collect())
        }
    };

    let mut times = Vec::with_capacity(n_pos + n_neg + 1);
    let mut values = Vec::with_capacity(n_pos + n_neg + 1);
    for k in (1..=n_neg).rev() {
        times.push(-(k as f64) * RADIAL_DS);
        values.push(neg[k]);
    }
    times.push(0.0);
    values.push(0.0);
    for k in 1..=n_pos {
        times.push(k as f64 * RADIAL_DS);
        values.push(pos[k]);
    }
    let mut path = Path::new(
        times,
        values,
        PathMeta {
            label: String::from("wedge_radial"),
            params: alloc::vec![
                (String::from("gamma"), gamma),
                (String::from("alpha"), alpha),
            ],
            seed: stream.seed,
            stream_id: stream.stream_id,
        },
    )?;
    if matches!(par, Parametrisation::Strip) {
        let shifted: Vec<f64> =
            path.times().iter().zip(path.values()).map(|(s, v)| v - q * s).collect();
        path = Path::new(path.times().to_vec(), shifted, path.meta().clone())?;
    }
    Ok(path)
}

/// Sample a full wedge: radial per the chosen parametrisation, field assembled
/// with conditioned layers and radial transfer. Asserts the parametrisation
/// invariant on the sampled radial.
pub fn sample_wedge(
    gamma: f64,
    alpha: f64,
    par: Parametrisation,
    sampler: &FieldSampler,
    stream: RngStream,
) -> Result<WedgeSample> {
    let q = check_wedge_params(gamma, alpha)?;
    let grid = sampler.grid();
    let s_hi = (grid.j_max as f64 * LN_2 + 1.0).max(8.0);
    let s_lo = -4.0;
    let radial = sample_wedge_radial(gamma, alpha, par, s_lo, s_hi, stream.fork(10))?;
    debug_assert!(radial_invariant_holds(&radial, q, par));
    let model = FieldModel::Wedge { gamma, alpha, parametrisation: par };
    let mean = move |s: f64| wedge_mean_radial(gamma, alpha, par, s);
    let field = sampler.sample_wedge_field(&radial, &mean, model, stream.fork(11))?;
    Ok(WedgeSample { gamma, alpha, q, parametrisation: par, radial, field })
}

/// Grid check of the defining invariant of each parametrisation.
pub fn radial_invariant_holds(radial: &Path, q: f64, par: Parametrisation) -> bool {
    match par {
        Parametrisation::LastExit => radial
            .times()
            .iter()
            .zip(radial.values())
            .all(|(&s, &v)| s <= 0.0 || v < q * s + 1e-12),
        Parametrisation::UnitCircle => radial
            .times()
            .iter()
            .zip(radial.values())
            .all(|(&s, &v)| s >= 0.0 || v > q * s - 1e-12),
        Parametrisation::Strip => radial
            .times()
            .iter()
            .zip(radial.values())
            .all(|(&s, &v)| s <= 0.0 || v < 1e-12),
    }
}

/// Horizontal strip shift (equivalently a half-plane dilation) taking the
/// sample to the target parametrisation; the quantum surface is unchanged.
///
/// The returned sample's radial grid is the intersection of the shifted grid
/// with the original range; its field is the dilation push-forward resampled
/// onto the standard grid.
pub fn reparametrise(wedge: &WedgeSample, target: Parametrisation) -> Result<WedgeSample> {
    if wedge.parametrisation == target {
        return Ok(wedge.clone());
    }
    match (wedge.parametrisation, target) {
        (Parametrisation::LastExit, Parametrisation::Strip)
        | (Parametrisation::Strip, Parametrisation::LastExit) => {
            Err(CoreError::InvalidArgument("use strip_halfplane_change for strip moves"))
        }
        (Parametrisation::UnitCircle, Parametrisation::LastExit) => shift_to(wedge, target, true),
        (Parametrisation::LastExit, Parametrisation::UnitCircle) => shift_to(wedge, target, false),
        _ => Err(CoreError::InvalidArgument("unsupported reparametrisation")),
    }
}

fn shift_to(wedge: &WedgeSample, target: Parametrisation, last_crossing: bool) -> Result<WedgeSample> {
    let q = wedge.q;
    let times = wedge.radial.times();
    let values = wedge.radial.values();
    // D(s) = radial(s) − Q s; find the last (resp. first) grid crossing of 0.
    let shift_idx = if last_crossing {
        // unit-circle -> last-exit: last grid index with D >= 0
        let mut idx = None;
        for (k, (&s, &v)) in times.iter().zip(values).enumerate() {
            if v - q * s >= -1e-12 {
                idx = Some(k);
            }
        }
        let k = idx.ok_or(CoreError::RangeExhausted("no crossing on the sampled grid"))?;
        if k + 1 >= times.len() {
            return Err(CoreError::RangeExhausted("crossing not resolved within grid range"));
        }
        k
    } else {
        // last-exit -> unit-circle: first grid index (from the far left) with D < 0
        let mut idx = None;
        for (k, (&s, &v)) in times.iter().zip(values).enumerate() {
            if s > 1e-12 {
                break;
            }
            if v - q * s < -1e-12 {
                idx = Some(k);
                break;
            }
        }
        idx.unwrap_or_else(|| times.iter().position(|&s| libm::fabs(s) < 1e-12).unwrap())
    };
    let s0 = times[shift_idx];

    // shifted radial on the covered sub-grid: radial'(s) = radial(s + s0) − Q·s0
    let mut new_times = Vec::new();
    let mut new_values = Vec::new();
    for (k, &s) in times.iter().enumerate() {
        let _ = k;
        let src = s + s0;
        if src < times[0] - 1e-12 || src > *times.last().unwrap() + 1e-12 {
            continue;
        }
        new_times.push(s);
        new_values.push(wedge.radial.value_at(src) - q * s0);
    }
    if new_times.len() < 2 {
        return Err(CoreError::RangeExhausted("shifted radial leaves the sampled range"));
    }
    let radial = Path::new(new_times, new_values, wedge.radial.meta().clone())?;

    // field push-forward under z → r·z with r = e^{−s0}: h'(x, ε) =
    // h(r x, r ε) + Q log r, resampled onto the standard grid.
    let r = libm::exp(-s0);
    let field = crate::welding::push_field(
        &wedge.field,
        &crate::welding::ScalingMap { factor: r },
        q,
    )?;
    Ok(WedgeSample {
        gamma: wedge.gamma,
        alpha: wedge.alpha,
        q,
        parametrisation: target,
        radial,
        field,
    })
}

/// Direction of the strip ↔ half-plane coordinate change φ(z) = e^{−z}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripDirection {
    ToStrip,
    ToHalfPlane,
}

/// Apply h ∘ φ + Q·log|φ′| with |φ′(z)| = e^{−Re z}: on the radial part this
/// is exactly radial(s) ∓ Q·s; marked points +∞ ↦ 0, −∞ ↦ ∞. The lateral
/// field storage is shared between the two coordinate systems.
pub fn strip_halfplane_change(wedge: &WedgeSample, direction: StripDirection) -> Result<WedgeSample> {
    let q = wedge.q;
    let (expect, target, sign) = match direction {
        StripDirection::ToStrip => (Parametrisation::LastExit, Parametrisation::Strip, -1.0),
        StripDirection::ToHalfPlane => (Parametrisation::Strip, Parametrisation::LastExit, 1.0),
    };
    if wedge.parametrisation != expect {
        return Err(CoreError::InvalidArgument("source parametrisation does not match direction"));
    }
    let values: Vec<f64> = wedge
        .radial
        .times()
        .iter()
        .zip(wedge.radial.values())
        .map(|(s, v)| v + sign * q * s)
        .collect();
    let radial = Path::new(wedge.radial.times().to_vec(), values, wedge.radial.meta().clone())?;
    let mut field = wedge.field.clone();
    field.model = FieldModel::Wedge {
        gamma: wedge.gamma,
        alpha: wedge.alpha,
        parametrisation: target,
    };
    Ok(WedgeSample {
        gamma: wedge.gamma,
        alpha: wedge.alpha,
        q,
        parametrisation: target,
        radial,
        field,
    })
}

/// Zoom normalization of Lemma-3.1 type: rescale and shift the field by
/// h(r_C ·) + 2·log r_C + C with r_C chosen so the unit boundary interval has
/// unit truncated-critical mass; returns the rescaled field and r_C.
///
/// The zoomed measure is the exact push-forward e^C·ν(r_C ·), so the unit-mass
/// normalization holds exactly by the quantile inversion; the returned field
/// snapshot is the interpolated dilation push-forward.
pub fn zoom_scale(
    field: &BoundaryFieldGrid,
    c: f64,
    beta: f64,
    eps: f64,
) -> Result<(BoundaryFieldGrid, f64)> {
    let trunc = truncated_derivative_measure(field, beta, eps)?;
    let right = trunc.cumulative_right()?;
    let target = libm::exp(-c);
    if target > right.total() {
        return Err(CoreError::RangeExhausted("insufficient mass to reach the zoom level"));
    }
    let r_c = right.quantile(target)?;
    let dx = field.dx();
    if r_c < 4.0 * dx {
        return Err(CoreError::RangeExhausted("insufficient resolution to achieve unit mass"));
    }
    if libm::fabs(r_c - 1.0) < 1e-12 && libm::fabs(c) < 1e-12 {
        return Ok((field.clone(), 1.0));
    }
    let pushed = crate::welding::push_field(field, &crate::welding::ScalingMap { factor: r_c }, 2.0)?;
    Ok((pushed.add_constant(c), r_c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{CovarianceSpec, GridSpec};
    use crate::stats;

    fn sampler() -> FieldSampler {
        FieldSampler::new(
            GridSpec { x_min: -2.0, x_max: 2.0, n: 512, j_max: 10 },
            CovarianceSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn q_gamma_values() {
        assert!((q_gamma(2.0) - 2.0).abs() < 1e-15);
        assert!((q_gamma(1.0) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn wedge_22_last_exit_invariant() {
        let s = sampler();
        for r in 0..20 {
            let w =
                sample_wedge(2.0, 2.0, Parametrisation::LastExit, &s, RngStream::new(201, r))
                    .unwrap();
            for (&t, &v) in w.radial.times().iter().zip(w.radial.values()) {
                if t > 0.0 {
                    assert!(v - 2.0 * t <= 0.0, "radial above line at s={t}");
                }
            }
            assert_eq!(w.radial.value_at(0.0), 0.0);
        }
    }

    #[test]
    fn invalid_alpha_rejected() {
        let s = sampler();
        assert!(sample_wedge(1.5, 2.2, Parametrisation::LastExit, &s, RngStream::new(1, 0))
            .is_err());
        // alpha = Q for gamma < 2 is rejected; (2,2) is allowed
        let q = q_gamma(1.5);
        assert!(sample_wedge(1.5, q, Parametrisation::LastExit, &s, RngStream::new(1, 0))
            .is_err());
        assert!(sample_wedge(2.0, 2.0, Parametrisation::LastExit, &s, RngStream::new(1, 0))
            .is_ok());
    }

    #[test]
    fn wedge_22_unit_circle_moments() {
        // radial(e^{-s}) = B_{2s} + 2s for s >= 0: increment mean 2Δs, var 2Δs
        let n = 3000;
        let (s1, s2) = (0.5, 1.5);
        let mut incs = Vec::with_capacity(n as usize);
        for r in 0..n {
            let p = sample_wedge_radial(
                2.0,
                2.0,
                Parametrisation::UnitCircle,
                -1.0,
                4.0,
                RngStream::new(202, r),
            )
            .unwrap();
            incs.push(p.value_at(s2) - p.value_at(s1));
        }
        let m = stats::mean(&incs);
        let v = stats::variance(&incs);
        let ds = s2 - s1;
        assert!((m - 2.0 * ds).abs() < 3.0 * stats::std_error(&incs), "mean {m}");
        let se_v = 2.0 * ds * (2.0 / n as f64).sqrt();
        assert!((v - 2.0 * ds).abs() < 3.5 * se_v, "var {v}");
    }

    #[test]
    fn unit_circle_stays_above_line_for_negative_s() {
        let p = sample_wedge_radial(
            2.0,
            1.0,
            Parametrisation::UnitCircle,
            -3.0,
            2.0,
            RngStream::new(203, 0),
        )
        .unwrap();
        for (&s, &v) in p.times().iter().zip(p.values()) {
            if s < 0.0 {
                assert!(v - 2.0 * s > -1e-12, "below line at s={s}");
            }
        }
    }

    #[test]
    fn strip_is_smaller_by_qs() {
        let le = sample_wedge_radial(
            2.0,
            2.0,
            Parametrisation::LastExit,
            -1.0,
            3.0,
            RngStream::new(204, 1),
        )
        .unwrap();
        let st = sample_wedge_radial(
            2.0,
            2.0,
            Parametrisation::Strip,
            -1.0,
            3.0,
            RngStream::new(204, 1),
        )
        .unwrap();
        for ((&s, &a), &b) in le.times().iter().zip(le.values()).zip(st.values()) {
            assert!((a - 2.0 * s - b).abs() < 1e-12);
        }
    }

    #[test]
    fn strip_round_trip_identity() {
        let s = sampler();
        let w = sample_wedge(2.0, 1.0, Parametrisation::LastExit, &s, RngStream::new(205, 0))
            .unwrap();
        let st = strip_halfplane_change(&w, StripDirection::ToStrip).unwrap();
        // at Re z = 0 (s = 0) the Q log|phi'| term vanishes
        assert!((st.radial.value_at(0.0) - w.radial.value_at(0.0)).abs() < 1e-12);
        let back = strip_halfplane_change(&st, StripDirection::ToHalfPlane).unwrap();
        for (a, b) in back.radial.values().iter().zip(w.radial.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(strip_halfplane_change(&w, StripDirection::ToHalfPlane).is_err());
    }

    #[test]
    fn reparametrise_identity_and_agreement() {
        let s = sampler();
        let w = sample_wedge(2.0, 1.0, Parametrisation::LastExit, &s, RngStream::new(206, 0))
            .unwrap();
        let same = reparametrise(&w, Parametrisation::LastExit).unwrap();
        assert_eq!(same.radial.values(), w.radial.values());

        // distributional agreement: unit-circle reparametrised to last-exit
        // matches the direct last-exit sampler (KS at fixed s)
        let n = 2000;
        let mut direct = Vec::with_capacity(n as usize);
        let mut reparam = Vec::with_capacity(n as usize);
        let s_probe = 1.0;
        let mut r = 0;
        while reparam.len() < n as usize {
            let uc = sample_wedge(2.0, 1.0, Parametrisation::UnitCircle, &s, RngStream::new(207, r))
                .unwrap();
            r += 1;
            if let Ok(le) = reparametrise(&uc, Parametrisation::LastExit) {
                if le.radial.times()[0] <= s_probe
                    && *le.radial.times().last().unwrap() >= s_probe
                {
                    reparam.push(le.radial.value_at(s_probe));
                }
            }
        }
        for r in 0..n {
            let w2 = sample_wedge(2.0, 1.0, Parametrisation::LastExit, &s, RngStream::new(208, r))
                .unwrap();
            direct.push(w2.radial.value_at(s_probe));
        }
        let out = stats::ks_test_two_sample(&direct, &reparam).unwrap();
        assert!(out.p_value > 0.01, "reparametrise KS p = {}", out.p_value);
    }

    #[test]
    fn zoom_identity_and_trend() {
        let s = sampler();
        // canonical field: normalize an arbitrary wedge field so that the unit
        // interval has unit truncated mass, then zoom with C = 0.
        let w = sample_wedge(2.0, 1.0, Parametrisation::LastExit, &s, RngStream::new(209, 3))
            .unwrap();
        let eps = 2f64.powi(-10);
        let beta = 5.0;
        // canonicalize: bisect the additive constant so that the truncated
        // mass of [0,1] is exactly 1
        let mass_at = |c: f64| -> f64 {
            truncated_derivative_measure(&w.field.add_constant(c), beta, eps)
                .unwrap()
                .mass(0.0, 1.0)
        };
        let (mut lo, mut hi) = (-20.0, 10.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mass_at(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let canonical = w.field.add_constant(0.5 * (lo + hi));
        let (_zoomed, r_c) = zoom_scale(&canonical, 0.0, beta, eps).unwrap();
        assert!((r_c - 1.0).abs() < 0.02, "r_c {r_c}");

        // r_C decreasing in C (per-sample, since F is increasing)
        let mut prev = f64::INFINITY;
        for &c in &[0.5, 1.0, 2.0] {
            match zoom_scale(&canonical, c, beta, eps) {
                Ok((_, r)) => {
                    assert!(r < prev + 1e-12);
                    prev = r;
                }
                Err(CoreError::RangeExhausted(_)) => break,
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }
}
