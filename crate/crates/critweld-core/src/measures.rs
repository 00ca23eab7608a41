//! Boundary Liouville measures built from a sampled multi-scale field:
//! subcritical ν^γ_{h,ε}, the signed critical approximation ν_{h,ε}, the
//! truncated derivative measure d^β_{h,ε}, and cumulative/quantile machinery
//! for quantum-typical points.

use crate::error::{CoreError, Result};
use crate::field::BoundaryFieldGrid;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    Subcritical { gamma: f64 },
    Critical,
    Truncated { beta: f64 },
}

/// Piecewise-constant density on grid cells plus the scale it was built at.
/// Signed densities are allowed for the critical kind only.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMeasure {
    edges: Vec<f64>,
    density: Vec<f64>,
    pub scale: f64,
    pub kind: MeasureKind,
}

fn cell_edges(field: &BoundaryFieldGrid) -> Vec<f64> {
    let dx = field.dx();
    let mut edges = Vec::with_capacity(field.n() + 1);
    edges.push(field.xs()[0] - 0.5 * dx);
    for &x in field.xs() {
        edges.push(x + 0.5 * dx);
    }
    edges
}

/// ν^γ_{h,ε}: density exp((γ/2)·h_ε(x)) · ε^{γ²/4}.
pub fn subcritical_measure(field: &BoundaryFieldGrid, gamma: f64, eps: f64) -> Result<BoundaryMeasure> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(CoreError::InvalidArgument("subcritical requires gamma in (0,2)"));
    }
    let j = field.scale_index(eps)?;
    let comp = libm::pow(eps, gamma * gamma / 4.0);
    let density = field.row(j).iter().map(|&h| libm::exp(0.5 * gamma * h) * comp).collect();
    Ok(BoundaryMeasure {
        edges: cell_edges(field),
        density,
        scale: eps,
        kind: MeasureKind::Subcritical { gamma },
    })
}

/// ν_{h,ε} (γ = 2): signed density (−h_ε/2 + log(1/ε)) · e^{h_ε} · ε.
pub fn critical_measure(field: &BoundaryFieldGrid, eps: f64) -> Result<BoundaryMeasure> {
    let j = field.scale_index(eps)?;
    let l = libm::log(1.0 / eps);
    let density = field.row(j).iter().map(|&h| (-0.5 * h + l) * libm::exp(h) * eps).collect();
    Ok(BoundaryMeasure { edges: cell_edges(field), density, scale: eps, kind: MeasureKind::Critical })
}

/// d^β_{h,ε}: density (−h_ε/2 + log(1/ε) + β) · e^{h_ε} · ε ·
/// 1{h_δ/2 < log(1/δ) + β for every stored dyadic δ ∈ [ε, 1]}.
pub fn truncated_derivative_measure(
    field: &BoundaryFieldGrid,
    beta: f64,
    eps: f64,
) -> Result<BoundaryMeasure> {
    if beta <= 0.0 {
        return Err(CoreError::InvalidArgument("beta must be positive"));
    }
    let j_eps = field.scale_index(eps)?;
    let l = libm::log(1.0 / eps);
    let n = field.n();
    let mut density = Vec::with_capacity(n);
    for i in 0..n {
        let mut pass = true;
        for j in 0..=j_eps {
            let delta = field.scales()[j as usize];
            if 0.5 * field.value(j, i) >= libm::log(1.0 / delta) + beta {
                pass = false;
                break;
            }
        }
        if pass {
            let h = field.value(j_eps, i);
            density.push((-0.5 * h + l + beta) * libm::exp(h) * eps);
        } else {
            density.push(0.0);
        }
    }
    Ok(BoundaryMeasure {
        edges: cell_edges(field),
        density,
        scale: eps,
        kind: MeasureKind::Truncated { beta },
    })
}

/// (4 − 2γ)^{-1} · ν^γ, the renormalization used for the γ ↑ 2 comparisons.
pub fn normalized_subcritical(field: &BoundaryFieldGrid, gamma: f64, eps: f64) -> Result<BoundaryMeasure> {
    if gamma >= 2.0 {
        return Err(CoreError::InvalidArgument("normalized_subcritical requires gamma < 2"));
    }
    let mut m = subcritical_measure(field, gamma, eps)?;
    let factor = 1.0 / (4.0 - 2.0 * gamma);
    for d in m.density.iter_mut() {
        *d *= factor;
    }
    Ok(m)
}

impl BoundaryMeasure {
    pub fn from_raw(edges: Vec<f64>, density: Vec<f64>, scale: f64, kind: MeasureKind) -> Result<Self> {
        if edges.len() != density.len() + 1 || density.is_empty() {
            return Err(CoreError::InvalidArgument("edges/density size mismatch"));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidArgument("cell edges must increase"));
        }
        Ok(BoundaryMeasure { edges, density, scale, kind })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn is_nonnegative(&self) -> bool {
        self.density.iter().all(|&d| d >= 0.0)
    }

    /// Cells whose density is negative (possible for the critical kind).
    pub fn negative_cells(&self) -> Vec<usize> {
        self.density
            .iter()
            .enumerate()
            .filter_map(|(i, &d)| if d < 0.0 { Some(i) } else { None })
            .collect()
    }

    /// Exact interval mass: full cells summed, ends linearly interpolated.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let lo = a.max(self.edges[0]);
        let hi = b.min(*self.edges.last().unwrap());
        if hi <= lo {
            return 0.0;
        }
        let mut total = 0.0;
        for (i, &d) in self.density.iter().enumerate() {
            let l = self.edges[i].max(lo);
            let r = self.edges[i + 1].min(hi);
            if r > l {
                total += d * (r - l);
            }
        }
        total
    }

    pub fn total(&self) -> f64 {
        self.mass(self.edges[0], *self.edges.last().unwrap())
    }

    /// Cumulative function F(x) = ν([left end, x]); non-negative kinds only.
    pub fn cumulative(&self) -> Result<Cumulative> {
        if !self.is_nonnegative() {
            return Err(CoreError::InvalidArgument("cumulative requires a non-negative measure"));
        }
        let mut cum = Vec::with_capacity(self.edges.len());
        cum.push(0.0);
        for (i, &d) in self.density.iter().enumerate() {
            let prev = *cum.last().unwrap();
            cum.push(prev + d * (self.edges[i + 1] - self.edges[i]));
        }
        Ok(Cumulative { xs: self.edges.clone(), cum })
    }

    /// Cumulative of ν restricted to [0, +∞), measured from 0.
    pub fn cumulative_right(&self) -> Result<Cumulative> {
        self.one_sided(true)
    }

    /// Cumulative of ν restricted to (−∞, 0], measured from 0 leftwards:
    /// F(u) = ν([−u, 0]) for u ≥ 0.
    pub fn cumulative_left(&self) -> Result<Cumulative> {
        self.one_sided(false)
    }

    fn one_sided(&self, right: bool) -> Result<Cumulative> {
        if !self.is_nonnegative() {
            return Err(CoreError::InvalidArgument("cumulative requires a non-negative measure"));
        }
        let mut xs = Vec::new();
        let mut cum = Vec::new();
        xs.push(0.0);
        cum.push(0.0);
        let n = self.density.len();
        if right {
            for i in 0..n {
                let l = self.edges[i].max(0.0);
                let r = self.edges[i + 1];
                if r <= 0.0 {
                    continue;
                }
                let prev = *cum.last().unwrap();
                xs.push(r);
                cum.push(prev + self.density[i] * (r - l));
            }
        } else {
            for i in (0..n).rev() {
                let l = self.edges[i];
                let r = self.edges[i + 1].min(0.0);
                if l >= 0.0 {
                    continue;
                }
                let prev = *cum.last().unwrap();
                xs.push(-l);
                cum.push(prev + self.density[i] * (r - l));
            }
        }
        if xs.len() < 2 {
            return Err(CoreError::OutOfRange("measure has no cells on the requested side"));
        }
        Ok(Cumulative { xs, cum })
    }
}

/// Non-decreasing piecewise-linear cumulative function with its generalized
/// inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Cumulative {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

impl Cumulative {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.cum
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn value(&self, x: f64) -> f64 {
        crate::numerics::lerp(&self.xs, &self.cum, x)
    }

    /// Generalized inverse inf{x : F(x) ≥ q}; q = 0 returns the left endpoint.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if q < 0.0 || q > self.total() + 1e-12 * (1.0 + self.total()) {
            return Err(CoreError::OutOfRange("quantile beyond total mass"));
        }
        if q <= 0.0 {
            return Ok(self.xs[0]);
        }
        // first index with cum >= q
        let mut lo = 0usize;
        let mut hi = self.cum.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cum[mid] >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let c0 = self.cum[lo];
        let c1 = self.cum[hi];
        if c1 <= c0 {
            return Ok(self.xs[lo]);
        }
        let t = ((q - c0) / (c1 - c0)).clamp(0.0, 1.0);
        Ok(self.xs[lo] + t * (self.xs[hi] - self.xs[lo]))
    }
}

/// Quantum-typical point pair: X(q) ≥ 0 and Y(q) ≤ 0 with
/// ν([0, X(q)]) = ν([Y(q), 0]) = q.
pub fn quantum_points(measure: &BoundaryMeasure, q: f64) -> Result<(f64, f64)> {
    if q < 0.0 {
        return Err(CoreError::InvalidArgument("q must be non-negative"));
    }
    if q == 0.0 {
        return Ok((0.0, 0.0));
    }
    let right = measure.cumulative_right()?;
    let left = measure.cumulative_left()?;
    if q > right.total() || q > left.total() {
        return Err(CoreError::OutOfRange("insufficient one-sided mass"));
    }
    let x = right.quantile(q)?;
    let y = -left.quantile(q)?;
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{CovarianceSpec, FieldSampler, GridSpec};
    use crate::rng::RngStream;
    use crate::stats;

    fn sampler() -> FieldSampler {
        FieldSampler::new(
            GridSpec { x_min: -2.0, x_max: 2.0, n: 512, j_max: 8 },
            CovarianceSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn subcritical_flat_field_mass() {
        // with kappa0 = 0 the scale-1 row is identically zero, so eps = 1
        // exercises the h ≡ 0 case: mass of [0,1] = eps^{gamma²/4} = 1.
        let s = sampler();
        let f = s.sample_neumann(RngStream::new(99, 1));
        let m = subcritical_measure(&f, 1.0, 1.0).unwrap();
        let mass = m.mass(0.0, 1.0);
        assert!((mass - 1.0).abs() < 1e-12, "mass {mass}");
        assert_eq!(m.mass(0.3, 0.3), 0.0);
    }

    #[test]
    fn subcritical_first_moment_is_lebesgue() {
        // neumann, kappa0 = 0: E nu^gamma([0,1]) = 1
        let s = sampler();
        let reps = 2000;
        let gamma = 1.0;
        let eps = 2f64.powi(-8);
        let masses: Vec<f64> = (0..reps)
            .map(|r| {
                let f = s.sample_neumann(RngStream::new(100, r));
                subcritical_measure(&f, gamma, eps).unwrap().mass(0.0, 1.0)
            })
            .collect();
        let m = stats::mean(&masses);
        let se = stats::std_error(&masses);
        assert!((m - 1.0).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn critical_flat_field_and_sign() {
        let s = sampler();
        let f = s.sample_neumann(RngStream::new(99, 2));
        // eps = 1: h ≡ 0, density = log(1/1)·1·1 = 0
        let m1 = critical_measure(&f, 1.0).unwrap();
        assert!(m1.mass(0.0, 1.0).abs() < 1e-12);
        // constant field C: density (−C/2 + log(1/ε)) e^C ε; pick C > 2 log(1/ε)
        let eps = 2f64.powi(-4);
        let c = 2.0 * (1.0 / eps).ln() + 1.0;
        let shifted = f.add_constant(c);
        let m = critical_measure(&shifted, eps).unwrap();
        assert!(!m.negative_cells().is_empty());
        assert!(!m.is_nonnegative());
        assert!(m.cumulative().is_err());
    }

    #[test]
    fn truncation_identity_on_passing_cells() {
        // d^beta = critical + beta·eps·e^{h} where the indicator passes.
        let s = sampler();
        let f = s.sample_neumann(RngStream::new(99, 3));
        let eps = 2f64.powi(-6);
        let beta = 5.0;
        let crit = critical_measure(&f, eps).unwrap();
        let trunc = truncated_derivative_measure(&f, beta, eps).unwrap();
        let j = f.scale_index(eps).unwrap();
        for i in 0..f.n() {
            let extra = beta * eps * f.value(j, i).exp();
            if trunc.density()[i] > 0.0 {
                assert!(
                    (trunc.density()[i] - (crit.density()[i] + extra)).abs()
                        < 1e-12 * (1.0 + trunc.density()[i].abs()),
                    "identity at cell {i}"
                );
                // truncated <= critical + beta eps e^h always
            }
            assert!(trunc.density()[i] <= crit.density()[i] + extra + 1e-12);
        }
    }

    #[test]
    fn truncated_flat_field_density() {
        let s = sampler();
        let f = s.sample_neumann(RngStream::new(99, 4));
        // h ≡ 0 at scale 1: beta = 1 -> density (log 1 + 1)·1 = 1 at eps = 1
        let t = truncated_derivative_measure(&f, 1.0, 1.0).unwrap();
        assert!(t.density().iter().all(|&d| (d - 1.0).abs() < 1e-12));
        assert!(truncated_derivative_measure(&f, -1.0, 1.0).is_err());
        assert!(truncated_derivative_measure(&f, 1.0, 0.3).is_err());
    }

    #[test]
    fn truncated_indicator_zeroes_violating_cells() {
        let s = sampler();
        let eps = 2f64.powi(-6);
        let beta = 0.05; // tiny beta so violations occur
        let mut found_zero = false;
        for r in 0..50 {
            let f = s.sample_neumann(RngStream::new(99, 500 + r));
            let t = truncated_derivative_measure(&f, beta, eps).unwrap();
            assert!(t.is_nonnegative());
            for i in 0..f.n() {
                let mut violated = false;
                for j in 0..=f.scale_index(eps).unwrap() {
                    let delta = f.scales()[j as usize];
                    if 0.5 * f.value(j, i) >= (1.0 / delta).ln() + beta {
                        violated = true;
                    }
                }
                if violated {
                    assert_eq!(t.density()[i], 0.0);
                    found_zero = true;
                }
            }
            if found_zero {
                break;
            }
        }
        assert!(found_zero, "expected a violating cell within 50 replicas at beta = {beta}");
    }

    #[test]
    fn normalized_subcritical_scaling() {
        let s = sampler();
        let f = s.sample_neumann(RngStream::new(99, 6));
        let eps = 2f64.powi(-6);
        let plain = subcritical_measure(&f, 1.0, eps).unwrap();
        let norm = normalized_subcritical(&f, 1.0, eps).unwrap();
        // gamma = 1 -> factor 1/2
        assert!((norm.mass(0.0, 1.0) - 0.5 * plain.mass(0.0, 1.0)).abs() < 1e-12);
        // (2−γ)^{-1} ν^γ = 2 · normalized
        let lhs = plain.mass(0.2, 0.9) / (2.0 - 1.0);
        assert!((lhs - 2.0 * norm.mass(0.2, 0.9)).abs() < 1e-12);
        assert!(normalized_subcritical(&f, 2.0, eps).is_err());
    }

    #[test]
    fn additivity_exact_on_cell_aligned_intervals() {
        let s = sampler();
        let f = s.sample_neumann(RngStream::new(99, 7));
        let m = subcritical_measure(&f, 1.2, 2f64.powi(-5)).unwrap();
        let e = m.edges();
        let (a, b, c) = (e[10], e[200], e[400]);
        assert!((m.mass(a, c) - (m.mass(a, b) + m.mass(b, c))).abs() < 1e-12);
    }

    #[test]
    fn quantile_uniform_density() {
        let edges: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let density = vec![1.0; 100];
        let m = BoundaryMeasure::from_raw(edges, density, 1.0, MeasureKind::Critical).unwrap();
        let c = m.cumulative().unwrap();
        for &q in &[0.0, 0.25, 0.5, 0.99] {
            assert!((c.quantile(q).unwrap() - q).abs() < 1e-12);
        }
        assert_eq!(c.quantile(0.0).unwrap(), 0.0);
        assert!(c.quantile(1.5).is_err());
    }

    #[test]
    fn quantile_cumulative_round_trip() {
        let s = sampler();
        let f = s.sample_neumann(RngStream::new(99, 8));
        let m = subcritical_measure(&f, 1.0, 2f64.powi(-7)).unwrap();
        let c = m.cumulative().unwrap();
        for i in (1..f.n()).step_by(37) {
            let x = m.edges()[i];
            let fx = c.value(x);
            let q1 = c.quantile(fx).unwrap();
            assert!(q1 <= x + 1e-9);
            let cell_mass = m.density()[i] * (m.edges()[i + 1] - m.edges()[i]);
            if fx + cell_mass <= c.total() {
                let q2 = c.quantile(fx + cell_mass).unwrap();
                assert!(q2 + 1e-9 >= x, "round trip at {x}");
            }
        }
    }

    #[test]
    fn quantum_points_symmetry_and_monotonicity() {
        let s = sampler();
        let f = s.sample_neumann(RngStream::new(99, 9));
        let m = truncated_derivative_measure(&f, 5.0, 2f64.powi(-8)).unwrap();
        assert_eq!(quantum_points(&m, 0.0).unwrap(), (0.0, 0.0));
        let qmax = m.mass(0.0, 2.0).min(m.mass(-2.0, 0.0));
        let mut prev = (0.0, 0.0);
        for k in 1..=8 {
            let q = qmax * k as f64 / 10.0;
            let (x, y) = quantum_points(&m, q).unwrap();
            assert!(x >= prev.0 - 1e-12 && y <= prev.1 + 1e-12, "monotone");
            assert!(x >= 0.0 && y <= 0.0);
            // recomputed masses match q
            assert!((m.mass(0.0, x) - q).abs() < 1e-9 * (1.0 + q));
            assert!((m.mass(y, 0.0) - q).abs() < 1e-9 * (1.0 + q));
            prev = (x, y);
        }
        assert!(quantum_points(&m, qmax * 10.0).is_err());
    }

    #[test]
    fn symmetric_density_gives_mirror_points() {
        let edges: Vec<f64> = (0..=100).map(|i| -1.0 + i as f64 / 50.0).collect();
        let density: Vec<f64> = (0..100).map(|i| 1.0 + ((i as f64 - 49.5).abs() / 50.0)).collect();
        let m = BoundaryMeasure::from_raw(edges, density, 1.0, MeasureKind::Critical).unwrap();
        let (x, y) = quantum_points(&m, 0.4).unwrap();
        assert!((x + y).abs() < 1e-12, "x {x} y {y}");
    }
}
