//! Conformal welding from quantum boundary lengths: the matched-point
//! correspondence, slit-map realization of the welding homeomorphism with its
//! interface curve, coordinate-changed (pushed) fields, curve side lengths and
//! the quantum zipper step.

use crate::error::{CoreError, Result};
use crate::field::BoundaryFieldGrid;
use crate::loewner::{forward_boundary, DrivingFunction, LoewnerFlow};
use crate::measures::{truncated_derivative_measure, BoundaryMeasure};
use crate::numerics::half_plane_sqrt;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Matched boundary point pairs of equal quantum length.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pairs: Vec<CorrPair>,
    pub source: (String, String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrPair {
    pub x: f64,
    pub y: f64,
    pub q: f64,
}

impl Correspondence {
    pub fn new(pairs: Vec<CorrPair>, source: (String, String)) -> Result<Self> {
        if pairs.is_empty() {
            return Err(CoreError::InvalidArgument("empty correspondence"));
        }
        for w in pairs.windows(2) {
            if !(w[1].x > w[0].x && w[1].y < w[0].y && w[1].q > w[0].q) {
                return Err(CoreError::InvalidArgument(
                    "pairs must have x increasing, y decreasing, q increasing",
                ));
            }
        }
        if pairs[0].x <= 0.0 || pairs[0].y >= 0.0 || pairs[0].q <= 0.0 {
            return Err(CoreError::InvalidArgument("pairs must satisfy x > 0 > y, q > 0"));
        }
        Ok(Correspondence { pairs, source })
    }

    pub fn pairs(&self) -> &[CorrPair] {
        &self.pairs
    }
}

/// Quantile-inversion correspondence: ν_right([0, x_k]) = q_k = ν_left([y_k, 0]).
/// Degenerate q = 0 entries of the grid are skipped.
pub fn quantum_correspondence(
    right: &BoundaryMeasure,
    left: &BoundaryMeasure,
    q_grid: &[f64],
) -> Result<Correspondence> {
    let cr = right.cumulative_right()?;
    let cl = left.cumulative_left()?;
    let q_max = q_grid.iter().cloned().fold(0.0f64, f64::max);
    if q_max > cr.total() || q_max > cl.total() {
        return Err(CoreError::OutOfRange("insufficient one-sided mass for the q grid"));
    }
    let mut pairs = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        if q <= 0.0 {
            continue;
        }
        let x = cr.quantile(q)?;
        let y = -cl.quantile(q)?;
        pairs.push(CorrPair { x, y, q });
    }
    let label = |m: &BoundaryMeasure| format!("{:?}@{}", m.kind, m.scale);
    Correspondence::new(pairs, (label(right), label(left)))
}

/// The unique conformal map from the half-plane onto the half-plane minus a
/// straight slit from 0, normalized z + O(1) at infinity, sending p ↦ 0⁺-side
/// base, −q ↦ 0⁻-side base and 0 ↦ tip:
/// φ(z) = (z+q)^{q/(p+q)} · (z−p)^{p/(p+q)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementaryWeld {
    pub p: f64,
    pub q: f64,
    p_hat: f64,
    q_hat: f64,
}

impl ElementaryWeld {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && q > 0.0) {
            return Err(CoreError::InvalidArgument("elementary weld needs p, q > 0"));
        }
        let p_hat = p / (p + q);
        Ok(ElementaryWeld { p, q, p_hat, q_hat: 1.0 - p_hat })
    }

    /// Slit tip φ(0): modulus p^{p̂} q^{q̂}, argument π p̂.
    pub fn tip(&self) -> Complex64 {
        let modulus = libm::pow(self.p, self.p_hat) * libm::pow(self.q, self.q_hat);
        Complex64::from_polar(modulus, core::f64::consts::PI * self.p_hat)
    }

    /// Half-plane capacity of the slit.
    pub fn capacity(&self) -> f64 {
        self.p * self.q / 4.0
    }

    /// Map a point of the open upper half-plane (branch cuts on the real
    /// axis, principal logs).
    pub fn map(&self, z: Complex64) -> Complex64 {
        let a = (z + Complex64::new(self.q, 0.0)).ln();
        let b = (z - Complex64::new(self.p, 0.0)).ln();
        (self.q_hat * a + self.p_hat * b).exp()
    }

    /// Boundary action on x ≥ p (exact real arithmetic, image ≥ 0).
    pub fn map_right(&self, x: f64) -> f64 {
        debug_assert!(x >= self.p);
        libm::exp(self.q_hat * libm::log(x + self.q) + self.p_hat * libm::log(x - self.p))
    }

    /// Boundary action on x ≤ −q (image ≤ 0).
    pub fn map_left(&self, x: f64) -> f64 {
        debug_assert!(x <= -self.q);
        -libm::exp(self.q_hat * libm::log(-x - self.q) + self.p_hat * libm::log(-x + self.p))
    }

    /// log |φ′(x)| on either boundary side (|x| strictly beyond the weld base).
    pub fn boundary_log_deriv(&self, x: f64) -> f64 {
        let v = if x > 0.0 { self.map_right(x) } else { -self.map_left(x) };
        let rate = self.q_hat / (x + self.q) + self.p_hat / (x - self.p);
        libm::log(v) + libm::log(libm::fabs(rate))
    }
}

/// The composed welding map with its interface curve. `curve[0]` is the base
/// point 0; vertices then run outward to the far tip. `welds` are stored in
/// application order (innermost pair first).
#[derive(Debug, Clone, PartialEq)]
pub struct WeldedInterface {
    pub curve: Vec<Complex64>,
    pub welds: Vec<ElementaryWeld>,
    pub retained: Vec<CorrPair>,
    pub capacity: f64,
    /// Constant term of the composed map at infinity, Σ (q_k − p_k).
    pub shift_at_infinity: f64,
}

/// Iterate pairs inward-to-outward: at step k weld the current images of
/// (x_k, y_k) with an elementary slit map (the welded base stays at 0 by
/// construction), record the tip trajectory; the final curve is the seam.
pub fn build_welding_curve(corr: &Correspondence) -> Result<WeldedInterface> {
    let pairs = corr.pairs();
    let k_n = pairs.len();
    let mut p: Vec<f64> = pairs.iter().map(|c| c.x).collect();
    let mut m: Vec<f64> = pairs.iter().map(|c| -c.y).collect();
    let mut seam: Vec<Complex64> = Vec::with_capacity(k_n);
    let mut welds = Vec::with_capacity(k_n);
    let mut capacity = 0.0;
    let mut shift = 0.0;
    for k in 0..k_n {
        let (pk, qk) = (p[k], m[k]);
        if pk < 1e-12 || qk < 1e-12 {
            return Err(CoreError::DegenerateCorrespondence);
        }
        let weld = ElementaryWeld::new(pk, qk)?;
        for z in seam.iter_mut() {
            *z = weld.map(*z);
        }
        seam.push(weld.tip());
        for j in k + 1..k_n {
            p[j] = weld.map_right(p[j]);
            m[j] = -weld.map_left(-m[j]);
        }
        capacity += weld.capacity();
        shift += qk - pk;
        welds.push(weld);
    }
    seam.reverse(); // base-nearest vertex first
    let mut curve = Vec::with_capacity(k_n + 1);
    curve.push(Complex64::new(0.0, 0.0));
    curve.extend(seam);
    Ok(WeldedInterface {
        curve,
        welds,
        retained: pairs.to_vec(),
        capacity,
        shift_at_infinity: shift,
    })
}

impl WeldedInterface {
    /// Image of an interior point under the composed welding map.
    pub fn map_point(&self, z: Complex64) -> Complex64 {
        let mut w = z;
        for weld in &self.welds {
            w = weld.map(w);
        }
        w
    }

    /// Boundary action for |x| strictly beyond the welded interval.
    pub fn map_boundary(&self, x: f64) -> Result<f64> {
        let last = self.retained.last().unwrap();
        if x > 0.0 && x < last.x {
            return Err(CoreError::InvalidArgument("point lies inside the welded interval"));
        }
        if x < 0.0 && x > last.y {
            return Err(CoreError::InvalidArgument("point lies inside the welded interval"));
        }
        if x == 0.0 {
            return Err(CoreError::InvalidArgument("0 is the welded base"));
        }
        let mut u = x;
        for weld in &self.welds {
            u = if u > 0.0 { weld.map_right(u) } else { weld.map_left(u) };
        }
        Ok(u)
    }

    /// log |Ψ′(x)| of the composed boundary action.
    pub fn boundary_log_deriv(&self, x: f64) -> Result<f64> {
        let last = self.retained.last().unwrap();
        if (x > 0.0 && x < last.x) || (x < 0.0 && x > last.y) || x == 0.0 {
            return Err(CoreError::InvalidArgument("point lies inside the welded interval"));
        }
        let mut u = x;
        let mut acc = 0.0;
        for weld in &self.welds {
            acc += weld.boundary_log_deriv(u);
            u = if u > 0.0 { weld.map_right(u) } else { weld.map_left(u) };
        }
        Ok(acc)
    }

    /// Inverse boundary action: w ≠ 0 real, monotone bisection per side.
    pub fn inverse_boundary(&self, w: f64) -> Result<f64> {
        if w == 0.0 {
            return Err(CoreError::InvalidArgument("0 is the welded base"));
        }
        let last = self.retained.last().unwrap();
        let (mut lo, mut hi);
        if w > 0.0 {
            lo = last.x;
            hi = libm::fabs(w) + libm::fabs(self.shift_at_infinity) + last.x + 1.0;
            while self.map_boundary(hi)? < w {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(CoreError::NumericFailure("inverse boundary bracket failed"));
                }
            }
        } else {
            hi = last.y;
            lo = -(libm::fabs(w) + libm::fabs(self.shift_at_infinity) - last.y + 1.0);
            while self.map_boundary(lo)? > w {
                lo *= 2.0;
                if lo < -1e12 {
                    return Err(CoreError::NumericFailure("inverse boundary bracket failed"));
                }
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            let v = self.map_boundary(mid)?;
            if v < w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Simplicity check: no two polyline segments with index gap larger than
    /// `window` intersect. Neighbouring chords of the discrete seam zigzag at
    /// the resolution scale (the exact seam between vertices is curved), so
    /// only non-local crossings indicate a genuinely invalid welding.
    pub fn is_simple(&self, window: usize) -> bool {
        let c = &self.curve;
        let n = c.len();
        if n < 4 {
            return true;
        }
        let orient = |a: Complex64, b: Complex64, p: Complex64| -> f64 {
            (b.re - a.re) * (p.im - a.im) - (b.im - a.im) * (p.re - a.re)
        };
        let intersects = |a: Complex64, b: Complex64, p: Complex64, q: Complex64| -> bool {
            let d1 = orient(a, b, p);
            let d2 = orient(a, b, q);
            let d3 = orient(p, q, a);
            let d4 = orient(p, q, b);
            d1 * d2 < 0.0 && d3 * d4 < 0.0
        };
        for i in 0..n - 1 {
            for j in (i + 2 + window)..n - 1 {
                if intersects(c[i], c[i + 1], c[j], c[j + 1]) {
                    return false;
                }
            }
        }
        true
    }
}

/// Exact measure push-forward through ψ (cumulative transport): the returned
/// measure lives on the original cell grid and satisfies
/// ν′(A) = ν(ψ(A)) exactly for cell-aligned A.
pub fn push_measure(
    measure: &BoundaryMeasure,
    map: &dyn RealBoundaryMap,
) -> Result<BoundaryMeasure> {
    let edges = measure.edges().to_vec();
    let n = edges.len() - 1;
    let mut density = Vec::with_capacity(n);
    // image of an edge; w = 0 splits into the two welded base preimages,
    // which both carry the full one-sided masses, handled per cell below.
    let image = |w: f64| -> Result<f64> { map.apply(w) };
    for i in 0..n {
        let (wl, wr) = (edges[i], edges[i + 1]);
        let mass = if wl >= 0.0 || wr <= 0.0 {
            let a = image(if wl == 0.0 { 1e-300 } else { wl })?;
            let b = image(if wr == 0.0 { -1e-300 } else { wr })?;
            measure.mass(a.min(b), a.max(b))
        } else {
            // straddles 0: both sides of the base
            let a = image(wl)?;
            let b = image(wr)?;
            let y0 = image(-1e-300)?;
            let x0 = image(1e-300)?;
            measure.mass(a.min(y0), a.max(y0)) + measure.mass(x0.min(b), x0.max(b))
        };
        density.push(mass / (wr - wl));
    }
    BoundaryMeasure::from_raw(edges, density, measure.scale, measure.kind)
}

/// Boundary coordinate change ψ for field push-forwards, in the convention
/// h₂ = h₁ ∘ ψ + Q·log|ψ′| (ψ maps the new domain's boundary to the old).
pub trait RealBoundaryMap {
    fn apply(&self, w: f64) -> Result<f64>;
    fn log_abs_deriv(&self, w: f64) -> Result<f64>;
}

/// ψ(w) = factor · w.
pub struct ScalingMap {
    pub factor: f64,
}

impl RealBoundaryMap for ScalingMap {
    fn apply(&self, w: f64) -> Result<f64> {
        Ok(self.factor * w)
    }

    fn log_abs_deriv(&self, _w: f64) -> Result<f64> {
        Ok(libm::log(libm::fabs(self.factor)))
    }
}

/// ψ = Ψ⁻¹ for a welded interface: pulls new boundary points back to the
/// unwelded region of the original boundary.
pub struct WeldInverseMap<'a> {
    pub iface: &'a WeldedInterface,
}

impl RealBoundaryMap for WeldInverseMap<'_> {
    fn apply(&self, w: f64) -> Result<f64> {
        self.iface.inverse_boundary(w)
    }

    fn log_abs_deriv(&self, w: f64) -> Result<f64> {
        let x = self.iface.inverse_boundary(w)?;
        Ok(-self.iface.boundary_log_deriv(x)?)
    }
}

/// Tabulated weld-inverse boundary map: the monotone boundary action and its
/// log-derivative are sampled once per side (geometric refinement toward the
/// welded base, where the map has its power singularity), then queried by
/// binary search. Replaces per-point bisection in hot paths.
pub struct WeldInverseTable {
    // per side: strictly increasing w samples with their preimages and
    // -log|Psi'| values
    ws_r: Vec<f64>,
    xs_r: Vec<f64>,
    lds_r: Vec<f64>,
    ws_l: Vec<f64>,
    xs_l: Vec<f64>,
    lds_l: Vec<f64>,
}

impl WeldInverseTable {
    pub fn build(iface: &WeldedInterface, x_reach: f64, n_linear: usize, n_geom: usize) -> Result<Self> {
        let last = *iface.retained.last().unwrap();
        let mut side = |base: f64, far: f64| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
            let mut xs = Vec::with_capacity(n_linear + n_geom);
            let span = far - base;
            for k in 0..n_geom {
                // geometric offsets from 1e-7*span up to span/ n_linear-ish
                let frac = 1e-7 * libm::pow((0.02 / 1e-7), k as f64 / (n_geom - 1) as f64);
                xs.push(base + span * frac);
            }
            for k in 1..=n_linear {
                xs.push(base + span * (0.02 + 0.98 * k as f64 / n_linear as f64));
            }
            xs.sort_unstable_by(f64::total_cmp);
            xs.dedup();
            let mut ws = Vec::with_capacity(xs.len());
            let mut lds = Vec::with_capacity(xs.len());
            for &x in &xs {
                ws.push(iface.map_boundary(x)?);
                lds.push(-iface.boundary_log_deriv(x)?);
            }
            Ok((xs, ws, lds))
        };
        let reach = x_reach.max(last.x.abs().max(last.y.abs()) * 2.0 + 1.0);
        let (xs_r, ws_r, lds_r) = side(last.x, reach)?;
        // the left-side samples come out sorted ascending in x (and hence in
        // w) already, from -reach up to just below the welded base
        let (xs_l, ws_l, lds_l) = side(last.y, -reach)?;
        Ok(WeldInverseTable { ws_r, xs_r, lds_r, ws_l, xs_l, lds_l })
    }

    fn lookup(ws: &[f64], xs: &[f64], lds: &[f64], w: f64) -> (f64, f64) {
        let n = ws.len();
        if w <= ws[0] {
            return (xs[0], lds[0]);
        }
        if w >= ws[n - 1] {
            // asymptotically the map is a unit-derivative translation
            return (xs[n - 1] + (w - ws[n - 1]), 0.0);
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if ws[mid] <= w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (w - ws[lo]) / (ws[hi] - ws[lo]);
        (xs[lo] + t * (xs[hi] - xs[lo]), lds[lo] + t * (lds[hi] - lds[lo]))
    }
}

impl RealBoundaryMap for WeldInverseTable {
    fn apply(&self, w: f64) -> Result<f64> {
        if w == 0.0 {
            return Err(CoreError::InvalidArgument("0 is the welded base"));
        }
        let (x, _) = if w > 0.0 {
            Self::lookup(&self.ws_r, &self.xs_r, &self.lds_r, w)
        } else {
            Self::lookup(&self.ws_l, &self.xs_l, &self.lds_l, w)
        };
        Ok(x)
    }

    fn log_abs_deriv(&self, w: f64) -> Result<f64> {
        if w == 0.0 {
            return Err(CoreError::InvalidArgument("0 is the welded base"));
        }
        let (_, ld) = if w > 0.0 {
            Self::lookup(&self.ws_r, &self.xs_r, &self.lds_r, w)
        } else {
            Self::lookup(&self.ws_l, &self.xs_l, &self.lds_l, w)
        };
        Ok(ld)
    }
}

/// Coordinate-changed field h ∘ ψ + Q·log|ψ′| resampled onto the standard
/// grid; the semicircle scale transforms by the local |ψ′| (clamped to the
/// stored range).
pub fn push_field(
    field: &BoundaryFieldGrid,
    map: &dyn RealBoundaryMap,
    q_coeff: f64,
) -> Result<BoundaryFieldGrid> {
    let n = field.n();
    let jm = field.j_max();
    // the map is evaluated once per column and reused across scales
    let columns: Vec<Option<(f64, f64)>> = field
        .xs()
        .iter()
        .map(|&w| match (map.apply(w), map.log_abs_deriv(w)) {
            (Ok(x), Ok(ld)) => Some((x, ld)),
            _ => None,
        })
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(jm as usize + 1);
    for j in 0..=jm {
        let eps = field.scales()[j as usize];
        let mut row = Vec::with_capacity(n);
        for col in columns.iter() {
            match col {
                Some((x, ld)) => {
                    let local = eps * libm::exp(*ld);
                    row.push(field.value_at_scale(*x, local) + q_coeff * ld);
                }
                None => {
                    // outside the map's domain (e.g. the welded base cell):
                    // copy the neighbouring value later; mark with NaN now
                    row.push(f64::NAN);
                }
            }
        }
        // fill any masked cells from the nearest valid neighbour
        for i in 0..n {
            if row[i].is_nan() {
                let mut k = 1;
                loop {
                    if i >= k && !row[i - k].is_nan() {
                        row[i] = row[i - k];
                        break;
                    }
                    if i + k < n && !row[i + k].is_nan() {
                        row[i] = row[i + k];
                        break;
                    }
                    k += 1;
                    if k > n {
                        return Err(CoreError::NumericFailure("push_field produced no valid cells"));
                    }
                }
            }
        }
        rows.push(row);
    }
    Ok(field.with_rows(rows))
}

/// Quantum lengths of the two sides of the curve η([0, t]) grown by the
/// forward flow of `driving`, measured by the truncated-critical measure of
/// the pushed field at scale `eps` (Q = 2).
///
/// The curve sides are flattened by the centred forward map onto [x⁻, 0] and
/// [0, x⁺]; pushed field values on those intervals are read at the preimage
/// curve points with the |ψ′|-matched scale, floored at the preimage height
/// (the boundary-only field resolves a bulk point only down to its height).
pub fn side_lengths(
    field: &BoundaryFieldGrid,
    driving: &DrivingFunction,
    t: f64,
    eps: f64,
    beta: f64,
    n_sub: usize,
) -> Result<(f64, f64)> {
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    if t < 0.0 || t > driving.t_max() + 1e-12 {
        return Err(CoreError::InvalidArgument("capacity beyond driving range"));
    }
    let flow = LoewnerFlow::forward(driving.clone());
    let w_t = driving.value_at(t);
    let x_plus = forward_boundary(&flow, t, 0.0, 1.0)? - w_t;
    let x_minus = forward_boundary(&flow, t, 0.0, -1.0)? - w_t;
    debug_assert!(x_plus > 0.0 && x_minus < 0.0);

    let j_eps = field.scale_index(eps)?;
    let steps = libm::floor(t / driving.dt + 1e-12) as usize;

    // preimage of a centred boundary point w: invert the forward steps
    let preimage = |w: f64| -> (Complex64, f64) {
        let mut z = Complex64::new(w + w_t, 0.0);
        // start infinitesimally inside the half-plane for branch stability
        z.im = 1e-12 * (1.0 + libm::fabs(w));
        let mut log_deriv = 0.0;
        for j in (0..steps).rev() {
            let c = Complex64::new(driving.values[j], 0.0);
            let u = z - c;
            let s = half_plane_sqrt(u * u - Complex64::new(4.0 * driving.dt, 0.0));
            // d/dw [c + sqrt((w-c)^2 - 4dt)] = u/s
            log_deriv += libm::log((u / s).norm());
            z = c + s;
        }
        (z, log_deriv)
    };

    let mut masses = [0.0f64; 2];
    for (side, &end) in [x_plus, x_minus].iter().enumerate() {
        let mut total = 0.0;
        for k in 0..n_sub {
            let w = end * (k as f64 + 0.5) / n_sub as f64;
            let dw = libm::fabs(end) / n_sub as f64;
            let (z_pre, ld) = preimage(w);
            let scale_factor = libm::exp(ld);
            // bulk surrogate: the circle average at a point of height y only
            // resolves boundary scales >= y, so the reading scale is floored
            // at the preimage height
            let read = |scale: f64| -> f64 {
                let local = (scale * scale_factor).max(z_pre.im);
                field.value_at_scale(z_pre.re, local) + 2.0 * ld
            };
            // truncation indicator over stored dyadic scales in [eps, 1]
            let mut pass = true;
            for j in 0..=j_eps {
                let delta = field.scales()[j as usize];
                if 0.5 * read(delta) >= libm::log(1.0 / delta) + beta {
                    pass = false;
                    break;
                }
            }
            if pass {
                let h = read(eps);
                let dens = (-0.5 * h + libm::log(1.0 / eps) + beta) * libm::exp(h) * eps;
                if dens > 0.0 {
                    total += dens * dw;
                }
            }
        }
        masses[if side == 0 { 1 } else { 0 }] = total; // [L, R]
    }
    Ok((masses[0], masses[1]))
}

/// One quantum zipper step: compute the quantum-typical points (X(t), Y(t)),
/// weld [0, X(t)] to [Y(t), 0] by truncated-critical length, and return the
/// pushed field (Q = 2) together with the interface (the welded seam
/// prepended to the image of the existing curve traced from `eta_driving`).
pub fn zip_up(
    field: &BoundaryFieldGrid,
    eta_driving: Option<&DrivingFunction>,
    t_quantum: f64,
    beta: f64,
    eps: f64,
    pairs_per_unit: usize,
) -> Result<(BoundaryFieldGrid, Vec<Complex64>)> {
    if t_quantum == 0.0 {
        let curve = match eta_driving {
            Some(d) => crate::loewner::trace_curve(d, 128),
            None => Vec::new(),
        };
        return Ok((field.clone(), curve));
    }
    if t_quantum < 0.0 {
        return Err(CoreError::InvalidArgument("zip_up needs t >= 0"));
    }
    let measure = truncated_derivative_measure(field, beta, eps)?;
    let n_pairs = ((pairs_per_unit as f64 * t_quantum) as usize).max(8);
    let qs: Vec<f64> =
        (1..=n_pairs).map(|k| t_quantum * k as f64 / n_pairs as f64).collect();
    let corr = quantum_correspondence(&measure, &measure, &qs)?;
    let iface = build_welding_curve(&corr)?;
    let x_reach = field.xs().last().unwrap().abs() * 2.0 + 2.0;
    let table = WeldInverseTable::build(&iface, x_reach, 192, 64)?;
    let pushed = push_field(field, &table, 2.0)?;
    let mut interface = iface.curve.clone();
    if let Some(d) = eta_driving {
        let old = crate::loewner::trace_curve(d, 128);
        interface.extend(old.iter().map(|&z| iface.map_point(z)));
    }
    Ok((pushed, interface))
}

/// Canonical rescaling to the last-exit normalization: dilation by the last
/// grid crossing of radial(s) − Q·s (read through the pairwise radial part).
pub fn canonical_rescale(field: &BoundaryFieldGrid, q_coeff: f64) -> Result<(BoundaryFieldGrid, f64)> {
    let radial = field.radial_part()?;
    let mut last: Option<f64> = None;
    for (&s, &v) in radial.times().iter().zip(radial.values()) {
        if v - q_coeff * s >= 0.0 {
            last = Some(s);
        }
    }
    let s0 = last.ok_or(CoreError::RangeExhausted("no Q-line crossing on the grid"))?;
    if s0 >= *radial.times().last().unwrap() - 1e-12 {
        return Err(CoreError::RangeExhausted("crossing not resolved within grid range"));
    }
    let r = libm::exp(-s0);
    let pushed = push_field(field, &ScalingMap { factor: r }, q_coeff)?;
    Ok((pushed, s0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{CovarianceSpec, FieldSampler, GridSpec, Parametrisation};
    use crate::measures::MeasureKind;
    use crate::rng::RngStream;
    use crate::wedge::sample_wedge;

    fn uniform_measure(n: usize, lo: f64, hi: f64, dens: f64) -> BoundaryMeasure {
        let edges: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        BoundaryMeasure::from_raw(edges, vec![dens; n], 1.0, MeasureKind::Critical).unwrap()
    }

    #[test]
    fn correspondence_uniform_densities() {
        let m = uniform_measure(100, -1.0, 1.0, 1.0);
        let qs: Vec<f64> = (0..=10).map(|k| k as f64 * 0.08).collect();
        let corr = quantum_correspondence(&m, &m, &qs).unwrap();
        // q = 0 excluded
        assert_eq!(corr.pairs().len(), 10);
        for pair in corr.pairs() {
            assert!((pair.x - pair.q).abs() < 1e-12);
            assert!((pair.y + pair.q).abs() < 1e-12);
        }
        let too_much = [5.0];
        assert!(quantum_correspondence(&m, &m, &too_much).is_err());
    }

    #[test]
    fn elementary_weld_anchor_points() {
        let w = ElementaryWeld::new(0.7, 1.3).unwrap();
        assert!(w.map_right(0.7).abs() < 1e-9);
        assert!(w.map_left(-1.3).abs() < 1e-9);
        let tip = w.tip();
        let expect_mod = 0.7f64.powf(0.35) * 1.3f64.powf(0.65);
        assert!((tip.norm() - expect_mod).abs() < 1e-12);
        // symmetric weld: vertical slit
        let s = ElementaryWeld::new(0.9, 0.9).unwrap();
        assert!(s.tip().re.abs() < 1e-12);
        assert!(s.tip().im > 0.0);
        assert!(ElementaryWeld::new(0.0, 1.0).is_err());
    }

    #[test]
    fn elementary_weld_capacity_expansion() {
        // phi(z) = z + (q - p) - (pq/2)/z + O(1/z^2) => capacity pq/4
        let w = ElementaryWeld::new(0.6, 1.1).unwrap();
        let z = Complex64::new(0.0, 500.0);
        let tail = w.map(z) - z - Complex64::new(w.q - w.p, 0.0);
        let predict = -Complex64::new(w.p * w.q / 2.0, 0.0) / z;
        assert!((tail - predict).norm() < 5e-6, "{tail} vs {predict}");
    }

    #[test]
    fn symmetric_correspondence_builds_imaginary_axis() {
        let m = uniform_measure(100, -1.0, 1.0, 1.0);
        let qs: Vec<f64> = (1..=32).map(|k| k as f64 * 0.025).collect();
        let corr = quantum_correspondence(&m, &m, &qs).unwrap();
        let iface = build_welding_curve(&corr).unwrap();
        for z in &iface.curve[1..] {
            assert!(z.re.abs() < 1e-6, "seam off the imaginary axis: {z}");
            assert!(z.im > 0.0);
        }
        assert!(iface.is_simple(0));
        // single pair = straight slit matching the elementary weld
        let single = Correspondence::new(
            vec![CorrPair { x: 0.5, y: -0.5, q: 0.5 }],
            (String::from("u"), String::from("u")),
        )
        .unwrap();
        let one = build_welding_curve(&single).unwrap();
        let w = ElementaryWeld::new(0.5, 0.5).unwrap();
        assert!((one.curve[1] - w.tip()).norm() < 1e-12);
    }

    #[test]
    fn mirror_symmetry_exact() {
        // swapping the two measures mirrors the curve
        let n = 64;
        let edges: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
        let dens_a: Vec<f64> = (0..n).map(|i| 0.5 + (i as f64 / n as f64)).collect();
        let dens_b: Vec<f64> = (0..n).map(|i| 1.5 - (i as f64 / n as f64)).collect();
        let ma =
            BoundaryMeasure::from_raw(edges.clone(), dens_a, 1.0, MeasureKind::Critical).unwrap();
        let mb = BoundaryMeasure::from_raw(edges, dens_b, 1.0, MeasureKind::Critical).unwrap();
        let qs: Vec<f64> = (1..=20).map(|k| k as f64 * 0.02).collect();
        let ab = build_welding_curve(&quantum_correspondence(&ma, &mb, &qs).unwrap()).unwrap();
        // mirrored input: right measure = mirror of mb, left = mirror of ma.
        // mirror of a measure on [-1,1] is density reversed.
        let n2 = 64;
        let edges2: Vec<f64> = (0..=n2).map(|i| -1.0 + 2.0 * i as f64 / n2 as f64).collect();
        let dens_b_m: Vec<f64> = (0..n2).map(|i| 1.5 - ((n2 - 1 - i) as f64 / n2 as f64)).collect();
        let dens_a_m: Vec<f64> = (0..n2).map(|i| 0.5 + ((n2 - 1 - i) as f64 / n2 as f64)).collect();
        let mbm =
            BoundaryMeasure::from_raw(edges2.clone(), dens_b_m, 1.0, MeasureKind::Critical).unwrap();
        let mam =
            BoundaryMeasure::from_raw(edges2, dens_a_m, 1.0, MeasureKind::Critical).unwrap();
        let ba = build_welding_curve(&quantum_correspondence(&mbm, &mam, &qs).unwrap()).unwrap();
        for (u, v) in ab.curve.iter().zip(&ba.curve) {
            assert!((u + v.conj()).norm() < 1e-9, "mirror mismatch {u} vs {v}");
        }
    }

    #[test]
    fn boundary_map_and_inverse_round_trip() {
        let m = uniform_measure(100, -1.5, 1.5, 0.8);
        let qs: Vec<f64> = (1..=16).map(|k| k as f64 * 0.05).collect();
        let corr = quantum_correspondence(&m, &m, &qs).unwrap();
        let iface = build_welding_curve(&corr).unwrap();
        let x_last = iface.retained.last().unwrap().x;
        for &x in &[x_last + 0.01, x_last + 0.4, 1.4, -1.2] {
            if x < 0.0 && x > iface.retained.last().unwrap().y {
                continue;
            }
            let w = iface.map_boundary(x).unwrap();
            let back = iface.inverse_boundary(w).unwrap();
            assert!((back - x).abs() < 1e-8, "round trip {x} -> {w} -> {back}");
        }
        assert!(iface.map_boundary(0.0).is_err());
        assert!(iface.map_boundary(x_last * 0.5).is_err());
    }

    #[test]
    fn push_field_identity_and_scaling() {
        let sampler = FieldSampler::new(
            GridSpec { x_min: -2.0, x_max: 2.0, n: 256, j_max: 8 },
            CovarianceSpec::default(),
        )
        .unwrap();
        let f = sampler.sample_neumann(RngStream::new(301, 0));
        let id = push_field(&f, &ScalingMap { factor: 1.0 }, 2.0).unwrap();
        for j in 0..=f.j_max() {
            for i in 0..f.n() {
                assert!((id.value(j, i) - f.value(j, i)).abs() < 1e-12);
            }
        }
        // scaling with h ≡ 0 gives Q log r: row 0 is identically zero with
        // kappa0 = 0 and value_at_scale clamps to it for large local scales…
        // instead check the exact shift at matched scales on a mid row.
        let r = 0.5;
        let pushed = push_field(&f, &ScalingMap { factor: r }, 2.0).unwrap();
        // at scale eps, position x: value = h(r x at scale r eps) + 2 ln r
        let j = 4u32;
        let i = 170usize;
        let expect = f.value_at_scale(r * f.xs()[i], r * f.scales()[j as usize]) + 2.0 * r.ln();
        assert!((pushed.value(j, i) - expect).abs() < 1e-12);
    }

    #[test]
    fn pushed_measure_is_pushforward() {
        // interval masses: nu_pushed(psi(A)) = nu(A) within 1e-3 relative;
        // measures are transported by their cumulatives, so this is exact up
        // to the endpoint interpolation of the original cell grid.
        let sampler = FieldSampler::new(
            GridSpec { x_min: -2.0, x_max: 2.0, n: 1024, j_max: 12 },
            CovarianceSpec::default(),
        )
        .unwrap();
        let w =
            sample_wedge(2.0, 1.0, Parametrisation::LastExit, &sampler, RngStream::new(302, 1))
                .unwrap();
        let eps = 2f64.powi(-10);
        let beta = 5.0;
        let r = 1.25;
        let m_orig = truncated_derivative_measure(&w.field, beta, eps).unwrap();
        let map = ScalingMap { factor: r };
        let m_push = push_measure(&m_orig, &map).unwrap();
        let e = m_push.edges();
        for &(ia, ib) in &[(576usize, 768usize), (200, 440), (380, 700)] {
            let (a, b) = (e[ia], e[ib]);
            let lhs = m_push.mass(a, b);
            let rhs = m_orig.mass(r * a, r * b);
            let rel = (lhs - rhs).abs() / rhs.abs().max(1e-12);
            assert!(rel < 1e-9, "pushforward mismatch {lhs} vs {rhs} (rel {rel})");
        }
    }

    #[test]
    fn side_lengths_basics() {
        let sampler = FieldSampler::new(
            GridSpec { x_min: -2.0, x_max: 2.0, n: 512, j_max: 10 },
            CovarianceSpec::default(),
        )
        .unwrap();
        let w =
            sample_wedge(2.0, 1.0, Parametrisation::LastExit, &sampler, RngStream::new(303, 0))
                .unwrap();
        let d = crate::loewner::sample_driving(4.0, 0.3, 1e-3, RngStream::new(303, 1)).unwrap();
        let (l0, r0) = side_lengths(&w.field, &d, 0.0, 2f64.powi(-8), 5.0, 64).unwrap();
        assert_eq!((l0, r0), (0.0, 0.0));
        let (l, r) = side_lengths(&w.field, &d, 0.3, 2f64.powi(-8), 5.0, 96).unwrap();
        assert!(l > 0.0 && r > 0.0, "L={l} R={r}");
    }

    #[test]
    fn zip_up_identity_at_zero() {
        let sampler = FieldSampler::new(
            GridSpec { x_min: -2.0, x_max: 2.0, n: 256, j_max: 8 },
            CovarianceSpec::default(),
        )
        .unwrap();
        let w =
            sample_wedge(2.0, 1.0, Parametrisation::LastExit, &sampler, RngStream::new(304, 0))
                .unwrap();
        let (f2, curve) = zip_up(&w.field, None, 0.0, 5.0, 2f64.powi(-8), 256).unwrap();
        assert_eq!(&f2, &w.field);
        assert!(curve.is_empty());
    }

    #[test]
    fn zip_up_welds_matched_points() {
        let sampler = FieldSampler::new(
            GridSpec { x_min: -2.0, x_max: 2.0, n: 512, j_max: 10 },
            CovarianceSpec::default(),
        )
        .unwrap();
        let w =
            sample_wedge(2.0, 1.0, Parametrisation::LastExit, &sampler, RngStream::new(305, 2))
                .unwrap();
        let eps = 2f64.powi(-10);
        let beta = 5.0;
        let measure = truncated_derivative_measure(&w.field, beta, eps).unwrap();
        let t = 0.25 * measure
            .mass(0.0, 2.0)
            .min(measure.mass(-2.0, 0.0));
        let qs: Vec<f64> = (1..=64).map(|k| t * k as f64 / 64.0).collect();
        let corr = quantum_correspondence(&measure, &measure, &qs).unwrap();
        let iface = build_welding_curve(&corr).unwrap();
        // matched points weld to the same seam point: approach each retained
        // pair from inside the half-plane and compare images under the full
        // composition; they must coincide and lie on the seam.
        let delta = 1e-10;
        for (k, pair) in iface.retained.iter().enumerate().step_by(16) {
            let zr = iface.map_point(Complex64::new(pair.x, delta));
            let zl = iface.map_point(Complex64::new(pair.y, delta));
            // pair k welds to 0, which the NEXT weld sends to its tip: the
            // common image is the seam vertex of step k+1
            let idx = iface.curve.len() - 2 - k;
            let vertex = iface.curve[idx];
            let local = (iface.curve[idx + 1] - vertex).norm();
            let tol = 0.25 * local + 1e-6;
            assert!((zr - zl).norm() < tol, "pair {k} images differ: {zr} vs {zl} (tol {tol})");
            assert!(
                (zr - vertex).norm() < 4.0 * tol,
                "pair {k} image {zr} not on the seam at {vertex}"
            );
        }
    }

    #[test]
    fn welding_curves_from_wedge_fields_are_simple() {
        let sampler = FieldSampler::new(
            GridSpec { x_min: -2.0, x_max: 2.0, n: 512, j_max: 10 },
            CovarianceSpec::default(),
        )
        .unwrap();
        let mut checked = 0;
        let mut r = 0u64;
        while checked < 20 {
            let wl = sample_wedge(
                2.0,
                2.0,
                Parametrisation::LastExit,
                &sampler,
                RngStream::new(306, r),
            )
            .unwrap();
            let wr = sample_wedge(
                2.0,
                2.0,
                Parametrisation::LastExit,
                &sampler,
                RngStream::new(307, r),
            )
            .unwrap();
            r += 1;
            let eps = 2f64.powi(-10);
            let ml = truncated_derivative_measure(&wl.field, 5.0, eps).unwrap();
            let mr = truncated_derivative_measure(&wr.field, 5.0, eps).unwrap();
            let qmax = 0.8 * ml.mass(0.0, 2.0).min(mr.mass(-2.0, 0.0));
            if qmax <= 0.0 {
                continue;
            }
            let n_pairs = 128;
            let qs: Vec<f64> = (1..=n_pairs).map(|k| qmax * k as f64 / n_pairs as f64).collect();
            let corr = match quantum_correspondence(&ml, &mr, &qs) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let iface = match build_welding_curve(&corr) {
                Ok(i) => i,
                Err(_) => continue,
            };
            assert!(iface.is_simple(8), "seam not simple at replica {r}");
            checked += 1;
        }
    }

    #[test]
    fn welding_consistency_pushforward_masses() {
        // exact cumulative transport through the weld inverse reproduces
        // interval masses beyond the welded region
        let sampler = FieldSampler::new(
            GridSpec { x_min: -2.0, x_max: 2.0, n: 1024, j_max: 12 },
            CovarianceSpec::default(),
        )
        .unwrap();
        let w =
            sample_wedge(2.0, 1.0, Parametrisation::LastExit, &sampler, RngStream::new(308, 4))
                .unwrap();
        let eps = 2f64.powi(-10);
        let beta = 5.0;
        let m = truncated_derivative_measure(&w.field, beta, eps).unwrap();
        let t = 0.2 * m.mass(0.0, 2.0).min(m.mass(-2.0, 0.0));
        let qs: Vec<f64> = (1..=128).map(|k| t * k as f64 / 128.0).collect();
        let corr = quantum_correspondence(&m, &m, &qs).unwrap();
        let iface = build_welding_curve(&corr).unwrap();
        let m_push = push_measure(&m, &WeldInverseMap { iface: &iface }).unwrap();
        let x_t = iface.retained.last().unwrap().x;
        let (a_orig, b_orig) = (x_t + 0.05, x_t + 0.6);
        let wa = iface.map_boundary(a_orig).unwrap();
        let wb = iface.map_boundary(b_orig).unwrap();
        let lhs = m_push.mass(wa, wb);
        let rhs = m.mass(a_orig, b_orig);
        let rel = (lhs - rhs).abs() / rhs.max(1e-9);
        assert!(rel < 2e-3, "welded pushforward mismatch: {lhs} vs {rhs} rel {rel}");

        // field-level transport (scale-matched surrogate) stays in the same
        // ballpark: sanity check only
        let (pushed, _curve) = zip_up(&w.field, None, t, beta, eps, 128).unwrap();
        let m_field = truncated_derivative_measure(&pushed, beta, eps).unwrap();
        let lhs_f = m_field.mass(wa, wb);
        assert!(lhs_f > 0.2 * rhs && lhs_f < 5.0 * rhs, "field transport off: {lhs_f} vs {rhs}");
    }
}
