//! Small numerical kernels shared across modules: the exponential integral E1,
//! a radix-2 FFT for circulant sampling, normal distribution helpers and
//! monotone interpolation.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E1(x) = ∫_x^∞ e^{-t}/t dt for x > 0.
///
/// Power series for x ≤ 1, modified Lentz continued fraction beyond.
pub fn exp_int_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 requires x > 0");
    if x <= 1.0 {
        // E1(x) = -γ - ln x + Σ_{k≥1} (-1)^{k+1} x^k / (k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..=40 {
            term *= -x / k as f64;
            let contrib = -term / k as f64;
            sum += contrib;
            if libm::fabs(contrib) < 1e-17 * (1.0 + libm::fabs(sum)) {
                break;
            }
        }
        -EULER_GAMMA - libm::log(x) + sum
    } else if x > 700.0 {
        0.0
    } else {
        // continued fraction e^{-x}/(x+1-1/(x+3-4/(x+5-...)))
        let mut b = x + 1.0;
        let mut c = 1e308;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=200u32 {
            let a = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if libm::fabs(del - 1.0) < 1e-15 {
                break;
            }
        }
        h * libm::exp(-x)
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI)
}

/// In-place radix-2 complex FFT (forward). `data.len()` must be a power of two.
pub fn fft_in_place(data: &mut [Complex64]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    // bit reversal
    let mut j = 0usize;
    for i in 0..n {
        if i < j {
            data.swap(i, j);
        }
        let mut m = n >> 1;
        while m >= 1 && j & m != 0 {
            j ^= m;
            m >>= 1;
        }
        j |= m;
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * core::f64::consts::PI / len as f64;
        let wlen = Complex64::new(libm::cos(ang), libm::sin(ang));
        let mut i = 0;
        while i < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = data[i + k];
                let v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Linear interpolation of `ys` over the sorted grid `xs` (clamped at ends).
pub fn lerp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

/// Uniform grid 0, dt, 2dt, ..., n·dt.
pub fn uniform_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = libm::round(t_max / dt) as usize;
    let mut g = vec![0.0; n + 1];
    for (k, v) in g.iter_mut().enumerate() {
        *v = k as f64 * dt;
    }
    g
}

/// sqrt with the branch mapping the upper half-plane to itself (Im ≥ 0).
pub fn half_plane_sqrt(w: Complex64) -> Complex64 {
    let s = w.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}
