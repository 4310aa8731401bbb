//! Reference computations shared by the integration tests. Nothing here
//! calls into the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// erfc from the non-alternating Maclaurin series of erf for `z < 2` and a
/// continued fraction (evaluated bottom-up) for `z >= 2`.
pub fn erfc_ref(z: f64) -> f64 {
    assert!(z >= 0.0);
    if z < 2.0 {
        // erf(z) = 2/sqrt(pi) e^{-z^2} sum_n (2 z^2)^n z / (1*3*...*(2n+1))
        let mut term = z;
        let mut sum = z;
        let mut n = 0.0;
        while term > 1e-18 * sum {
            n += 1.0;
            term *= 2.0 * z * z / (2.0 * n + 1.0);
            sum += term;
        }
        1.0 - 2.0 / PI.sqrt() * (-z * z).exp() * sum
    } else {
        // erfc(z) = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
        let mut f = z;
        for k in (1..=200).rev() {
            f = z + (k as f64 / 2.0) / f;
        }
        (-z * z).exp() / PI.sqrt() / f
    }
}

/// Zero-drift capture fraction through the reference erfc.
pub fn capture_ref(x: f64, d: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        erfc_ref(x / (2.0 * (d * t).sqrt()))
    }
}

pub fn hit_ref(x: f64, d: f64, t: f64) -> f64 {
    (-(x * x) / (4.0 * d * t)).exp() / (PI * d * t).sqrt()
}

/// Delay spread of the continuous zero-drift impulse response: locate the
/// maximum by golden-section search on a dense grid, then bisect for the
/// falling `1/sqrt(2)` crossing.
pub fn tau_root(x: f64, d: f64) -> f64 {
    let f = |t: f64| hit_ref(x, d, t);
    let scale = x * x / d;
    let grid: Vec<f64> = (1..=20_000).map(|i| scale * i as f64 / 4000.0).collect();
    let k = (0..grid.len())
        .max_by(|&a, &b| f(grid[a]).total_cmp(&f(grid[b])))
        .unwrap();
    let (mut lo, mut hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) > f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let t_peak = 0.5 * (lo + hi);
    let target = f(t_peak) / 2f64.sqrt();
    let (mut lo, mut hi) = (t_peak, t_peak);
    while f(hi) > target {
        hi += scale;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) - t_peak
}

/// Three binomial standard errors plus the step-discretisation allowance.
pub fn mc_tolerance(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt() + 0.005
}
