//! Independent reference implementations used only by tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use lacuna::sets::IntervalSet;
use num_complex::Complex64;
use rand::Rng;

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// Adaptive Simpson over `count` equal pieces of `[a, b]`, so oscillatory
/// integrands start from a resolved grid.
pub fn simpson_pieces<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, count: usize, tol: f64) -> f64 {
    let h = (b - a) / count as f64;
    (0..count)
        .map(|i| adaptive_simpson(f, a + i as f64 * h, a + (i + 1) as f64 * h, tol / count as f64))
        .sum()
}

/// Largest number of ordered pairs sharing a nonzero difference, by sorting
/// the full list of differences.
pub fn brute_force_r(terms: &[i64]) -> u64 {
    let mut diffs = Vec::new();
    for (i, &a) in terms.iter().enumerate() {
        for (j, &b) in terms.iter().enumerate() {
            if i != j {
                diffs.push(a - b);
            }
        }
    }
    diffs.sort_unstable();
    let mut best = 0u64;
    let mut run = 0u64;
    for (idx, &d) in diffs.iter().enumerate() {
        run = if idx > 0 && diffs[idx - 1] == d { run + 1 } else { 1 };
        best = best.max(run);
    }
    best
}

/// `Σ c_n e^{i2πnx}` from raw pairs.
pub fn eval_raw(coeffs: &[(i64, Complex64)], x: f64) -> Complex64 {
    coeffs
        .iter()
        .map(|&(n, c)| {
            let theta = 2.0 * PI * (n as f64 * x).rem_euclid(1.0);
            c * Complex64::new(theta.cos(), theta.sin())
        })
        .sum()
}

/// `|E ∩ [t, t + a)|` from the raw intervals of a period-`p` set.
pub fn overlap_periodic(intervals: &[(f64, f64)], p: f64, t: f64, a: f64) -> f64 {
    let first = ((t - p) / p).floor() as i64;
    let last = ((t + a) / p).ceil() as i64;
    let mut total = 0.0;
    for m in first..=last {
        let shift = m as f64 * p;
        for &(l, r) in intervals {
            let lo = (l + shift).max(t);
            let hi = (r + shift).min(t + a);
            if hi > lo {
                total += hi - lo;
            }
        }
    }
    total
}

/// Min and max window measure over `count` equally spaced offsets in one period.
pub fn grid_scan(set: &IntervalSet, a: f64, count: usize) -> (f64, f64) {
    let p = set.period().expect("periodic set");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..count {
        let m = overlap_periodic(set.intervals(), p, p * i as f64 / count as f64, a);
        lo = lo.min(m);
        hi = hi.max(m);
    }
    (lo, hi)
}

/// Random period-1 set whose endpoints lie on the lattice `Z/grid`.
pub fn lattice_set<G: Rng + ?Sized>(rng: &mut G, max_intervals: usize, grid: u32) -> IntervalSet {
    let count = rng.gen_range(1..=max_intervals);
    let mut ends: Vec<u32> = (0..2 * count).map(|_| rng.gen_range(0..grid)).collect();
    ends.sort_unstable();
    ends.dedup();
    if ends.len() % 2 == 1 {
        ends.pop();
    }
    let g = grid as f64;
    let intervals = ends.chunks(2).map(|c| (c[0] as f64 / g, c[1] as f64 / g)).collect();
    IntervalSet::periodic(intervals, 1.0).expect("lattice endpoints are valid")
}

/// Random coefficients uniform on the unit disc.
pub fn disc<G: Rng + ?Sized>(rng: &mut G) -> Complex64 {
    Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI))
}

pub fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
