//! The periodization family `g_t(x) = Σ_k f(x + k) e^{-i2πt(x+k)}`.
//!
//! By Poisson summation `ĝ_t(l) = f̂(l + t)`, so slices are built directly from
//! `f̂`; the defining sum is kept as an oracle.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bandfn::{lattice_integral, BandFunction};
use crate::error::{invalid, Result};
use crate::sets::IntervalSet;
use crate::sum::pairwise;
use crate::trigpoly::{check_unit_periodic, turn, TrigPolynomial};

/// Slices with `‖g_t‖₂²` below this are skipped in ratio statistics.
pub const NEGLIGIBLE_NORM: f64 = 1e-14;
/// Tolerance of the averaging inequality.
pub const AVERAGING_SLACK: f64 = 1e-6;
/// Default half-width of the x-window for the direct Plancherel route.
pub const DEFAULT_CUTOFF: f64 = 256.0;

/// Midpoint nodes `t_j = -1/2 + (j + 1/2)/q`.
pub fn midpoint_grid(q: usize) -> Vec<f64> {
    (0..q).map(|j| -0.5 + (j as f64 + 0.5) / q as f64).collect()
}

/// `ĝ_t(l) = f̂(l + t)` for every `l` within half a window of some center.
pub fn slice_at(f: &BandFunction, t: f64) -> Result<TrigPolynomial> {
    if !(t.abs() <= 0.5) {
        return Err(invalid("t", format!("{t} is outside [-1/2, 1/2]")));
    }
    let half = 0.5 * f.b();
    let lattice: BTreeSet<i64> = f
        .islands()
        .iter()
        .flat_map(|i| {
            let n = i.center as f64;
            let lo = (n - half - t).ceil() as i64;
            let hi = (n + half - t).floor() as i64;
            lo..=hi
        })
        .collect();
    Ok(TrigPolynomial::new(
        lattice.into_iter().map(|l| (l, f.fhat(l as f64 + t))),
    ))
}

/// Slices of `f` on a midpoint grid in `t`.
#[derive(Debug, Clone)]
pub struct PeriodizationFamily {
    source: BandFunction,
    t_grid: Vec<f64>,
    slices: Vec<TrigPolynomial>,
}

impl PeriodizationFamily {
    pub fn new(f: &BandFunction, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(invalid("Q", "needs at least one t node"));
        }
        let t_grid = midpoint_grid(q);
        let slices = t_grid.par_iter().map(|&t| slice_at(f, t)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source: f.clone(),
            t_grid,
            slices,
        })
    }

    pub fn source(&self) -> &BandFunction {
        &self.source
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn slices(&self) -> &[TrigPolynomial] {
        &self.slices
    }

    /// Midpoint approximation of `∫ ‖g_t‖₂² dt`, which equals `‖f‖₂²`.
    pub fn mean_norm_sq(&self) -> f64 {
        let norms: Vec<f64> = self.slices.iter().map(|s| s.l2_norm_sq()).collect();
        pairwise(&norms) / self.slices.len() as f64
    }

    /// Whether every slice's spectrum lies in the island-center set.
    pub fn spectra_contained(&self) -> bool {
        let centers: BTreeSet<i64> = self.source.islands().iter().map(|i| i.center).collect();
        self.slices
            .iter()
            .all(|s| s.coeffs().keys().all(|l| centers.contains(l)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectSum {
    pub value: Complex64,
    /// Tail `Σ_{|k|>M}` estimated from the last two terms on each side,
    /// assuming `1/k²` decay of `f`.
    pub tail_estimate: f64,
    /// Last included term exceeds `1e-3` of the running value.
    pub slow_decay: bool,
}

/// Partial sum of the defining series over `|k| ≤ m`.
pub fn direct_periodization(f: &BandFunction, t: f64, x: f64, m: usize) -> DirectSum {
    let m = m as i64;
    let term = |k: i64| {
        let y = x + k as f64;
        f.eval(y) * turn(-t * y)
    };
    let terms: Vec<Complex64> = (-m..=m).map(term).collect();
    let value: Complex64 = crate::sum::pairwise_complex(&terms);
    let edge = |k: i64| terms[(k + m) as usize].norm();
    let (last, tail_estimate) = if m == 0 {
        (edge(0), 0.0)
    } else {
        let last = edge(m).max(edge(-m));
        let near = edge(m) + edge(m - 1) + edge(-m) + edge(1 - m);
        (last, 0.5 * m as f64 * near)
    };
    DirectSum {
        value,
        tail_estimate,
        slow_decay: last > 1e-3 * value.norm(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedPlancherel {
    /// `∫_{-1/2}^{1/2} ∫_{E∩[0,1]} |g_t|² dx dt` on `q` midpoint nodes.
    pub double_integral: f64,
    /// Change against the `q/2`-node rule.
    pub double_error: f64,
    /// `∫_{E∩[-T,T]} |f|²` by lattice quadrature.
    pub direct: f64,
    /// Change against the cutoff `T/2`.
    pub direct_error: f64,
    pub q: usize,
    pub t_cut: f64,
}

fn set_integrals(family: &PeriodizationFamily, set: &IntervalSet) -> Result<Vec<f64>> {
    family.slices().par_iter().map(|s| s.integral_over_set(set)).collect()
}

fn direct_integral(f: &BandFunction, set: &IntervalSet, t_cut: f64) -> f64 {
    lattice_integral(set, 1.0 / f.b(), t_cut, f.bandwidth(), |x| f.eval(x).norm_sqr())
}

/// Both sides of `∫∫_{E∩[0,1]} |g_t|² dx dt = ∫_E |f|²`.
pub fn averaged_plancherel(f: &BandFunction, set: &IntervalSet, q: usize, t_cut: f64) -> Result<AveragedPlancherel> {
    check_unit_periodic(set)?;
    let family = PeriodizationFamily::new(f, q)?;
    let values = set_integrals(&family, set)?;
    let double_integral = pairwise(&values) / q as f64;
    let double_error = if q >= 2 && q.is_multiple_of(2) {
        let coarse = PeriodizationFamily::new(f, q / 2)?;
        (pairwise(&set_integrals(&coarse, set)?) / (q / 2) as f64 - double_integral).abs()
    } else {
        f64::NAN
    };
    let direct = direct_integral(f, set, t_cut);
    let direct_error = (direct - direct_integral(f, set, 0.5 * t_cut)).abs();
    Ok(AveragedPlancherel {
        double_integral,
        double_error,
        direct,
        direct_error,
        q,
        t_cut,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceRow {
    pub t: f64,
    pub norm_sq: f64,
    /// `None` when the slice is negligible.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    pub rows: Vec<SliceRow>,
    /// `∫_E |f|² / ‖f‖₂²` through the averaged identity.
    pub global_ratio: f64,
    pub min_ratio: f64,
    /// `global_ratio ≥ min_ratio - 1e-6`.
    pub averaging_holds: bool,
    pub gamma: f64,
}

/// Per-slice concentration ratios and their average.
///
/// Requires islands inside `[n_i - 1/2, n_i + 1/2]`, i.e. `b ≤ 2`.
pub fn theorem2_experiment(f: &BandFunction, set: &IntervalSet, q: usize) -> Result<Theorem2Report> {
    check_unit_periodic(set)?;
    if f.is_zero() {
        return Err(invalid("f", "degenerate (zero) band function"));
    }
    if f.b() > 2.0 {
        return Err(invalid(
            "b",
            format!("{} exceeds 2: islands leave [n - 1/2, n + 1/2]", f.b()),
        ));
    }
    let gamma = set.measure_on(0.0, 1.0);
    if !(gamma > 0.0) {
        return Err(invalid("set", "needs positive measure on [0, 1)"));
    }
    let family = PeriodizationFamily::new(f, q)?;
    let inside = set_integrals(&family, set)?;
    let rows: Vec<SliceRow> = family
        .t_grid()
        .iter()
        .zip(family.slices())
        .zip(&inside)
        .map(|((&t, s), &e)| {
            let norm_sq = s.l2_norm_sq();
            SliceRow {
                t,
                norm_sq,
                ratio: (norm_sq >= NEGLIGIBLE_NORM).then(|| e / norm_sq),
            }
        })
        .collect();
    let norm = family.mean_norm_sq();
    let global_ratio = pairwise(&inside) / q as f64 / norm;
    let min_ratio = rows.iter().filter_map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(Theorem2Report {
        rows,
        global_ratio,
        min_ratio,
        averaging_holds: global_ratio >= min_ratio - AVERAGING_SLACK,
        gamma,
    })
}
