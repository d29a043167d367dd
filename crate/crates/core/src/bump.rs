//! The fixed plateau bump `φ = χ_[-3/8, 3/8] ∗ η_δ` and its inverse Fourier
//! transform `φ̌(x) = ∫ φ(ξ) e^{i2πxξ} dξ`.
//!
//! `η_δ(u) = η(u/δ)/δ` with `η(u) ∝ exp(-1/(1-u²))` on (-1, 1). With the
//! default `δ = 1/8` the bump equals 1 on [-1/4, 1/4] and vanishes outside
//! [-1/2, 1/2]. `φ` is real and even, so `φ̌` is real and even too.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::quadrature::{composite_nodes, GaussLegendre};
use crate::sum::pairwise;

pub const BOX_HALF_WIDTH: f64 = 0.375;
pub const DEFAULT_DELTA: f64 = 0.125;
/// Minimum node count of the φ̌ quadrature.
pub const BASE_NODES: usize = 1 << 12;
/// Nodes per unit of |x| once |x| exceeds `BASE_NODES / 64`.
pub const NODES_PER_UNIT_X: f64 = 64.0;

const CDF_CELLS: usize = 256;
const GRID_LEVELS: usize = 12;

/// Sample spacing of the fast φ̌ table is `1 / TABLE_DENSITY`.
const TABLE_DENSITY: usize = 16;
const STENCIL: usize = 12;
const TABLE_MAX_X: f64 = 8192.0;

/// Normalised antiderivative of the mollifier on [-1, 1], tabulated on a
/// uniform grid and refined inside a cell with a 16-point rule.
#[derive(Debug)]
struct MollifierCdf {
    norm: f64,
    cumulative: Vec<f64>,
}

fn mollifier_raw(u: f64) -> f64 {
    let s = 1.0 - u * u;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

impl MollifierCdf {
    fn new() -> Self {
        let rule = GaussLegendre::sixteen();
        let h = 2.0 / CDF_CELLS as f64;
        let mut cumulative = Vec::with_capacity(CDF_CELLS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for j in 0..CDF_CELLS {
            let lo = -1.0 + h * j as f64;
            acc += rule.mapped(lo, lo + h).map(|(u, w)| w * mollifier_raw(u)).sum::<f64>();
            cumulative.push(acc);
        }
        let norm = acc;
        for v in cumulative.iter_mut() {
            *v /= norm;
        }
        Self { norm, cumulative }
    }

    fn density(&self, u: f64) -> f64 {
        mollifier_raw(u) / self.norm
    }

    /// ∫_{-1}^{s} η.
    fn at(&self, s: f64) -> f64 {
        if s <= -1.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        let h = 2.0 / CDF_CELLS as f64;
        let j = (((s + 1.0) / h).floor() as usize).min(CDF_CELLS - 1);
        let lo = -1.0 + h * j as f64;
        let partial: f64 = GaussLegendre::sixteen()
            .mapped(lo, s)
            .map(|(u, w)| w * self.density(u))
            .sum();
        (self.cumulative[j] + partial).clamp(0.0, 1.0)
    }
}

/// Quadrature grid for φ̌ on [0, 1/2]: node positions and `2·w·φ(ξ)`.
#[derive(Debug)]
struct TransformGrid {
    nodes: Vec<f64>,
    weighted: Vec<f64>,
}

#[derive(Debug)]
pub struct BumpFunction {
    delta: f64,
    base_nodes: usize,
    cdf: MollifierCdf,
    grids: Vec<OnceLock<Arc<TransformGrid>>>,
    table: Vec<OnceLock<[f64; TABLE_DENSITY]>>,
}

impl BumpFunction {
    pub fn new(delta: f64) -> Result<Self> {
        Self::with_nodes(delta, BASE_NODES)
    }

    /// Bump with a non-default minimum node count for φ̌ (used to check that
    /// derived constants are stable under refinement).
    pub fn with_nodes(delta: f64, base_nodes: usize) -> Result<Self> {
        if !(delta > 0.0 && delta <= DEFAULT_DELTA) {
            return Err(invalid("delta", format!("{delta} is outside (0, 1/8]")));
        }
        if base_nodes < 16 {
            return Err(invalid("base_nodes", "need at least one 16-point panel"));
        }
        let table_chunks = TABLE_MAX_X as usize + STENCIL;
        Ok(Self {
            delta,
            base_nodes: base_nodes.next_multiple_of(16),
            cdf: MollifierCdf::new(),
            grids: (0..GRID_LEVELS).map(|_| OnceLock::new()).collect(),
            table: (0..table_chunks).map(|_| OnceLock::new()).collect(),
        })
    }

    /// The process-wide bump with `δ = 1/8` and default node counts.
    pub fn standard() -> &'static BumpFunction {
        static STANDARD: OnceLock<BumpFunction> = OnceLock::new();
        STANDARD.get_or_init(|| BumpFunction::new(DEFAULT_DELTA).expect("default delta is valid"))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn phi(&self, x: f64) -> f64 {
        let x = x.abs();
        let upper = self.cdf.at((x + BOX_HALF_WIDTH) / self.delta);
        let lower = self.cdf.at((x - BOX_HALF_WIDTH) / self.delta);
        (upper - lower).clamp(0.0, 1.0)
    }

    /// Node count used for φ̌(x): at least `max(base, 64|x|)`, rounded up to a
    /// power-of-two multiple of the base count so grids can be shared.
    pub fn nodes_for(&self, x: f64) -> usize {
        let wanted = (NODES_PER_UNIT_X * x.abs()).ceil().max(self.base_nodes as f64);
        let mut m = self.base_nodes;
        let mut level = 0;
        while (m as f64) < wanted && level + 1 < GRID_LEVELS {
            m *= 2;
            level += 1;
        }
        m
    }

    fn grid(&self, nodes: usize) -> Arc<TransformGrid> {
        let level = (nodes / self.base_nodes).trailing_zeros() as usize;
        self.grids[level]
            .get_or_init(|| {
                let pairs = composite_nodes(0.0, 0.5, nodes / 16);
                let nodes: Vec<f64> = pairs.iter().map(|&(x, _)| x).collect();
                let weighted = pairs.iter().map(|&(x, w)| 2.0 * w * self.phi(x)).collect();
                Arc::new(TransformGrid { nodes, weighted })
            })
            .clone()
    }

    /// φ̌(x) by composite Gauss–Legendre quadrature of `2∫₀^{1/2} φ(ξ) cos(2πxξ) dξ`.
    pub fn phi_check(&self, x: f64) -> f64 {
        let grid = self.grid(self.nodes_for(x));
        let w = 2.0 * std::f64::consts::PI * x.abs();
        let terms: Vec<f64> = grid
            .nodes
            .iter()
            .zip(&grid.weighted)
            .map(|(&xi, &c)| c * (w * xi).cos())
            .collect();
        pairwise(&terms)
    }

    /// φ̌_n(x) = φ̌(x + n), the transform of `e^{i2πnξ} φ(ξ)`.
    pub fn phi_check_n(&self, n: i64, x: f64) -> Complex64 {
        Complex64::new(self.phi_check(x + n as f64), 0.0)
    }

    fn sample(&self, index: usize) -> f64 {
        let chunk = index / TABLE_DENSITY;
        let values = self.table[chunk].get_or_init(|| {
            std::array::from_fn(|j| {
                let x = (chunk * TABLE_DENSITY + j) as f64 / TABLE_DENSITY as f64;
                self.phi_check(x)
            })
        });
        values[index % TABLE_DENSITY]
    }

    /// φ̌ from a lazily built sample table (spacing 1/16) with 12-point
    /// Lagrange interpolation. `φ̌` has spectrum in [-1/2, 1/2], so its
    /// derivatives grow at most like π^m and the interpolation error stays
    /// below 1e-12. Falls back to quadrature beyond the table.
    pub fn phi_check_fast(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= TABLE_MAX_X {
            return self.phi_check(x);
        }
        let scaled = x * TABLE_DENSITY as f64;
        let base = scaled.floor();
        let u = scaled - base;
        let base = base as i64;
        if u == 0.0 {
            return self.sample(base as usize);
        }
        let first = base - (STENCIL as i64 / 2 - 1);
        let mut acc = 0.0;
        for j in 0..STENCIL as i64 {
            let mut weight = 1.0;
            let offset = (first + j - base) as f64;
            for k in 0..STENCIL as i64 {
                if k != j {
                    let other = (first + k - base) as f64;
                    weight *= (u - other) / (offset - other);
                }
            }
            // φ̌ is even, so negative sample indices mirror.
            acc += weight * self.sample((first + j).unsigned_abs() as usize);
        }
        acc
    }

    /// `φ̌(y + k)` for every `k` in `shifts`, sharing one interpolation stencil
    /// (integer shifts keep the fractional position fixed).
    pub fn phi_check_shifts(&self, y: f64, shifts: std::ops::RangeInclusive<i64>) -> Vec<f64> {
        let reach = y.abs() + (*shifts.start()).unsigned_abs().max((*shifts.end()).unsigned_abs()) as f64;
        if reach + 1.0 >= TABLE_MAX_X {
            return shifts.map(|k| self.phi_check_fast(y + k as f64)).collect();
        }
        let density = TABLE_DENSITY as i64;
        let scaled = y * TABLE_DENSITY as f64;
        let floor = scaled.floor();
        let u = scaled - floor;
        let base = floor as i64;
        if u == 0.0 {
            return shifts
                .map(|k| self.sample((base + k * density).unsigned_abs() as usize))
                .collect();
        }
        let half = STENCIL as i64 / 2 - 1;
        let weights: [f64; STENCIL] = std::array::from_fn(|j| {
            let offset = j as i64 - half;
            (0..STENCIL as i64)
                .filter(|&k| k != j as i64)
                .map(|k| (u - (k - half) as f64) / ((offset - (k - half)) as f64))
                .product()
        });
        shifts
            .map(|k| {
                let first = base + k * density - half;
                weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * self.sample((first + j as i64).unsigned_abs() as usize))
                    .sum()
            })
            .collect()
    }

    /// sup over `xs` of |φ̌(x)|·(1 + x²).
    pub fn decay_constant(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .map(|&x| self.phi_check(x).abs() * (1.0 + x * x))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        let b = BumpFunction::standard();
        assert_eq!(b.phi(0.0), 1.0);
        assert_eq!(b.phi(0.6), 0.0);
        assert_eq!(b.phi(0.5), 0.0);
        assert!((b.phi(0.25 - 1e-9) - 1.0).abs() <= 1e-12);
        assert!((b.phi(-0.2) - 1.0).abs() <= 1e-12);
        let mid = b.phi(0.375);
        assert!((mid - 0.5).abs() < 1e-12, "ramp midpoint {mid}");
        for i in 0..=100 {
            let x = -0.6 + 1.2 * i as f64 / 100.0;
            let v = b.phi(x);
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(v, b.phi(-x));
        }
    }

    #[test]
    fn ramp_is_monotone() {
        let b = BumpFunction::standard();
        let mut prev = 1.0;
        for i in 0..=200 {
            let v = b.phi(0.25 + 0.25 * i as f64 / 200.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn transform_at_zero_is_box_length() {
        let b = BumpFunction::standard();
        assert!((b.phi_check(0.0) - 0.75).abs() < 1e-12);
        assert!((b.phi_check_n(5, -5.0).re - 0.75).abs() < 1e-12);
    }

    #[test]
    fn transform_is_even() {
        let b = BumpFunction::standard();
        for x in [0.3, 2.7, 19.0, 150.5] {
            assert_eq!(b.phi_check(x), b.phi_check(-x));
            assert_eq!(b.phi_check_n(0, x).re, b.phi_check(x));
        }
    }

    #[test]
    fn node_count_scales_with_argument() {
        let b = BumpFunction::standard();
        assert_eq!(b.nodes_for(1.0), 4096);
        assert_eq!(b.nodes_for(64.0), 4096);
        assert!(b.nodes_for(100.0) >= 6400);
        assert!(b.nodes_for(1000.0) >= 64_000);
    }

    #[test]
    fn fast_path_matches_quadrature() {
        let b = BumpFunction::standard();
        for i in 0..200 {
            let x = -40.0 + 80.0 * ((i as f64 * 0.618_033_988_7) % 1.0);
            let d = (b.phi_check_fast(x) - b.phi_check(x)).abs();
            assert!(d < 1e-11, "x = {x}: {d}");
        }
        assert_eq!(b.phi_check_fast(2.0), b.phi_check(2.0));
    }

    #[test]
    fn shifted_rows_match_pointwise_fast_path() {
        let b = BumpFunction::standard();
        for y in [0.0, 0.37, -3.2, 12.5] {
            let row = b.phi_check_shifts(y, -20..=20);
            for (i, k) in (-20..=20).enumerate() {
                let d = (row[i] - b.phi_check_fast(y + k as f64)).abs();
                assert!(d < 1e-14, "y = {y}, k = {k}: {d}");
            }
        }
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(BumpFunction::new(0.0).is_err());
        assert!(BumpFunction::new(0.2).is_err());
        let narrow = BumpFunction::new(0.05).unwrap();
        assert_eq!(narrow.phi(0.3), 1.0);
        assert_eq!(narrow.phi(0.45), 0.0);
    }
}
