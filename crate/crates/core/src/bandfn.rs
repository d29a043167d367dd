//! Band functions: `f` with `supp f̂ ⊂ ⋃_i [n_i - b/4, n_i + b/4]`.
//!
//! Each island `f̂_i` is expanded in a Fourier series of period `b` on the
//! larger window `[n_i - b/2, n_i + b/2]`, in the local variable `ξ - n_i`:
//!
//! ```text
//! c_i^(k) = (1/b) ∫ f̂_i(ξ) e^{-i2πk(ξ - n_i)/b} dξ
//! ```
//!
//! Because the bump `φ((ξ - n_i)/b)` is 1 on the quarter interval and vanishes
//! outside the window, `f̂_i = Σ_k c_i^(k) φ_k((ξ - n_i)/b)` and therefore
//!
//! ```text
//! f(x) = b Σ_k g_k(x) φ̌(bx + k),     g_k(x) = Σ_i c_i^(k) e^{i2πn_i x}.
//! ```
//!
//! The local variable keeps the phase `e^{-i2πk n_i/b}` out of the
//! coefficients, which is what makes the synthesis identity exact for
//! non-integer `b`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bump::BumpFunction;
use crate::error::{invalid, Error, Result};
use crate::lacunary::LacunarySequence;
use crate::quadrature::composite_nodes;
use crate::sets::IntervalSet;
use crate::sum::{pairwise, pairwise_complex};
use crate::trigpoly::{turn, TrigPolynomial};

pub const DEFAULT_K: usize = 64;
/// Largest relative L² mass a profile may carry outside its quarter interval.
pub const SUPPORT_TOLERANCE: f64 = 1e-6;
/// Relative slack when comparing a computed sparsity with a claimed bound.
pub const HYPOTHESIS_SLACK: f64 = 1e-12;
/// Quadrature panels (16 nodes each) per unit of `bx`.
const PANELS_PER_UNIT: f64 = 8.0;

/// Shape of one island's transform, in the local variable `s = ξ - n_i`.
#[derive(Clone)]
pub enum IslandProfile {
    /// `a · χ_[-b/4, b/4](s)`.
    Box(Complex64),
    /// `a · (1 - |s|/(b/4))₊`.
    Triangle(Complex64),
    /// `a · exp(1 - 1/(1 - u²))` with `u = s/(b/4)`; smooth, no closed-form inverse.
    Smooth(Complex64),
    /// Arbitrary profile with no closed-form inverse transform.
    Custom(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for IslandProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IslandProfile::Box(a) => write!(f, "Box({a})"),
            IslandProfile::Triangle(a) => write!(f, "Triangle({a})"),
            IslandProfile::Smooth(a) => write!(f, "Smooth({a})"),
            IslandProfile::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl IslandProfile {
    fn value(&self, s: f64, b: f64) -> Complex64 {
        let w = 0.25 * b;
        match self {
            IslandProfile::Box(a) if s.abs() <= w => *a,
            IslandProfile::Triangle(a) if s.abs() < w => *a * (1.0 - s.abs() / w),
            IslandProfile::Smooth(a) if s.abs() < w => {
                let u = s / w;
                *a * (1.0 - 1.0 / (1.0 - u * u)).exp()
            }
            IslandProfile::Custom(p) => p(s),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// `∫ P(s) e^{i2πxs} ds` when known in closed form.
    fn inverse(&self, x: f64, b: f64) -> Option<Complex64> {
        let w = 0.25 * b;
        let sinc = |u: f64| if u == 0.0 { 1.0 } else { (PI * u).sin() / (PI * u) };
        match self {
            IslandProfile::Box(a) => Some(*a * (2.0 * w * sinc(2.0 * w * x))),
            IslandProfile::Triangle(a) => Some(*a * (w * sinc(w * x).powi(2))),
            IslandProfile::Smooth(_) | IslandProfile::Custom(_) => None,
        }
    }

    fn scale(&self, factor: Complex64) -> Self {
        match self {
            IslandProfile::Box(a) => IslandProfile::Box(a * factor),
            IslandProfile::Triangle(a) => IslandProfile::Triangle(a * factor),
            IslandProfile::Smooth(a) => IslandProfile::Smooth(a * factor),
            IslandProfile::Custom(p) => {
                let p = p.clone();
                IslandProfile::Custom(Arc::new(move |s| p(s) * factor))
            }
        }
    }
}

/// Local Fourier coefficients of one island, indexed `k = -K..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandCoefficients {
    pub coeffs: Vec<Complex64>,
    /// ∫|f̂_i|² over the quarter interval.
    pub mass: f64,
    /// Parseval residual `mass/b - Σ_{|k|≤K} |c^(k)|²`, the truncated tail.
    pub tail: f64,
}

/// Local Fourier coefficients of `profile` (a function of the global frequency
/// `ξ`) around center `n` for `|k| ≤ k_max`.
pub fn coefficients_from_spectrum<F>(profile: F, n: i64, b: f64, k_max: usize) -> Result<IslandCoefficients>
where
    F: Fn(f64) -> Complex64,
{
    check_bandwidth(b)?;
    let center = n as f64;
    let quarter = 0.25 * b;
    let panels = (4 * k_max).max(64).next_multiple_of(2);
    let nodes = composite_nodes(center - quarter, center + quarter, panels);
    let width = 2 * k_max + 1;

    let mut panel_sums = vec![vec![Complex64::new(0.0, 0.0); panels]; width];
    let mut mass_parts = vec![0.0; panels];
    for (idx, &(xi, w)) in nodes.iter().enumerate() {
        let value = profile(xi);
        if value.re == 0.0 && value.im == 0.0 {
            continue;
        }
        let panel = idx / 16;
        mass_parts[panel] += w * value.norm_sqr();
        let step = turn(-(xi - center) / b);
        let mut z = Complex64::new(1.0, 0.0);
        let weighted = value * w;
        panel_sums[k_max][panel] += weighted;
        for k in 1..=k_max {
            z *= step;
            panel_sums[k_max + k][panel] += weighted * z;
            panel_sums[k_max - k][panel] += weighted * z.conj();
        }
    }
    let mass = pairwise(&mass_parts);

    let outside: f64 = [
        (center - 2.0 * quarter, center - quarter),
        (center + quarter, center + 2.0 * quarter),
    ]
    .iter()
    .map(|&(lo, hi)| {
        composite_nodes(lo, hi, 32)
            .iter()
            .map(|&(xi, w)| w * profile(xi).norm_sqr())
            .sum::<f64>()
    })
    .sum();
    let total = mass + outside;
    if total > 0.0 && outside / total >= SUPPORT_TOLERANCE {
        return Err(Error::ProfileOutsideSupport {
            center: n,
            relative: outside / total,
        });
    }

    let coeffs: Vec<Complex64> = panel_sums.iter().map(|parts| pairwise_complex(parts) / b).collect();
    let kept: f64 = pairwise(&coeffs.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>());
    Ok(IslandCoefficients {
        coeffs,
        mass,
        tail: (mass / b - kept).max(0.0),
    })
}

fn check_bandwidth(b: f64) -> Result<()> {
    if b.is_finite() && b > 0.0 {
        Ok(())
    } else {
        Err(invalid("b", format!("{b} is not a positive bandwidth")))
    }
}

#[derive(Debug, Clone)]
pub struct Island {
    pub center: i64,
    /// `c^(k)` stored at index `k + K`.
    pub coeffs: Vec<Complex64>,
    pub profile: Option<IslandProfile>,
    /// ∫|f̂_i|²: quadrature of the profile, or `b Σ_k |c^(k)|²` without one.
    pub mass: f64,
    /// Parseval residual of the truncated series (0 for coefficient-defined islands).
    pub tail: f64,
}

impl Island {
    pub fn coeff(&self, k: i64, k_max: usize) -> Complex64 {
        let idx = k + k_max as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }
}

/// A band function held as per-island local coefficient tables.
#[derive(Debug, Clone)]
pub struct BandFunction {
    b: f64,
    k_max: usize,
    islands: Vec<Island>,
}

/// Value of the truncated synthesis with a bound on the dropped terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synthesis {
    pub value: Complex64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormIdentity {
    /// Σ_i b Σ_k |c_i^(k)|².
    pub lhs: f64,
    /// b Σ_k ‖g_k‖₂².
    pub rhs: f64,
}

/// Ordered pairs of centers closer than `b/2`, against the allowance `R·b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disjointness {
    pub close_pairs: usize,
    pub allowed: f64,
    pub ok: bool,
}

impl BandFunction {
    fn build(b: f64, k_max: usize, mut islands: Vec<Island>) -> Result<Self> {
        check_bandwidth(b)?;
        islands.sort_by_key(|i| i.center);
        for pair in islands.windows(2) {
            let (l, r) = (pair[0].center, pair[1].center);
            if l == r {
                return Err(invalid("islands", format!("center {l} appears twice")));
            }
            if ((r - l) as f64) < 0.5 * b {
                return Err(Error::IslandsOverlap { left: l, right: r });
            }
        }
        Ok(Self { b, k_max, islands })
    }

    pub fn zero(b: f64, k_max: usize) -> Result<Self> {
        Self::build(b, k_max, Vec::new())
    }

    /// Islands given directly by sparse coefficient tables `(k, c)`.
    pub fn from_coefficients(b: f64, k_max: usize, islands: Vec<(i64, Vec<(i64, Complex64)>)>) -> Result<Self> {
        let islands = islands
            .into_iter()
            .map(|(center, table)| {
                let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * k_max + 1];
                for (k, c) in table {
                    if k.unsigned_abs() as usize > k_max {
                        return Err(invalid("coeffs", format!("index {k} exceeds K = {k_max}")));
                    }
                    coeffs[(k + k_max as i64) as usize] += c;
                }
                let mass = b * coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
                Ok(Island {
                    center,
                    coeffs,
                    profile: None,
                    mass,
                    tail: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(b, k_max, islands)
    }

    /// Islands with known profiles; coefficients by numerical integration.
    pub fn from_profiles(b: f64, k_max: usize, islands: Vec<(i64, IslandProfile)>) -> Result<Self> {
        check_bandwidth(b)?;
        let islands = islands
            .into_iter()
            .map(|(center, profile)| {
                let local = profile.clone();
                let table = coefficients_from_spectrum(|xi| local.value(xi - center as f64, b), center, b, k_max)?;
                Ok(Island {
                    center,
                    coeffs: table.coeffs,
                    profile: Some(profile),
                    mass: table.mass,
                    tail: table.tail,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(b, k_max, islands)
    }

    /// Splits a global transform `f̂` over the quarter intervals of `centers`.
    /// A frequency shared by two quarter intervals goes to the lower center.
    pub fn from_global_profile(
        b: f64,
        k_max: usize,
        centers: &LacunarySequence,
        fhat: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    ) -> Result<Self> {
        let quarter = 0.25 * b;
        let terms: Arc<Vec<i64>> = Arc::new(centers.terms().to_vec());
        let islands = (0..terms.len())
            .map(|i| {
                let (fhat, terms) = (fhat.clone(), terms.clone());
                let center = terms[i];
                let n = center as f64;
                let local: Arc<dyn Fn(f64) -> Complex64 + Send + Sync> = Arc::new(move |s: f64| {
                    let claimed_below = terms[..i].iter().any(|&m| (n + s - m as f64).abs() <= quarter);
                    if s.abs() <= quarter && !claimed_below {
                        fhat(n + s)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                (center, IslandProfile::Custom(local))
            })
            .collect();
        Self::from_profiles(b, k_max, islands)
    }

    /// Islands of one shape with amplitudes uniform on the unit disc.
    pub fn random_islands<G: Rng + ?Sized>(
        rng: &mut G,
        centers: &LacunarySequence,
        b: f64,
        k_max: usize,
        shape: fn(Complex64) -> IslandProfile,
    ) -> Result<Self> {
        let islands = centers
            .terms()
            .iter()
            .map(|&n| {
                let r = rng.gen::<f64>().sqrt();
                let theta = rng.gen_range(0.0..2.0 * PI);
                (n, shape(Complex64::from_polar(r, theta)))
            })
            .collect();
        Self::from_profiles(b, k_max, islands)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn islands(&self) -> &[Island] {
        &self.islands
    }

    pub fn centers(&self) -> LacunarySequence {
        LacunarySequence::new(self.islands.iter().map(|i| i.center).collect())
            .expect("centers are validated strictly increasing")
    }

    pub fn is_zero(&self) -> bool {
        self.islands
            .iter()
            .all(|i| i.coeffs.iter().all(|c| c.norm_sqr() == 0.0))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let islands = self
            .islands
            .iter()
            .map(|i| Island {
                center: i.center,
                coeffs: i.coeffs.iter().map(|c| c * factor).collect(),
                profile: i.profile.as_ref().map(|p| p.scale(factor)),
                mass: i.mass * factor.norm_sqr(),
                tail: i.tail * factor.norm_sqr(),
            })
            .collect();
        Self {
            b: self.b,
            k_max: self.k_max,
            islands,
        }
    }

    /// `‖f‖₂² = Σ_i ∫|f̂_i|²`.
    pub fn norm_sq(&self) -> f64 {
        pairwise(&self.islands.iter().map(|i| i.mass).collect::<Vec<_>>())
    }

    /// Highest frequency (cycles per unit x) present in `|f|²`.
    pub fn bandwidth(&self) -> f64 {
        match (self.islands.first(), self.islands.last()) {
            (Some(lo), Some(hi)) => (hi.center - lo.center) as f64 + self.b,
            _ => self.b,
        }
    }

    /// `f̂(ξ)`: the exact profile where one is known, otherwise the series
    /// `Σ_k c^(k) e^{i2πk(ξ - n)/b} φ((ξ - n)/b)` that `synthesize` inverts.
    pub fn fhat(&self, xi: f64) -> Complex64 {
        let half = 0.5 * self.b;
        let bump = BumpFunction::standard();
        let mut acc = Complex64::new(0.0, 0.0);
        for island in &self.islands {
            let s = xi - island.center as f64;
            if s.abs() > half {
                continue;
            }
            acc += match &island.profile {
                Some(p) => p.value(s, self.b),
                None => {
                    let step = turn(s / self.b);
                    let k_max = self.k_max as i64;
                    let mut z = turn(-(k_max as f64) * s / self.b);
                    let mut series = Complex64::new(0.0, 0.0);
                    for k in -k_max..=k_max {
                        series += island.coeff(k, self.k_max) * z;
                        z *= step;
                    }
                    series * bump.phi(s / self.b)
                }
            };
        }
        acc
    }

    /// `f(x)`: closed-form inverse transform for box/triangle islands,
    /// truncated synthesis for the rest.
    pub fn eval(&self, x: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pending = Vec::new();
        for island in &self.islands {
            match island.profile.as_ref().and_then(|p| p.inverse(x, self.b)) {
                Some(v) => acc += turn(island.center as f64 * x) * v,
                None => pending.push(island.clone()),
            }
        }
        if !pending.is_empty() {
            let rest = BandFunction {
                b: self.b,
                k_max: self.k_max,
                islands: pending,
            };
            acc += rest.synthesize(x);
        }
        acc
    }

    /// `g_k(x) = Σ_i c_i^(k) e^{i2πn_i x}`.
    pub fn slice_gk(&self, k: i64) -> TrigPolynomial {
        TrigPolynomial::new(self.islands.iter().map(|i| (i.center, i.coeff(k, self.k_max))))
    }

    /// `b Σ_{|k|≤K} g_k(x) φ̌(bx + k)`.
    pub fn synthesize(&self, x: f64) -> Complex64 {
        if self.islands.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let k_max = self.k_max as i64;
        let phases: Vec<Complex64> = self.islands.iter().map(|i| turn(i.center as f64 * x)).collect();
        let row = BumpFunction::standard().phi_check_shifts(self.b * x, -k_max..=k_max);
        let terms: Vec<Complex64> = row
            .iter()
            .enumerate()
            .map(|(idx, &phi)| {
                let gk: Complex64 = self.islands.iter().zip(&phases).map(|(i, e)| i.coeffs[idx] * e).sum();
                gk * phi
            })
            .collect();
        pairwise_complex(&terms) * self.b
    }

    /// Synthesis together with a Cauchy–Schwarz bound on the dropped `|k| > K`
    /// terms, using the Parseval tails and the envelope `C_φ/(1 + y²)`.
    pub fn synthesize_with_bound(&self, x: f64) -> Synthesis {
        let value = self.synthesize(x);
        let tails: f64 = self.islands.iter().map(|i| i.tail).sum();
        let c_phi = decay_constant();
        let y = self.b * x;
        let k_max = self.k_max as i64;
        let envelope: f64 = (k_max + 1..k_max + 100_000)
            .flat_map(|k| [y + k as f64, y - k as f64])
            .map(|t| (c_phi / (1.0 + t * t)).powi(2))
            .sum();
        let tail_bound = self.b * (self.islands.len() as f64 * tails * envelope).sqrt();
        Synthesis { value, tail_bound }
    }

    /// Total Parseval residual `b Σ_i tail_i` of the truncated series.
    pub fn parseval_tail(&self) -> f64 {
        self.b * self.islands.iter().map(|i| i.tail).sum::<f64>()
    }

    pub fn norm_identity_check(&self) -> NormIdentity {
        let per_island: Vec<f64> = self
            .islands
            .iter()
            .map(|i| self.b * pairwise(&i.coeffs.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>()))
            .collect();
        let k_max = self.k_max as i64;
        let per_k: Vec<f64> = (-k_max..=k_max).map(|k| self.slice_gk(k).l2_norm_sq()).collect();
        NormIdentity {
            lhs: pairwise(&per_island),
            rhs: self.b * pairwise(&per_k),
        }
    }

    /// Relative L² mass of the truncated series on `[n - b/2, n + b/2]`
    /// falling outside the quarter interval, summed over islands.
    pub fn support_leakage(&self) -> f64 {
        let outer = IntervalSet::periodic(vec![(0.25, 0.75)], 1.0).expect("static set");
        let mut outside = 0.0;
        let mut total = 0.0;
        for island in &self.islands {
            let k_max = self.k_max as i64;
            let series = TrigPolynomial::new((-k_max..=k_max).map(|k| (k, island.coeff(k, self.k_max))));
            outside += series.integral_over_set(&outer).unwrap_or(0.0);
            total += series.l2_norm_sq();
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    pub fn disjointness(&self) -> Disjointness {
        let centers: Vec<i64> = self.islands.iter().map(|i| i.center).collect();
        let mut close = 0;
        for (i, &a) in centers.iter().enumerate() {
            for &c in &centers[i + 1..] {
                let d = (c - a) as f64;
                if d > 0.5 * self.b {
                    break;
                }
                close += 2;
            }
        }
        let allowed = self.centers().r_param() as f64 * self.b;
        Disjointness {
            close_pairs: close,
            allowed,
            ok: close as f64 <= allowed,
        }
    }
}

/// Empirical `sup |φ̌(x)|(1 + x²)` over x = 10, 20, ..., 200 for the standard bump.
pub fn decay_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let xs: Vec<f64> = (1..=20).map(|i| 10.0 * i as f64).collect();
        BumpFunction::standard().decay_constant(&xs)
    })
}

/// Cutoff `T` such that `∫_{|y| > bT - shift} |φ̌(y)|² dy ≤ tol`, from the
/// envelope `|φ̌(y)| ≤ C_φ/(1 + y²)`: the tail is at most `2C_φ²/(3Y³)`.
pub fn cutoff_for(b: f64, max_shift: i64, tol: f64) -> f64 {
    let c = decay_constant().max(1.0);
    let reach = (2.0 * c * c / (3.0 * tol)).cbrt();
    ((reach + max_shift.unsigned_abs() as f64) / b).ceil()
}

/// `∫_{region ∩ [-t_cut, t_cut]} integrand`, split along the cells
/// `[n·cell, (n+1)·cell]` with 16-point panels sized by `bandwidth`.
pub fn lattice_integral<F>(region: &IntervalSet, cell: f64, t_cut: f64, bandwidth: f64, integrand: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    if region.is_empty() || t_cut <= 0.0 {
        return 0.0;
    }
    let first = (-t_cut / cell).floor() as i64;
    let last = (t_cut / cell).ceil() as i64;
    let density = (PANELS_PER_UNIT / cell).max(bandwidth);
    let cells: Vec<f64> = (first..last)
        .into_par_iter()
        .map(|n| {
            let lo = (n as f64 * cell).max(-t_cut);
            let hi = ((n + 1) as f64 * cell).min(t_cut);
            let parts: Vec<f64> = region
                .pieces_in(lo, hi)
                .iter()
                .map(|&(l, r)| {
                    let panels = ((r - l) * density).ceil().max(1.0) as usize;
                    composite_nodes(l, r, panels)
                        .iter()
                        .map(|&(x, w)| w * integrand(x))
                        .sum::<f64>()
                })
                .collect();
            pairwise(&parts)
        })
        .collect();
    pairwise(&cells)
}

fn complement_region(set: &IntervalSet) -> Result<IntervalSet> {
    if !set.is_periodic() {
        return Err(invalid("set", "experiments need a periodic set"));
    }
    set.complement()
}

/// One sample of the Lemma 2 left side and its normalised ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lhs: f64,
    pub eps: f64,
    pub norm_sq: f64,
    /// Empirical constant: `lhs/(√ε‖g‖²)`, times `|k - l|²` for Lemma 3.
    pub ratio: f64,
}

fn lemma_report(lhs: f64, eps: f64, norm_sq: f64, weight: f64) -> Result<LemmaReport> {
    let ratio = if eps == 0.0 || norm_sq == 0.0 {
        if lhs > 1e-14 * norm_sq.max(1.0) {
            return Err(Error::Numerical(format!("mass {lhs:.3e} on an empty complement")));
        }
        0.0
    } else {
        lhs * weight / (eps.sqrt() * norm_sq)
    };
    Ok(LemmaReport {
        lhs,
        eps,
        norm_sq,
        ratio,
    })
}

/// `b ∫_{E^c ∩ [-T,T]} |g(x)|² |φ̌_k(bx)|² dx` with `ε` the complement
/// sparsity of `E` at scale `1/b`.
pub fn lemma2_ratio(g: &TrigPolynomial, k: i64, b: f64, set: &IntervalSet, t_cut: f64) -> Result<LemmaReport> {
    check_bandwidth(b)?;
    let eps = set.complement_sparsity(b, None)?;
    let region = complement_region(set)?;
    let bump = BumpFunction::standard();
    let bandwidth = spectrum_width(g) + b;
    let lhs = b * lattice_integral(&region, 1.0 / b, t_cut, bandwidth, |x| {
        let phi = bump.phi_check_fast(b * x + k as f64);
        g.evaluate(x).norm_sqr() * phi * phi
    });
    lemma_report(lhs, eps, g.l2_norm_sq(), 1.0)
}

/// `b ∫_{E^c ∩ [-T,T]} |g|² |φ̌_k(bx) φ̌_l(bx)| dx`, ratio scaled by `|k - l|²`.
pub fn lemma3_ratio(g: &TrigPolynomial, k: i64, l: i64, b: f64, set: &IntervalSet, t_cut: f64) -> Result<LemmaReport> {
    if k == l {
        return Err(invalid("l", "needs k != l"));
    }
    check_bandwidth(b)?;
    let eps = set.complement_sparsity(b, None)?;
    let region = complement_region(set)?;
    let bump = BumpFunction::standard();
    let bandwidth = spectrum_width(g) + b;
    let lhs = b * lattice_integral(&region, 1.0 / b, t_cut, bandwidth, |x| {
        let y = b * x;
        let (lo, hi) = if k < l { (k, l) } else { (l, k) };
        let pk = bump.phi_check_fast(y + lo as f64);
        let pl = bump.phi_check_fast(y + hi as f64);
        g.evaluate(x).norm_sqr() * (pk * pl).abs()
    });
    let gap = (k - l) as f64;
    lemma_report(lhs, eps, g.l2_norm_sq(), gap * gap)
}

fn spectrum_width(g: &TrigPolynomial) -> f64 {
    match (g.coeffs().first_key_value(), g.coeffs().last_key_value()) {
        (Some((&lo, _)), Some((&hi, _))) => (hi - lo) as f64,
        _ => 0.0,
    }
}

/// Outcome of one concentration experiment for a band function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub b: f64,
    /// Complement sparsity of the set at scale `1/b`.
    pub eps: f64,
    /// Relative density of the set at scale `1/b`; diagnostic only.
    pub gamma: f64,
    pub k_max: usize,
    pub t_cut: f64,
    pub mass_out: f64,
    pub norm_sq: f64,
    pub ratio: f64,
    /// `1 - ratio ≥ 1/2`; reported, never asserted.
    pub concentrated_half: bool,
    /// Whether the sparsity hypothesis holds for the supplied `ε` (if any).
    pub hypothesis_ok: Option<bool>,
    pub disjointness: Disjointness,
}

/// Measures `∫_{E^c ∩ [-T,T]} |f|² / ‖f‖²` with `f` from the synthesis formula.
///
/// `eps_bound` is the sparsity level the caller claims for the set; the
/// hypothesis is `sparsity ≤ ε` for `b ≤ 1` and `sparsity ≤ ε/b` for `b > 1`.
pub fn theorem1_experiment(
    f: &BandFunction,
    set: &IntervalSet,
    t_cut: f64,
    eps_bound: Option<f64>,
) -> Result<Theorem1Report> {
    if f.is_zero() {
        return Err(invalid("f", "degenerate (zero) band function"));
    }
    let b = f.b();
    let eps = set.complement_sparsity(b, None)?;
    let gamma = set.relative_density(1.0 / b, None)?;
    let region = complement_region(set)?;
    let mass_out = lattice_integral(&region, 1.0 / b, t_cut, f.bandwidth(), |x| f.synthesize(x).norm_sqr());
    let norm_sq = f.norm_identity_check().lhs;
    let ratio = mass_out / norm_sq;
    let hypothesis_ok = eps_bound.map(|e| {
        let allowed = if b <= 1.0 { e } else { e / b };
        eps <= allowed * (1.0 + HYPOTHESIS_SLACK)
    });
    Ok(Theorem1Report {
        b,
        eps,
        gamma,
        k_max: f.k_max(),
        t_cut,
        mass_out,
        norm_sq,
        ratio,
        concentrated_half: 1.0 - ratio >= 0.5,
        hypothesis_ok,
        disjointness: f.disjointness(),
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IslandRepr {
    n: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    coeffs: Vec<(i64, f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandRepr {
    b: f64,
    #[serde(rename = "K", default = "default_k")]
    k: usize,
    islands: Vec<IslandRepr>,
}

fn default_k() -> usize {
    DEFAULT_K
}

impl Serialize for BandFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let k_max = self.k_max as i64;
        let islands = self
            .islands
            .iter()
            .map(|i| IslandRepr {
                n: i.center,
                coeffs: (-k_max..=k_max)
                    .map(|k| (k, i.coeff(k, self.k_max)))
                    .filter(|(_, c)| c.norm_sqr() != 0.0)
                    .map(|(k, c)| (k, c.re, c.im))
                    .collect(),
                profile: None,
                amplitude: None,
            })
            .collect();
        BandRepr {
            b: self.b,
            k: self.k_max,
            islands,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BandFunction {
    /// Islands carry either `coeffs` or a `profile` (`"box"` / `"triangle"`)
    /// with an optional complex `amplitude` (default 1).
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = BandRepr::deserialize(d)?;
        let mut tables = Vec::new();
        let mut profiles = Vec::new();
        for island in repr.islands {
            match (island.profile, island.coeffs.is_empty()) {
                (Some(shape), true) => {
                    let [re, im] = island.amplitude.unwrap_or([1.0, 0.0]);
                    let a = Complex64::new(re, im);
                    let profile = match shape.as_str() {
                        "box" => IslandProfile::Box(a),
                        "triangle" => IslandProfile::Triangle(a),
                        "smooth" => IslandProfile::Smooth(a),
                        other => return Err(D::Error::custom(format!("unknown profile `{other}`"))),
                    };
                    profiles.push((island.n, profile));
                }
                (None, _) => {
                    if island.amplitude.is_some() {
                        return Err(D::Error::custom("`amplitude` requires `profile`"));
                    }
                    let table = island
                        .coeffs
                        .into_iter()
                        .map(|(k, re, im)| (k, Complex64::new(re, im)))
                        .collect();
                    tables.push((island.n, table));
                }
                (Some(_), false) => return Err(D::Error::custom("island has both `profile` and `coeffs`")),
            }
        }
        let mut f = BandFunction::from_coefficients(repr.b, repr.k, tables).map_err(D::Error::custom)?;
        if !profiles.is_empty() {
            let g = BandFunction::from_profiles(repr.b, repr.k, profiles).map_err(D::Error::custom)?;
            let mut all = f.islands;
            all.extend(g.islands);
            f = BandFunction::build(repr.b, repr.k, all).map_err(D::Error::custom)?;
        }
        Ok(f)
    }
}
