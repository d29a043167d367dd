//! 1-periodic trigonometric polynomials `g(x) = Σ c_n e^{i2πnx}`.
//!
//! Everything here is evaluated on the Fourier side. `|g|²` has coefficients
//! `h_n = Σ_{k-l=n} c_k conj(c_l)`, which gives the L⁴ norm exactly as
//! `Σ_n |h_n|²` and the mass on an interval set as `Σ_n h_n ∫_E e^{i2πnx}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::lacunary::LacunarySequence;
use crate::sets::IntervalSet;
use crate::sum::{pairwise, pairwise_complex};

/// Slack used by every inequality check in the crate.
pub const RELATIVE_SLACK: f64 = 1e-9;

/// Largest spectrum span handled by the FFT autocorrelation path.
const FFT_MAX_SPAN: i64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPolynomial {
    coeffs: BTreeMap<i64, Complex64>,
}

/// `e^{i2πt}`, with `t` reduced to a fraction of a turn first.
pub fn turn(t: f64) -> Complex64 {
    let frac = t - t.round();
    Complex64::from_polar(1.0, 2.0 * PI * frac)
}

/// `sin(πu)` with `u` reduced modulo 2 first; exact zero at integers.
pub fn sin_pi(u: f64) -> f64 {
    let r = u - 2.0 * (0.5 * u).round();
    if r == r.trunc() {
        0.0
    } else {
        (PI * r).sin()
    }
}

/// `∫_lo^hi e^{i2πnx} dx` in the cancellation-free form
/// `e^{iπn(lo+hi)} sin(πn(hi-lo)) / (πn)`.
pub fn exp_integral(n: i64, lo: f64, hi: f64) -> Complex64 {
    if n == 0 {
        return Complex64::new(hi - lo, 0.0);
    }
    let nf = n as f64;
    let width = hi - lo;
    let amplitude = sin_pi(nf * width) / (PI * nf);
    turn(0.5 * nf * (lo + hi)) * amplitude
}

/// `∫_{E ∩ [0,1]} e^{i2πnx} dx` for a 1-periodic set or a set inside [0, 1].
pub fn set_fourier_integral(set: &IntervalSet, n: i64) -> Complex64 {
    let terms: Vec<Complex64> = set
        .pieces_in(0.0, 1.0)
        .iter()
        .map(|&(l, r)| exp_integral(n, l, r))
        .collect();
    pairwise_complex(&terms)
}

pub(crate) fn check_unit_periodic(set: &IntervalSet) -> Result<()> {
    match set.period() {
        Some(1.0) => Ok(()),
        Some(p) => Err(invalid("set", format!("period {p} is not 1"))),
        None => Ok(()),
    }
}

/// Outcome of the Λ(4) comparison `‖g‖₄ ≤ (1 + R)^{1/4} ‖g‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub l4: f64,
    pub bound: f64,
    pub r_used: u64,
    pub holds: bool,
}

impl TrigPolynomial {
    /// Collects `(frequency, coefficient)` pairs; repeated frequencies add up
    /// and zero coefficients are dropped.
    pub fn new<I: IntoIterator<Item = (i64, Complex64)>>(terms: I) -> Self {
        let mut coeffs = BTreeMap::new();
        for (n, c) in terms {
            *coeffs.entry(n).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c: &mut Complex64| c.re != 0.0 || c.im != 0.0);
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(n: i64, c: Complex64) -> Self {
        Self::new([(n, c)])
    }

    /// Coefficients drawn uniformly from the closed unit disc, one per term of
    /// `spectrum`.
    pub fn random_on<G: Rng + ?Sized>(rng: &mut G, spectrum: &LacunarySequence) -> Self {
        Self::new(spectrum.terms().iter().map(|&n| {
            let r = rng.gen::<f64>().sqrt();
            let theta = rng.gen_range(0.0..2.0 * PI);
            (n, Complex64::from_polar(r, theta))
        }))
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn spectrum(&self) -> LacunarySequence {
        LacunarySequence::new(self.coeffs.keys().copied().collect()).expect("BTreeMap keys are strictly increasing")
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        let terms: Vec<Complex64> = self
            .coeffs
            .iter()
            .map(|(&n, &c)| c * turn((n as f64 * x).fract()))
            .collect();
        pairwise_complex(&terms)
    }

    /// ‖g‖₂² = Σ|c_n|².
    pub fn l2_norm_sq(&self) -> f64 {
        let terms: Vec<f64> = self.coeffs.values().map(|c| c.norm_sqr()).collect();
        pairwise(&terms)
    }

    /// Multiplies by `e^{i2πmx}`.
    pub fn modulate(&self, m: i64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(&n, &c)| (n + m, c)).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|(&n, &c)| (n, c * factor)))
    }

    /// Fourier coefficients `h_n` of `|g|²` by direct pairwise products.
    pub fn autocorrelation(&self) -> BTreeMap<i64, Complex64> {
        let mut h: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
        for (&k, &ck) in &self.coeffs {
            for (&l, &cl) in &self.coeffs {
                h.entry(k - l).or_default().push(ck * cl.conj());
            }
        }
        h.into_iter().map(|(n, v)| (n, pairwise_complex(&v))).collect()
    }

    /// FFT route to the same coefficients, over the dense lag range
    /// `[-span, span]`. `None` when the spectrum span is too wide for a
    /// dense transform.
    pub fn autocorrelation_fft(&self) -> Option<BTreeMap<i64, Complex64>> {
        let (&lo, _) = self.coeffs.first_key_value()?;
        let (&hi, _) = self.coeffs.last_key_value()?;
        let span = hi - lo;
        if span > FFT_MAX_SPAN {
            return None;
        }
        let len = (2 * span as usize + 1).next_power_of_two();
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (&n, &c) in &self.coeffs {
            buf[(n - lo) as usize] = c;
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(len).process(&mut buf);
        for v in buf.iter_mut() {
            *v = Complex64::new(v.norm_sqr(), 0.0);
        }
        planner.plan_fft_inverse(len).process(&mut buf);
        let scale = 1.0 / len as f64;
        let lag = |n: i64| buf[n.rem_euclid(len as i64) as usize] * scale;
        Some((-span..=span).map(|n| (n, lag(n))).collect())
    }

    /// ∫₀¹ |g|⁴ = Σ_n |h_n|².
    pub fn l4_norm_4th_power(&self) -> f64 {
        let terms: Vec<f64> = self.autocorrelation().values().map(|h| h.norm_sqr()).collect();
        pairwise(&terms)
    }

    pub fn lemma1_check(&self) -> Lemma1Report {
        let r_used = self.spectrum().r_param();
        if self.is_zero() {
            return Lemma1Report {
                l4: 0.0,
                bound: 0.0,
                r_used,
                holds: true,
            };
        }
        let l4 = self.l4_norm_4th_power().powf(0.25);
        let bound = (1.0 + r_used as f64).powf(0.25) * self.l2_norm_sq().sqrt();
        Lemma1Report {
            l4,
            bound,
            r_used,
            holds: l4 <= bound + RELATIVE_SLACK * bound,
        }
    }

    /// ∫_{E ∩ [0,1]} |g|², evaluated in closed form.
    pub fn integral_over_set(&self, set: &IntervalSet) -> Result<f64> {
        check_unit_periodic(set)?;
        let pieces = set.pieces_in(0.0, 1.0);
        let terms: Vec<Complex64> = self
            .autocorrelation()
            .into_iter()
            .map(|(n, h)| {
                let parts: Vec<Complex64> = pieces.iter().map(|&(l, r)| exp_integral(n, l, r)).collect();
                h * pairwise_complex(&parts)
            })
            .collect();
        Ok(pairwise_complex(&terms).re.max(0.0))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyRepr {
    coeffs: Vec<(i64, f64, f64)>,
}

impl Serialize for TrigPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            coeffs: self.coeffs.iter().map(|(&n, c)| (n, c.re, c.im)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        Ok(Self::new(
            repr.coeffs.into_iter().map(|(n, re, im)| (n, Complex64::new(re, im))),
        ))
    }
}
