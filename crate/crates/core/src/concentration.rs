//! Sharp concentration constants for finite spectra.
//!
//! For a finite `Λ` and a 1-periodic `E`, the best `C` in
//! `∫_{E∩[0,1]} |g|² ≥ C ‖g‖₂²` over `spec g ⊂ Λ` is the smallest eigenvalue of
//! the Gram matrix `M_ij = ∫_{E∩[0,1]} e^{i2π(n_i - n_j)x} dx`.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lacunary::{random_with_parameter, LacunarySequence};
use crate::sets::IntervalSet;
use crate::trigpoly::{check_unit_periodic, set_fourier_integral, TrigPolynomial};

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone)]
pub struct ConcentrationProblem {
    spectrum: LacunarySequence,
    set: IntervalSet,
    gram: DMatrix<Complex64>,
}

/// Gram matrix of the restricted exponentials; upper triangle computed,
/// lower triangle mirrored.
pub fn build_gram(spectrum: &LacunarySequence, set: &IntervalSet) -> Result<ConcentrationProblem> {
    check_unit_periodic(set)?;
    if spectrum.is_empty() {
        return Err(invalid("spectrum", "needs at least one frequency"));
    }
    let terms = spectrum.terms();
    let n = terms.len();
    let mut cache: BTreeMap<i64, Complex64> = BTreeMap::new();
    let mut gram = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let gamma = set_fourier_integral(set, 0).re;
    for i in 0..n {
        gram[(i, i)] = Complex64::new(gamma, 0.0);
        for j in i + 1..n {
            let d = terms[i] - terms[j];
            let entry = *cache.entry(d).or_insert_with(|| set_fourier_integral(set, d));
            gram[(i, j)] = entry;
            gram[(j, i)] = entry.conj();
        }
    }
    Ok(ConcentrationProblem {
        spectrum: spectrum.clone(),
        set: set.clone(),
        gram,
    })
}

impl ConcentrationProblem {
    pub fn spectrum(&self) -> &LacunarySequence {
        &self.spectrum
    }

    pub fn set(&self) -> &IntervalSet {
        &self.set
    }

    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.gram
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = self.decompose()?;
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    fn decompose(&self) -> Result<SymmetricEigen<Complex64, nalgebra::Dyn>> {
        SymmetricEigen::try_new(self.gram.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
            .ok_or(Error::NoConvergence { residual: f64::NAN })
    }

    /// Writes `N` followed by `N` rows of `re im` pairs.
    pub fn write_gram<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.gram.nrows();
        writeln!(out, "{n}")?;
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.gram[(i, j)];
                    format!("{:.16e} {:.16e}", z.re, z.im)
                })
                .collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpConstant {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Coefficients of the minimizing polynomial, one per frequency, with the
    /// largest-magnitude entry real and positive.
    pub minimizer: Vec<Complex64>,
    /// `‖Mv - λv‖₂`.
    pub residual: f64,
    /// `∫_E |g|² / ‖g‖₂²` for the minimizer, computed independently.
    pub verified: f64,
}

impl SharpConstant {
    pub fn polynomial(&self, spectrum: &LacunarySequence) -> TrigPolynomial {
        TrigPolynomial::new(spectrum.terms().iter().copied().zip(self.minimizer.iter().copied()))
    }
}

pub fn sharp_constant(problem: &ConcentrationProblem) -> Result<SharpConstant> {
    let eig = problem.decompose()?;
    let (idx_min, &lambda_min) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    let lambda_max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v: DVector<Complex64> = eig.eigenvectors.column(idx_min).into_owned();
    let residual = (&problem.gram * &v - &v * Complex64::new(lambda_min, 0.0)).norm();
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::NoConvergence { residual });
    }

    // ∫|Σ c_i e_{n_i}|² = vᴴ M v with v = c̄.
    let mut coeffs: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
    let lead_idx = coeffs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(i, _)| i)
        .expect("nonempty");
    let lead = coeffs[lead_idx];
    let phase = lead.conj() / lead.norm();
    let scale = 1.0 / coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut coeffs {
        *c *= phase * scale;
    }
    coeffs[lead_idx] = Complex64::new(coeffs[lead_idx].norm(), 0.0);

    let g = TrigPolynomial::new(problem.spectrum.terms().iter().copied().zip(coeffs.iter().copied()));
    let verified = g.integral_over_set(&problem.set)? / g.l2_norm_sq();
    if (verified - lambda_min).abs() > RESIDUAL_TOLERANCE {
        return Err(Error::Numerical(format!(
            "minimizer gives {verified:.17e}, eigenvalue {lambda_min:.17e}"
        )));
    }
    Ok(SharpConstant {
        lambda_min,
        lambda_max,
        minimizer: coeffs,
        residual,
        verified,
    })
}

/// Family of 1-periodic sets of prescribed measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SetShape {
    /// `[0, γ)`.
    Interval,
    /// `⋃_j [j/m, (j + γ)/m)`.
    Comb { teeth: usize },
    /// `pieces` intervals with random lengths and gaps.
    Random { pieces: usize },
}

impl SetShape {
    pub fn label(&self) -> String {
        match self {
            SetShape::Interval => "interval".into(),
            SetShape::Comb { teeth } => format!("comb{teeth}"),
            SetShape::Random { pieces } => format!("random{pieces}"),
        }
    }

    pub fn build<G: Rng + ?Sized>(&self, gamma: f64, rng: &mut G) -> Result<IntervalSet> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid("gamma", format!("{gamma} is outside (0, 1]")));
        }
        if gamma == 1.0 {
            return Ok(IntervalSet::full_line());
        }
        let intervals = match *self {
            SetShape::Interval => vec![(0.0, gamma)],
            SetShape::Comb { teeth } => {
                if teeth == 0 {
                    return Err(invalid("teeth", "needs at least one tooth"));
                }
                let m = teeth as f64;
                (0..teeth).map(|j| (j as f64 / m, (j as f64 + gamma) / m)).collect()
            }
            SetShape::Random { pieces } => {
                if pieces == 0 {
                    return Err(invalid("pieces", "needs at least one piece"));
                }
                let lengths = spacings(rng, pieces, gamma);
                let gaps = spacings(rng, pieces, 1.0 - gamma);
                let mut at = rng.gen::<f64>();
                lengths
                    .iter()
                    .zip(&gaps)
                    .map(|(&len, &gap)| {
                        let piece = (at, at + len);
                        at += len + gap;
                        piece
                    })
                    .collect()
            }
        };
        IntervalSet::periodic(intervals, 1.0)
    }
}

/// `count` nonnegative values summing to `total`, uniform on the simplex.
fn spacings<G: Rng + ?Sized>(rng: &mut G, count: usize, total: f64) -> Vec<f64> {
    let mut cuts: Vec<f64> = (1..count).map(|_| rng.gen::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(count);
    for c in cuts.into_iter().chain(std::iter::once(1.0)) {
        out.push((c - prev) * total);
        prev = c;
    }
    out
}

/// Parameter grid for [`constant_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub gammas: Vec<f64>,
    #[serde(rename = "R")]
    pub r_values: Vec<u64>,
    #[serde(rename = "N")]
    pub sizes: Vec<usize>,
    pub shapes: Vec<SetShape>,
    /// Random spectra per `(R, N)`.
    pub spectra: usize,
    /// Spectra are drawn from `[0, range)`.
    pub range: i64,
}

/// Which constant a report stands in for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstantLabel {
    #[serde(rename = "C(E,Lambda)")]
    SetSpectrum,
    #[serde(rename = "C(gamma,R)")]
    MeasureLacunarity,
    #[serde(rename = "C(R)-lemma2")]
    Lemma2,
    #[serde(rename = "C(R)-lemma3")]
    Lemma3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub params: Vec<(String, String)>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalConstantReport {
    pub label: ConstantLabel,
    pub samples: Vec<Sample>,
    /// Minimum for lower-bound constants, maximum for upper-bound ones.
    pub envelope: f64,
}

impl EmpiricalConstantReport {
    pub fn new(label: ConstantLabel, samples: Vec<Sample>) -> Self {
        let values = samples.iter().map(|s| s.value);
        let envelope = match label {
            ConstantLabel::SetSpectrum | ConstantLabel::MeasureLacunarity => values.fold(f64::INFINITY, f64::min),
            ConstantLabel::Lemma2 | ConstantLabel::Lemma3 => values.fold(f64::NEG_INFINITY, f64::max),
        };
        Self {
            label,
            samples,
            envelope,
        }
    }
}

/// One cell of a sweep, in grid order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub gamma: f64,
    pub r: u64,
    pub n: usize,
    pub set_id: String,
    pub spectrum_id: usize,
    /// `Err` carries the reason a cell could not be realised.
    pub lambda_min: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    /// Minimum `λ_min` per `(γ, R)` over shapes, sizes and spectra.
    pub envelopes: Vec<(f64, u64, f64)>,
    pub report: EmpiricalConstantReport,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Spectra depend on `(R, N, spectrum_id)` and sets on `(γ, shape)` only, so
/// the same spectrum meets every set and vice versa.
pub fn constant_sweep(grid: &SweepGrid, seed: u64) -> Result<SweepResult> {
    let nonempty = !grid.gammas.is_empty()
        && !grid.r_values.is_empty()
        && !grid.sizes.is_empty()
        && !grid.shapes.is_empty()
        && grid.spectra > 0;
    if !nonempty {
        return Err(invalid("grid", "every axis needs at least one value"));
    }

    let spectra: BTreeMap<(usize, usize, usize), std::result::Result<LacunarySequence, String>> = grid
        .r_values
        .iter()
        .enumerate()
        .flat_map(|(ri, &r)| {
            grid.sizes.iter().enumerate().flat_map(move |(ni, &n)| {
                (0..grid.spectra).map(move |si| {
                    let stream = (1 << 48) | ((ri as u64) << 32) | ((ni as u64) << 16) | si as u64;
                    let mut rng = stream_rng(seed, stream);
                    let spectrum = random_with_parameter(&mut rng, n, r, grid.range).map_err(|e| e.to_string());
                    ((ri, ni, si), spectrum)
                })
            })
        })
        .collect();

    let mut sets = BTreeMap::new();
    for (gi, &gamma) in grid.gammas.iter().enumerate() {
        for (hi, shape) in grid.shapes.iter().enumerate() {
            let stream = (2 << 48) | ((gi as u64) << 16) | hi as u64;
            let set = shape.build(gamma, &mut stream_rng(seed, stream))?;
            sets.insert((gi, hi), set);
        }
    }

    let mut keys = Vec::new();
    for gi in 0..grid.gammas.len() {
        for ri in 0..grid.r_values.len() {
            for ni in 0..grid.sizes.len() {
                for hi in 0..grid.shapes.len() {
                    for si in 0..grid.spectra {
                        keys.push((gi, ri, ni, hi, si));
                    }
                }
            }
        }
    }
    let cells: Vec<SweepCell> = keys
        .par_iter()
        .map(|&(gi, ri, ni, hi, si)| {
            let lambda_min = match &spectra[&(ri, ni, si)] {
                Ok(spectrum) => build_gram(spectrum, &sets[&(gi, hi)])
                    .and_then(|p| sharp_constant(&p))
                    .map(|s| s.lambda_min)
                    .map_err(|e| e.to_string()),
                Err(reason) => Err(reason.clone()),
            };
            SweepCell {
                gamma: grid.gammas[gi],
                r: grid.r_values[ri],
                n: grid.sizes[ni],
                set_id: grid.shapes[hi].label(),
                spectrum_id: si,
                lambda_min,
            }
        })
        .collect();

    let mut envelopes = Vec::new();
    for &gamma in &grid.gammas {
        for &r in &grid.r_values {
            let min = cells
                .iter()
                .filter(|c| c.gamma == gamma && c.r == r)
                .filter_map(|c| c.lambda_min.as_ref().ok().copied())
                .fold(f64::INFINITY, f64::min);
            if min.is_finite() {
                envelopes.push((gamma, r, min));
            }
        }
    }
    let samples = cells
        .iter()
        .filter_map(|c| {
            c.lambda_min.as_ref().ok().map(|&value| Sample {
                params: vec![
                    ("gamma".into(), c.gamma.to_string()),
                    ("R".into(), c.r.to_string()),
                    ("N".into(), c.n.to_string()),
                    ("set".into(), c.set_id.clone()),
                    ("spectrum".into(), c.spectrum_id.to_string()),
                    ("seed".into(), seed.to_string()),
                ],
                value,
            })
        })
        .collect();
    Ok(SweepResult {
        cells,
        envelopes,
        report: EmpiricalConstantReport::new(ConstantLabel::MeasureLacunarity, samples),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn seq(terms: &[i64]) -> LacunarySequence {
        LacunarySequence::new(terms.to_vec()).unwrap()
    }

    #[test]
    fn full_period_gives_identity() {
        let p = build_gram(&seq(&[1, 2, 4, 8]), &IntervalSet::full_line()).unwrap();
        assert_eq!(p.gram(), &DMatrix::identity(4, 4).map(|x: f64| Complex64::new(x, 0.0)));
        let s = sharp_constant(&p).unwrap();
        assert!((s.lambda_min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_frequencies_on_half_period() {
        let half = IntervalSet::periodic(vec![(0.0, 0.5)], 1.0).unwrap();
        let p = build_gram(&seq(&[0, 1]), &half).unwrap();
        assert!((p.gram()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((p.gram()[(0, 1)].norm() - 1.0 / PI).abs() < 1e-15);
        assert_eq!(p.gram()[(1, 0)], p.gram()[(0, 1)].conj());
        let s = sharp_constant(&p).unwrap();
        assert!((s.lambda_min - (0.5 - 1.0 / PI)).abs() < 1e-10);
        assert!((s.lambda_max - (0.5 + 1.0 / PI)).abs() < 1e-10);
        assert!(s.minimizer.iter().any(|c| c.im == 0.0 && c.re > 0.0));
    }

    #[test]
    fn singleton_spectrum_is_measure() {
        let set = IntervalSet::periodic(vec![(0.2, 0.45), (0.6, 0.7)], 1.0).unwrap();
        let s = sharp_constant(&build_gram(&seq(&[17]), &set).unwrap()).unwrap();
        assert!((s.lambda_min - 0.35).abs() < 1e-12);
    }

    #[test]
    fn gram_dump_has_header_and_rows() {
        let p = build_gram(&seq(&[0, 3]), &IntervalSet::full_line()).unwrap();
        let mut out = Vec::new();
        p.write_gram(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "2");
        assert_eq!(lines[1].split_whitespace().count(), 4);
    }

    #[test]
    fn shapes_have_prescribed_measure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for shape in [
            SetShape::Interval,
            SetShape::Comb { teeth: 7 },
            SetShape::Random { pieces: 5 },
        ] {
            for gamma in [0.1, 0.5, 0.9, 1.0] {
                let set = shape.build(gamma, &mut rng).unwrap();
                assert!((set.measure_on(0.0, 1.0) - gamma).abs() < 1e-12, "{shape:?} {gamma}");
            }
        }
        assert!(SetShape::Interval.build(0.0, &mut rng).is_err());
    }

    #[test]
    fn sweep_full_measure_row_is_one_and_reports_infeasible_cells() {
        let grid = SweepGrid {
            gammas: vec![1.0, 0.5],
            r_values: vec![1, 9],
            sizes: vec![4],
            shapes: vec![SetShape::Interval, SetShape::Comb { teeth: 3 }],
            spectra: 2,
            range: 64,
        };
        let result = constant_sweep(&grid, 11).unwrap();
        assert_eq!(result.cells.len(), 16);
        for c in &result.cells {
            match (c.r, &c.lambda_min) {
                (9, v) => assert!(v.is_err()),
                (_, Ok(v)) if c.gamma == 1.0 => assert!((v - 1.0).abs() < 1e-12),
                (_, v) => assert!(v.is_ok()),
            }
        }
        assert_eq!(constant_sweep(&grid, 11).unwrap(), result);
    }

    #[test]
    fn equal_magnitude_entries_keep_minimizer() {
        let spectrum = LacunarySequence::new(vec![-26, -25]).unwrap();
        let set = IntervalSet::periodic(vec![(0.3301061627185287, 0.5742117772351322)], 1.0).unwrap();
        let sharp = sharp_constant(&build_gram(&spectrum, &set).unwrap()).unwrap();
        assert!((sharp.verified - sharp.lambda_min).abs() < 1e-14);
    }
}
