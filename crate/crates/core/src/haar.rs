//! Haar-random unitaries and Monte Carlo checks of Haar moment formulas.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c64, ensure_square, hermitian_part, CMatrix, C64};
use crate::states::{ensure_power_of_two, DensityMatrix};
use crate::stats::{Moments, Proportion};
use crate::{Error, Result};

/// i.i.d. standard complex Gaussian entries, `E|z|² = 1`.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(re * s, im * s)
    })
}

/// GUE-like random Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    hermitian_part(&complex_gaussian_matrix(d, d, rng))
}

/// Random Hermitian matrix with the trace removed.
pub fn random_traceless_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let mut a = random_hermitian(d, rng);
    let t = linalg::trace(&a) / c64(d as f64, 0.0);
    for i in 0..d {
        a[(i, i)] -= t;
    }
    a
}

/// Haar unitary from Ginibre + QR, with each column of `Q` multiplied by the
/// phase `r_jj/|r_jj|` so the law no longer depends on the QR convention.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = complex_gaussian_matrix(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { c64(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarSampleReport {
    pub samples: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub oracle: f64,
    pub z_score: f64,
}

impl HaarSampleReport {
    fn from_moments(m: &Moments, oracle: f64) -> Self {
        let se = if m.count > 1 { m.std_error() } else { f64::NAN };
        let diff = m.mean() - oracle;
        let z_score = if se > 0.0 {
            diff / se
        } else if diff.abs() <= 1e-12 * oracle.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY
        };
        HaarSampleReport { samples: m.count, estimate: m.mean(), std_error: se, oracle, z_score }
    }

    pub fn passes(&self, z_gate: f64) -> bool {
        self.z_score.abs() <= z_gate
    }
}

fn square_dims(a: &CMatrix, b: &CMatrix) -> Result<usize> {
    let d = ensure_square(a)?;
    linalg::ensure_dim(b, d)?;
    Ok(d)
}

/// `E_U Tr[A U† B U]` against `Tr[A]·Tr[B]/d`.
pub fn first_moment_check<R: Rng + ?Sized>(
    a: &CMatrix,
    b: &CMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<HaarSampleReport> {
    let d = square_dims(a, b)?;
    let oracle = (linalg::trace(a) * linalg::trace(b)).re / d as f64;
    let mut m = Moments::default();
    for _ in 0..samples {
        let u = sample_haar_unitary(d, rng);
        let x = crate::states::trace_product(a, &(u.adjoint() * b * &u));
        m.push(x.re);
    }
    Ok(HaarSampleReport::from_moments(&m, oracle))
}

fn check_k(d: usize, k: usize) -> Result<usize> {
    if k == 0 || !d.is_multiple_of(k) {
        return Err(Error::InvalidParameter(format!("k = {k} does not divide d = {d}")));
    }
    Ok(d / k)
}

/// `E Tr[Π₁M]²` for a Haar projector of rank `d/k`:
/// `(Tr[M]²(d²/k − 1) + Tr[M²]·d(1 − 1/k)) / (k(d² − 1))`.
pub fn projector_second_moment_oracle(m: &CMatrix, d: usize, k: usize) -> Result<f64> {
    linalg::ensure_dim(m, d)?;
    check_k(d, k)?;
    if d < 2 {
        return Err(Error::InvalidParameter("d must be at least 2".into()));
    }
    let (df, kf) = (d as f64, k as f64);
    let tr = linalg::trace(m).re;
    let tr2 = crate::states::trace_product(m, m).re;
    Ok((tr * tr * (df * df / kf - 1.0) + tr2 * df * (1.0 - 1.0 / kf)) / (kf * (df * df - 1.0)))
}

/// `Σ_{i ∈ block} u_i† M u_i`, i.e. `Tr[Π M]` for the projector onto a column block.
fn block_expectation(u: &CMatrix, m: &CMatrix, start: usize, r: usize) -> f64 {
    let block = u.columns(start, r);
    let mb = m * block;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..r {
        acc += block.column(j).dotc(&mb.column(j));
    }
    acc.re
}

/// Monte Carlo `E Tr[Π₁M]²` against [`projector_second_moment_oracle`].
pub fn second_moment_check<R: Rng + ?Sized>(
    m: &CMatrix,
    k: usize,
    samples: usize,
    rng: &mut R,
) -> Result<HaarSampleReport> {
    let d = ensure_square(m)?;
    let r = check_k(d, k)?;
    let oracle = projector_second_moment_oracle(m, d, k)?;
    let mut mo = Moments::default();
    for _ in 0..samples {
        let u = sample_haar_unitary(d, rng);
        let t = block_expectation(&u, m, 0, r);
        mo.push(t * t);
    }
    Ok(HaarSampleReport::from_moments(&mo, oracle))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub samples: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
}

impl BoundReport {
    /// Estimate below the bound plus `z_gate` standard errors.
    pub fn holds(&self, z_gate: f64) -> bool {
        let se = if self.std_error.is_finite() { self.std_error } else { 0.0 };
        self.estimate <= self.bound + z_gate * se + 1e-15
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentReport {
    /// `E Tr[Π₁Δ]⁴`.
    pub single: BoundReport,
    /// `E Tr[Π₁Δ]² Tr[Π₂Δ]²`.
    pub cross: BoundReport,
}

/// Slack standing in for the unspecified `O(1/d)` terms of the fourth-moment bounds.
pub fn fourth_moment_slack(d: usize) -> f64 {
    10.0 / d as f64
}

pub fn fourth_moment_bounds(tr_delta_sq: f64, d: usize, k: usize) -> (f64, f64) {
    let (df, kf) = (d as f64, k as f64);
    let pre = tr_delta_sq * tr_delta_sq / (df * df * kf * kf);
    let slack = fourth_moment_slack(d);
    let single = 3.0 * pre * ((1.0 - 1.0 / kf).powi(2) + 2.0 * kf / df + slack);
    let cross = pre * (1.0 - 2.0 / kf + 3.0 / (kf * kf) + slack);
    (single, cross)
}

pub fn fourth_moment_bound_check<R: Rng + ?Sized>(
    delta: &CMatrix,
    k: usize,
    samples: usize,
    rng: &mut R,
) -> Result<FourthMomentReport> {
    let d = ensure_square(delta)?;
    let r = check_k(d, k)?;
    if k < 2 {
        return Err(Error::InvalidParameter("the cross moment needs k >= 2".into()));
    }
    let tr = linalg::trace(delta);
    if tr.norm() > 1e-10 {
        return Err(Error::InvalidParameter(format!("Δ is not traceless (trace {tr})")));
    }
    let tr2 = crate::states::trace_product(delta, delta).re;
    let (b_single, b_cross) = fourth_moment_bounds(tr2, d, k);
    let mut single = Moments::default();
    let mut cross = Moments::default();
    for _ in 0..samples {
        let u = sample_haar_unitary(d, rng);
        let t1 = block_expectation(&u, delta, 0, r);
        let t2 = block_expectation(&u, delta, r, r);
        single.push(t1.powi(4));
        cross.push(t1 * t1 * t2 * t2);
    }
    let mk = |m: &Moments, bound| BoundReport {
        samples: m.count,
        estimate: m.mean(),
        std_error: if m.count > 1 { m.std_error() } else { f64::NAN },
        bound,
    };
    Ok(FourthMomentReport { single: mk(&single, b_single), cross: mk(&cross, b_cross) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub k: usize,
    /// `P(‖p_ρ^U‖₂ ≤ 10/√k)`.
    pub norm_fraction: Proportion,
    /// `P(‖p_ρ^U − p_σ^U‖₂ ≥ 0.07‖ρ − σ‖_HS/√d)`.
    pub separation_fraction: Proportion,
}

pub const COMPRESSION_NORM_CONST: f64 = 10.0;
pub const COMPRESSION_SEPARATION_CONST: f64 = 0.07;

/// Empirical check of quantum domain compression under Haar projector POVMs.
pub fn domain_compression_check<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    k: usize,
    samples: usize,
    rng: &mut R,
) -> Result<CompressionReport> {
    let d = rho.dim();
    if sigma.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: sigma.dim() });
    }
    let r = check_k(d, k)?;
    ensure_power_of_two("k", k)?;
    let diff = rho.matrix() - sigma.matrix();
    let hs = linalg::hs_norm(&diff);
    let norm_thr = COMPRESSION_NORM_CONST / (k as f64).sqrt();
    let sep_thr = COMPRESSION_SEPARATION_CONST * hs / (d as f64).sqrt();
    let (mut ok_norm, mut ok_sep) = (0u64, 0u64);
    for _ in 0..samples {
        let u = sample_haar_unitary(d, rng);
        let mut n2 = 0.0;
        let mut s2 = 0.0;
        for x in 0..k {
            let p = block_expectation(&u, rho.matrix(), x * r, r);
            let q = block_expectation(&u, &diff, x * r, r);
            n2 += p * p;
            s2 += q * q;
        }
        ok_norm += (n2.sqrt() <= norm_thr) as u64;
        ok_sep += (s2.sqrt() >= sep_thr) as u64;
    }
    let n = samples as u64;
    Ok(CompressionReport {
        k,
        norm_fraction: Proportion::new(ok_norm, n),
        separation_fraction: Proportion::new(ok_sep, n),
    })
}
