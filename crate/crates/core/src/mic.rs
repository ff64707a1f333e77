//! The measurement information channel `H_M(A) = Σ_x M_x Tr[M_x A]/Tr[M_x]`,
//! its d²×d² matrix `C = Σ_x vec(M_x) vec(M_x)†/Tr[M_x]`, norms, Hermitian
//! eigenbasis, scheme averages and lower-bound certificates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::haar::random_hermitian;
use crate::linalg::{
    self, c64, devectorize, eig_hermitian, hermitian_residual, hs_inner, hs_norm, identity,
    vectorize, CMatrix, CVector, PSD_FLOOR,
};
use crate::states::{trace_product, FixedScheme, Povm};
use crate::{Error, Result};

/// Effects with trace at or below this carry no information and are skipped.
pub const ZERO_EFFECT_TRACE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MicMatrix {
    pub dim: usize,
    pub matrix: CMatrix,
    /// True when built as an average over a scheme.
    pub averaged: bool,
}

impl MicMatrix {
    pub fn norms(&self) -> Result<MicNorms> {
        let eig = eig_hermitian(&self.matrix)?;
        Ok(MicNorms::from_spectrum(&eig.values))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eig_hermitian(&self.matrix)?.min())
    }

    /// `Tr C`, which equals the trace norm of a PSD channel matrix.
    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }
}

/// Signature of a MIC builder; injectable so the suites can be mutation-tested.
pub type MicBuilder = fn(&Povm) -> Result<MicMatrix>;

pub fn mic_matrix(povm: &Povm) -> Result<MicMatrix> {
    let d = povm.dim();
    let mut c = CMatrix::zeros(d * d, d * d);
    let mut used = 0;
    for m in povm.effects() {
        let t = linalg::trace(m).re;
        if t <= ZERO_EFFECT_TRACE {
            continue;
        }
        let v = vectorize(m)?;
        c.gerc(c64(1.0 / t, 0.0), &v, &v, c64(1.0, 0.0));
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidParameter("every effect has zero trace".into()));
    }
    Ok(MicMatrix { dim: d, matrix: c, averaged: false })
}

/// `devec(C vec A)`.
pub fn mic_apply(c: &MicMatrix, a: &CMatrix) -> Result<CMatrix> {
    linalg::ensure_dim(a, c.dim)?;
    let v = &c.matrix * vectorize(a)?;
    devectorize(&v, c.dim)
}

/// `Σ_x M_x Tr[M_x A]/Tr[M_x]` evaluated directly.
pub fn mic_apply_direct(povm: &Povm, a: &CMatrix) -> Result<CMatrix> {
    let d = povm.dim();
    linalg::ensure_dim(a, d)?;
    let mut out = CMatrix::zeros(d, d);
    for m in povm.effects() {
        let t = linalg::trace(m).re;
        if t <= ZERO_EFFECT_TRACE {
            continue;
        }
        out += m * (trace_product(m, a) / t);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicNorms {
    pub trace: f64,
    pub hs: f64,
    pub op: f64,
}

impl MicNorms {
    pub fn from_spectrum(values: &[f64]) -> Self {
        MicNorms {
            trace: values.iter().map(|v| v.abs()).sum(),
            hs: values.iter().map(|v| v * v).sum::<f64>().sqrt(),
            op: values.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }
}

/// Measured residuals for the channel properties of one POVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicPropertyReport {
    pub dim: usize,
    pub k: usize,
    pub min_eigenvalue: f64,
    pub hermitian_residual: f64,
    pub unital_residual: f64,
    pub trace_residual: f64,
    pub hermiticity_residual: f64,
    pub direct_residual: f64,
    pub norms: MicNorms,
    pub probes: usize,
}

impl MicPropertyReport {
    /// Names of violated invariants; empty when everything holds.
    /// `exact_tol` gates the identities, `bound_slack` the norm inequalities.
    pub fn violations(&self, exact_tol: f64, bound_slack: f64) -> Vec<String> {
        let mut v = Vec::new();
        let n = &self.norms;
        let cap = self.dim.min(self.k) as f64;
        let checks = [
            (self.min_eigenvalue >= PSD_FLOOR, "psd"),
            (self.hermitian_residual <= exact_tol, "hermitian"),
            (self.unital_residual <= exact_tol, "unital"),
            (self.trace_residual <= exact_tol, "trace-preserving"),
            (self.hermiticity_residual <= exact_tol, "hermiticity-preserving"),
            (self.direct_residual <= exact_tol, "matrix-vs-direct"),
            (n.op <= 1.0 + bound_slack, "op-norm <= 1"),
            (n.trace <= cap + bound_slack, "trace-norm <= min(d,k)"),
            (n.hs * n.hs <= n.trace + bound_slack, "hs^2 <= trace"),
            (n.hs * n.hs <= n.op * n.trace + bound_slack, "hs^2 <= op*trace"),
        ];
        for (ok, name) in checks {
            if !ok {
                v.push(name.to_string());
            }
        }
        v
    }
}

pub fn mic_property_report<R: Rng + ?Sized>(
    povm: &Povm,
    probes: usize,
    rng: &mut R,
) -> Result<MicPropertyReport> {
    mic_property_report_with(mic_matrix, povm, probes, rng)
}

pub fn mic_property_report_with<R: Rng + ?Sized>(
    build: MicBuilder,
    povm: &Povm,
    probes: usize,
    rng: &mut R,
) -> Result<MicPropertyReport> {
    let d = povm.dim();
    let c = build(povm)?;
    let herm = hermitian_residual(&c.matrix) / hs_norm(&c.matrix).max(1.0);
    let sym = linalg::hermitian_part(&c.matrix);
    let eig = eig_hermitian(&sym)?;
    let id = identity(d);
    let unital = hs_norm(&(mic_apply(&c, &id)? - &id));
    let (mut tr_res, mut herm_res, mut dir_res) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..probes {
        let x = random_hermitian(d, rng);
        let hx = mic_apply(&c, &x)?;
        tr_res = tr_res.max((linalg::trace(&hx) - linalg::trace(&x)).norm());
        herm_res = herm_res.max(hermitian_residual(&hx));
        dir_res = dir_res.max(hs_norm(&(&hx - mic_apply_direct(povm, &x)?)));
    }
    Ok(MicPropertyReport {
        dim: d,
        k: povm.k(),
        min_eigenvalue: eig.min(),
        hermitian_residual: herm,
        unital_residual: unital,
        trace_residual: tr_res,
        hermiticity_residual: herm_res,
        direct_residual: dir_res,
        norms: MicNorms::from_spectrum(&eig.values),
        probes,
    })
}

/// Orthonormal Hermitian eigenbasis; the last vector is `I/√d` with `λ = 1`,
/// the rest are traceless and sorted by ascending eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct MicEigenbasis {
    pub dim: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<CMatrix>,
}

impl MicEigenbasis {
    /// `Σ_j λ_j V_j ⟨V_j, A⟩`.
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            out += v * (hs_inner(v, a) * *lam);
        }
        out
    }

    /// Largest `|⟨V_i, V_j⟩ − δ_ij|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((hs_inner(a, b) - c64(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Traceless directions only (everything but the pinned identity).
    pub fn traceless(&self) -> (&[f64], &[CMatrix]) {
        let n = self.vectors.len() - 1;
        (&self.values[..n], &self.vectors[..n])
    }
}

const CLUSTER_TOL: f64 = 1e-8;
const REALIFY_KEEP: f64 = 1e-6;

pub fn mic_eigenbasis(c: &MicMatrix) -> Result<MicEigenbasis> {
    let d = c.dim;
    let sym = linalg::hermitian_part(&c.matrix);
    let eig = eig_hermitian(&sym)?;
    let n = d * d;
    let scale = 1.0 / (d as f64).sqrt();
    let id_unit = identity(d) * c64(scale, 0.0);
    let id_vec = vectorize(&id_unit)?;

    let mut found: Vec<CMatrix> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values[end] - eig.values[end - 1] <= CLUSTER_TOL {
            end += 1;
        }
        let m = end - start;
        let cols: Vec<CVector> = (start..end).map(|j| eig.vectors.column(j).into_owned()).collect();
        let id_overlap: f64 = cols.iter().map(|v| v.dotc(&id_vec).norm_sqr()).sum();
        let want = m - id_overlap.round() as usize;
        let mut basis: Vec<CMatrix> = Vec::with_capacity(want);
        'outer: for v in &cols {
            let a = devectorize(v, d)?;
            let ad = a.adjoint();
            let re = (&a + &ad) * c64(0.5, 0.0);
            let im = (&a - &ad) * c64(0.0, -0.5);
            for mut cand in [re, im] {
                // Two passes of modified Gram–Schmidt against I/√d and the accepted set.
                let norm0 = hs_norm(&cand);
                if norm0 < REALIFY_KEEP {
                    continue;
                }
                for _ in 0..2 {
                    let t = hs_inner(&id_unit, &cand).re;
                    cand -= &id_unit * c64(t, 0.0);
                    for b in &basis {
                        let t = hs_inner(b, &cand).re;
                        cand -= b * c64(t, 0.0);
                    }
                }
                let norm = hs_norm(&cand);
                if norm > REALIFY_KEEP * norm0.max(1.0) {
                    cand /= c64(norm, 0.0);
                    basis.push(linalg::hermitian_part(&cand));
                    if basis.len() == want {
                        break 'outer;
                    }
                }
            }
        }
        if basis.len() != want {
            return Err(Error::Realification(format!(
                "eigenspace near {:.3e} of dimension {m} gave {} Hermitian vectors, expected {want}",
                eig.values[start],
                basis.len()
            )));
        }
        found.extend(basis);
        start = end;
    }
    if found.len() != n - 1 {
        return Err(Error::Realification(format!(
            "collected {} traceless vectors, expected {}",
            found.len(),
            n - 1
        )));
    }
    let mut pairs: Vec<(f64, CMatrix)> = found
        .into_iter()
        .map(|v| {
            let hv = mic_apply(c, &v).expect("dimension checked");
            (hs_inner(&v, &hv).re, v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut values, mut vectors): (Vec<f64>, Vec<CMatrix>) = pairs.into_iter().unzip();
    values.push(1.0);
    vectors.push(id_unit);
    Ok(MicEigenbasis { dim: d, values, vectors })
}

/// `C̄ = (1/n) Σ_i C_i`; consecutive identical POVMs reuse the previous channel.
pub fn average_mic(scheme: &FixedScheme) -> Result<MicMatrix> {
    average_mic_with(mic_matrix, scheme)
}

pub fn average_mic_with(build: MicBuilder, scheme: &FixedScheme) -> Result<MicMatrix> {
    let povms = scheme.povms();
    if povms.is_empty() {
        return Err(Error::InvalidParameter("empty measurement scheme".into()));
    }
    let d = scheme.dim();
    let mut acc = CMatrix::zeros(d * d, d * d);
    let mut last: Option<(&Povm, CMatrix)> = None;
    for p in povms {
        let c = match &last {
            Some((prev, c)) if *prev == p => c.clone(),
            _ => build(p)?.matrix,
        };
        acc += &c;
        last = Some((p, c));
    }
    acc /= c64(povms.len() as f64, 0.0);
    Ok(MicMatrix { dim: d, matrix: acc, averaged: true })
}

/// Order-level lower bounds with the hidden constant set to 1:
/// `n_R = d²/(ε² sup‖H‖_HS)` and `n_F = d³/(ε² sup‖H‖₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCertificate {
    pub eps: f64,
    pub sup_hs: f64,
    pub sup_trace: f64,
    pub n_randomized: f64,
    pub n_fixed: f64,
    pub povm_count: usize,
}

pub fn lower_bound_certificate(povms: &[Povm], eps: f64) -> Result<LowerBoundCertificate> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1]")));
    }
    let first = povms
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty POVM set".into()))?;
    let d = first.dim();
    let (mut sup_hs, mut sup_trace) = (0.0f64, 0.0f64);
    for p in povms {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
        let n = mic_matrix(p)?.norms()?;
        sup_hs = sup_hs.max(n.hs);
        sup_trace = sup_trace.max(n.trace);
    }
    let df = d as f64;
    let e2 = eps * eps;
    Ok(LowerBoundCertificate {
        eps,
        sup_hs,
        sup_trace,
        n_randomized: df * df / (e2 * sup_hs),
        n_fixed: df * df * df / (e2 * sup_trace),
        povm_count: povms.len(),
    })
}
