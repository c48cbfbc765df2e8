//! Graded matrices Ω(τ)MΩ(τ) and their spectra by iterated Schur complements.
//! The weights ε_j = τ₂⋯τ_j are carried in log form and never multiplied into M.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cond_1, eigenvalues, jacobi_eigen, schur_complement, symmetric_eigen, Matrix};
use crate::logscaled::LogScaled;

#[derive(Clone, Debug)]
pub struct GradedMatrix {
    /// block sizes d₁, …, d_p
    pub dims: Vec<usize>,
    /// τ₂, …, τ_p
    pub tau: Vec<LogScaled>,
    pub core: Matrix,
    /// declared ‖M − Mᵗ‖ bound; zero for symmetric cores
    pub asymmetry_bound: f64,
}

impl GradedMatrix {
    pub fn new(dims: Vec<usize>, tau: Vec<LogScaled>, core: Matrix) -> Result<Self> {
        let n: usize = dims.iter().sum();
        if !core.is_square() || core.rows() != n {
            return Err(Error::Dimension {
                expected: n,
                got: core.rows(),
            });
        }
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidInput("block sizes must be positive".into()));
        }
        if tau.len() + 1 != dims.len() {
            return Err(Error::InvalidInput(format!(
                "{} blocks need {} ratios τ, got {}",
                dims.len(),
                dims.len() - 1,
                tau.len()
            )));
        }
        if tau.iter().any(|t| t.sign != 1 || !t.log_mag.is_finite()) {
            return Err(Error::InvalidInput("τ must be positive".into()));
        }
        if !core.all_finite() {
            return Err(Error::NonFinite("graded core".into()));
        }
        Ok(GradedMatrix {
            dims,
            tau,
            core,
            asymmetry_bound: 0.0,
        })
    }

    /// Declare a nonsymmetric core; its symmetric part must be positive definite.
    pub fn with_asymmetry(mut self) -> Result<Self> {
        let skew = (&self.core - &self.core.transpose()).norm_2();
        let lmin = symmetric_eigen(&self.core.symmetric_part())?.values[0];
        if lmin <= 0.0 {
            return Err(Error::Assumption(format!(
                "symmetric part of the core is not positive definite (smallest eigenvalue {lmin:.3e})"
            )));
        }
        self.asymmetry_bound = skew;
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn blocks(&self) -> usize {
        self.dims.len()
    }

    /// ε_j² for j = 1..p
    pub fn weights(&self) -> Vec<LogScaled> {
        let mut out = vec![LogScaled::ONE];
        let mut e = LogScaled::ONE;
        for t in &self.tau {
            e = e.mul(*t);
            out.push(e.powi(2));
        }
        out
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for d in &self.dims {
            off.push(off.last().unwrap() + d);
        }
        off
    }

    /// Ω(τ)MΩ(τ) in plain floats, when no weight underflows.
    pub fn assemble(&self) -> Result<Matrix> {
        let w = self.weights();
        let off = self.offsets();
        let mut eps = vec![0.0; self.size()];
        for j in 0..self.blocks() {
            let e = LogScaled {
                sign: 1,
                log_mag: 0.5 * w[j].log_mag,
            }
            .to_f64()
            .ok_or_else(|| Error::Numerical("graded weights underflow".into()))?;
            eps[off[j]..off[j + 1]].iter_mut().for_each(|v| *v = e);
        }
        Ok(Matrix::from_fn(self.size(), self.size(), |i, k| eps[i] * self.core[(i, k)] * eps[k]))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GradedLevel {
    /// block index, from 1
    pub level: usize,
    /// eigenvalues of J∘R_j(Mˢ), ascending
    pub eigenvalues: Vec<f64>,
    /// ε_j²
    pub weight: LogScaled,
    /// 1-norm condition number of the block eliminated before this level
    pub condition: f64,
}

impl GradedLevel {
    pub fn scaled_eigenvalues(&self) -> Vec<LogScaled> {
        self.eigenvalues
            .iter()
            .map(|&v| LogScaled::from_f64(v).mul(self.weight))
            .collect()
    }
}

/// Spectral clusters ε_j²·σ(J∘R_j(Mˢ)), j = 1..p.
pub fn graded_spectrum(g: &GradedMatrix) -> Result<Vec<GradedLevel>> {
    let ms = g.core.symmetric_part();
    let off = g.offsets();
    let w = g.weights();
    let mut out = Vec::with_capacity(g.blocks());
    for j in 0..g.blocks() {
        let k = off[j];
        let (r, condition) = if k == 0 {
            (ms.clone(), 1.0)
        } else {
            let c = cond_1(&ms.block(0, k, 0, k))?;
            (schur_complement(&ms, k)?, c)
        };
        let dj = g.dims[j];
        let block = r.block(0, dj, 0, dj).symmetric_part();
        let ev = if dj <= 8 { jacobi_eigen(&block)?.values } else { symmetric_eigen(&block)?.values };
        out.push(GradedLevel {
            level: j + 1,
            eigenvalues: ev,
            weight: w[j],
            condition,
        });
    }
    Ok(out)
}

/// ‖R₂(R₁(M)) − R_{1,2}(M)‖_F for the split (d₁, d₂, d₃).
pub fn schur_iteration_identity(m: &Matrix, d1: usize, d2: usize, d3: usize) -> Result<f64> {
    if m.rows() != d1 + d2 + d3 || !m.is_square() {
        return Err(Error::Dimension {
            expected: d1 + d2 + d3,
            got: m.rows(),
        });
    }
    let step = schur_complement(&schur_complement(m, d1)?, d2)?;
    let joint = schur_complement(m, d1 + d2)?;
    Ok((&step - &joint).norm_fro())
}

/// Eliminate the leading blocks of `dims` one at a time and jointly; returns
/// the largest difference over all stages.
pub fn sequential_elimination_residual(m: &Matrix, dims: &[usize]) -> Result<f64> {
    let mut seq = m.clone();
    let mut eliminated = 0;
    let mut worst: f64 = 0.0;
    for &d in &dims[..dims.len().saturating_sub(1)] {
        seq = schur_complement(&seq, d)?;
        eliminated += d;
        let joint = schur_complement(m, eliminated)?;
        worst = worst.max((&seq - &joint).norm_fro());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventSample {
    pub z: Complex64,
    pub resolvent_norm: f64,
    pub distance: f64,
    pub product: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventReport {
    pub samples: Vec<ResolventSample>,
    /// the constant C observed: max ‖(M − z)⁻¹‖·dist(z, σ(M))
    pub constant: f64,
    /// per level, the smallest relative gap between its cluster and the others
    pub cluster_separations: Vec<f64>,
}

/// Smallest singular value of M − z, from the real symmetric embedding of (M − z)*(M − z).
fn sigma_min(m: &Matrix, z: Complex64) -> Result<f64> {
    let n = m.rows();
    let a = Matrix::from_fn(n, n, |i, k| Complex64::new(m[(i, k)], 0.0) - if i == k { z } else { Complex64::new(0.0, 0.0) });
    let k = a.adjoint().matmul(&a);
    let mut e = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = k[(i, j)];
            e[(i, j)] = v.re;
            e[(i + n, j + n)] = v.re;
            e[(i, j + n)] = -v.im;
            e[(i + n, j)] = v.im;
        }
    }
    let ev = jacobi_eigen(&e)?.values;
    Ok(ev[0].max(0.0).sqrt())
}

/// Check ‖(M − z)⁻¹‖·dist(z, σ(M)) ≤ C on the assembled matrix.
pub fn resolvent_gap_check(g: &GradedMatrix, z_samples: &[Complex64]) -> Result<ResolventReport> {
    let m = g.assemble()?;
    let spec = eigenvalues(&m)?;
    let mut samples = Vec::new();
    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    for &z in z_samples {
        let distance = spec.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min);
        if distance <= 1e-14 * scale {
            continue;
        }
        let smin = sigma_min(&m, z)?;
        let resolvent_norm = 1.0 / smin;
        samples.push(ResolventSample {
            z,
            resolvent_norm,
            distance,
            product: resolvent_norm * distance,
        });
    }
    let constant = samples.iter().map(|s| s.product).fold(0.0, f64::max);

    let levels = graded_spectrum(g)?;
    let all: Vec<(usize, f64)> = levels
        .iter()
        .flat_map(|l| {
            let j = l.level;
            l.scaled_eigenvalues().into_iter().map(move |v| (j, v.to_f64_lossy()))
        })
        .collect();
    let cluster_separations = levels
        .iter()
        .map(|l| {
            let mine: Vec<f64> = all.iter().filter(|(j, _)| *j == l.level).map(|p| p.1).collect();
            all.iter()
                .filter(|(j, _)| *j != l.level)
                .flat_map(|(_, v)| mine.iter().map(move |u| (u - v).abs() / u.abs().max(v.abs())))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ResolventReport {
        samples,
        constant,
        cluster_separations,
    })
}
