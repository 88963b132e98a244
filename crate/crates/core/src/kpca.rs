//! Kernel principal component analysis with a polynomial kernel.
//!
//! Fitting builds the Gram matrix K over training rows, double-centers it,
//! and keeps the top-k positive eigenpairs. Coefficient vectors are scaled
//! so the implicit feature-space eigenvectors have unit norm
//! (lambda * ||alpha||^2 = 1), which makes training projections come out as
//! sqrt(lambda) * v directly and keeps out-of-sample transforms consistent.
//!
//! Eigenvector signs are fixed so each coefficient vector's
//! largest-magnitude entry is positive; projections are then deterministic.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::binio::{expect_magic, read_f64, read_u32, write_bytes, write_f64, write_u32};
use crate::error::{Error, Result};
use crate::linalg::sym_eig;

const MAGIC: &[u8; 4] = b"KPCA";
const VERSION: u32 = 1;
/// Relative cutoff below which an eigenvalue counts as numerically zero.
const EIGEN_CUTOFF: f64 = 1e-10;

/// Polynomial kernel (x . y + offset)^degree.
pub fn poly_kernel(x: &[f64], y: &[f64], degree: u32, offset: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::parameter(format!(
            "kernel arguments have dims {} and {}",
            x.len(),
            y.len()
        )));
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((dot + offset).powi(degree as i32))
}

/// A fitted kernel-PCA projector.
#[derive(Debug, Clone, PartialEq)]
pub struct KpcaModel {
    pub training: Array2<f64>,
    pub degree: u32,
    pub offset: f64,
    /// Top-k eigenvalues of the centered Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Coefficient vectors, one row per component, scaled so
    /// lambda_i * ||alpha_i||^2 = 1.
    pub coefficients: Array2<f64>,
    /// Per-row means of the uncentered Gram matrix.
    pub row_means: Array1<f64>,
    /// Grand mean of the uncentered Gram matrix.
    pub grand_mean: f64,
    /// Sum of all positive eigenvalues (for explained-variance ratios).
    pub total_positive_mass: f64,
}

impl KpcaModel {
    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn input_dim(&self) -> usize {
        self.training.ncols()
    }

    pub fn n_training(&self) -> usize {
        self.training.nrows()
    }
}

/// Fits KPCA on the rows of `x`, keeping the top `k` positive eigenpairs.
pub fn fit_kpca(x: &Array2<f64>, k: usize, degree: u32, offset: f64) -> Result<KpcaModel> {
    let n = x.nrows();
    if k == 0 {
        return Err(Error::parameter("k must be at least 1"));
    }
    if n < k + 1 {
        return Err(Error::parameter(format!(
            "need at least k+1 = {} training rows, got {n}",
            k + 1
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("training matrix contains non-finite values"));
    }

    // Gram matrix; the polynomial kernel is a power of the linear Gram.
    let linear = x.dot(&x.t());
    let gram = linear.mapv(|v| (v + offset).powi(degree as i32));

    let row_means = gram
        .rows()
        .into_iter()
        .map(|r| r.sum() / n as f64)
        .collect::<Array1<f64>>();
    let grand_mean = row_means.sum() / n as f64;

    let mut centered = gram;
    for i in 0..n {
        for j in 0..n {
            centered[[i, j]] += grand_mean - row_means[i] - row_means[j];
        }
    }
    // enforce exact symmetry before the eigensolver
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (centered[[i, j]] + centered[[j, i]]);
            centered[[i, j]] = v;
            centered[[j, i]] = v;
        }
    }

    let eig = sym_eig(&centered)?;
    let scale = eig.values[0].max(0.0);
    let cutoff = if scale > 0.0 { EIGEN_CUTOFF * scale } else { 0.0 };
    let positive: Vec<usize> = (0..n)
        .filter(|&i| eig.values[i] > cutoff && eig.values[i] > 0.0)
        .collect();
    if positive.len() < k {
        return Err(Error::Rank {
            requested: k,
            achievable: positive.len(),
        });
    }
    let total_positive_mass: f64 = positive.iter().map(|&i| eig.values[i]).sum();

    let mut eigenvalues = Vec::with_capacity(k);
    let mut coefficients = Array2::zeros((k, n));
    for (c, &idx) in positive.iter().take(k).enumerate() {
        let lam = eig.values[idx];
        eigenvalues.push(lam);
        let inv_sqrt = 1.0 / lam.sqrt();
        // sign convention: largest-magnitude entry positive
        let mut best = 0usize;
        let mut best_mag = -1.0f64;
        for r in 0..n {
            let mag = eig.vectors[[r, idx]].abs();
            if mag > best_mag {
                best_mag = mag;
                best = r;
            }
        }
        let flip = if eig.vectors[[best, idx]] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            coefficients[[c, r]] = eig.vectors[[r, idx]] * inv_sqrt * flip;
        }
    }

    Ok(KpcaModel {
        training: x.clone(),
        degree,
        offset,
        eigenvalues,
        coefficients,
        row_means,
        grand_mean,
        total_positive_mass,
    })
}

/// Projects a vector onto the fitted components.
pub fn transform(model: &KpcaModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.input_dim() {
        return Err(Error::parameter(format!(
            "transform input has dim {}, model expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("transform input contains non-finite values"));
    }
    let n = model.n_training();
    let mut kvec = Array1::zeros(n);
    for (i, row) in model.training.rows().into_iter().enumerate() {
        let dot: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
        kvec[i] = (dot + model.offset).powi(model.degree as i32);
    }
    let kvec_mean = kvec.sum() / n as f64;
    for i in 0..n {
        kvec[i] += model.grand_mean - kvec_mean - model.row_means[i];
    }
    Ok(model.coefficients.dot(&kvec).to_vec())
}

/// Projects every row of a matrix; rows stay in order.
pub fn transform_rows(model: &KpcaModel, x: &Array2<f64>) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((x.nrows(), model.n_components()));
    for (i, row) in x.rows().into_iter().enumerate() {
        let projected = transform(model, row.as_slice().expect("contiguous row"))?;
        for (j, v) in projected.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

/// Cumulative explained-variance ratios of the retained components against
/// the total positive eigenvalue mass.
pub fn explained_variance_curve(model: &KpcaModel) -> Vec<f64> {
    let total = model.total_positive_mass;
    let mut acc = 0.0;
    model
        .eigenvalues
        .iter()
        .map(|&lam| {
            acc += lam;
            acc / total
        })
        .collect()
}

/// Binary checkpoint: magic "KPCA", version, dims, kernel parameters, then
/// the training matrix, eigenvalues, coefficients and centering terms.
pub fn save_kpca(path: &Path, model: &KpcaModel) -> Result<()> {
    let path_str = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&path_str, e))?;
    let mut w = BufWriter::new(file);
    write_bytes(&mut w, MAGIC, &path_str)?;
    write_u32(&mut w, VERSION, &path_str)?;
    write_u32(&mut w, model.n_training() as u32, &path_str)?;
    write_u32(&mut w, model.input_dim() as u32, &path_str)?;
    write_u32(&mut w, model.n_components() as u32, &path_str)?;
    write_u32(&mut w, model.degree, &path_str)?;
    write_f64(&mut w, model.offset, &path_str)?;
    for &v in model.training.iter() {
        write_f64(&mut w, v, &path_str)?;
    }
    for &v in &model.eigenvalues {
        write_f64(&mut w, v, &path_str)?;
    }
    for &v in model.coefficients.iter() {
        write_f64(&mut w, v, &path_str)?;
    }
    for &v in model.row_means.iter() {
        write_f64(&mut w, v, &path_str)?;
    }
    write_f64(&mut w, model.grand_mean, &path_str)?;
    write_f64(&mut w, model.total_positive_mass, &path_str)?;
    w.flush().map_err(|e| Error::io(&path_str, e))
}

pub fn load_kpca(path: &Path) -> Result<KpcaModel> {
    let path_str = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&path_str, e))?;
    let mut r = BufReader::new(file);
    expect_magic(&mut r, MAGIC, &path_str)?;
    let version = read_u32(&mut r, &path_str)?;
    if version != VERSION {
        return Err(Error::format(
            &path_str,
            None,
            format!("unsupported version {version}"),
        ));
    }
    let n = read_u32(&mut r, &path_str)? as usize;
    let d = read_u32(&mut r, &path_str)? as usize;
    let k = read_u32(&mut r, &path_str)? as usize;
    let degree = read_u32(&mut r, &path_str)?;
    let offset = read_f64(&mut r, &path_str)?;
    let mut training = Array2::zeros((n, d));
    for v in training.iter_mut() {
        *v = read_f64(&mut r, &path_str)?;
    }
    let mut eigenvalues = vec![0.0; k];
    for v in eigenvalues.iter_mut() {
        *v = read_f64(&mut r, &path_str)?;
    }
    let mut coefficients = Array2::zeros((k, n));
    for v in coefficients.iter_mut() {
        *v = read_f64(&mut r, &path_str)?;
    }
    let mut row_means = Array1::zeros(n);
    for v in row_means.iter_mut() {
        *v = read_f64(&mut r, &path_str)?;
    }
    let grand_mean = read_f64(&mut r, &path_str)?;
    let total_positive_mass = read_f64(&mut r, &path_str)?;
    Ok(KpcaModel {
        training,
        degree,
        offset,
        eigenvalues,
        coefficients,
        row_means,
        grand_mean,
        total_positive_mass,
    })
}
