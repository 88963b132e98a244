//! Dense symmetric eigendecomposition and small polynomial utilities.
//!
//! The eigensolver reduces a symmetric matrix to tridiagonal form with
//! Householder reflections and then runs the implicit-shift QL iteration,
//! accumulating the transformations so eigenvectors come out directly.
//! This is the classic tred2/tql2 pair; it is deterministic, allocation
//! light, and handles the Gram matrices used by the KPCA and ICA stages
//! (up to a few thousand rows) in seconds.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix.
///
/// Eigenvalues are sorted descending; `vectors` holds the matching unit-norm
/// eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Symmetric eigendecomposition via Householder tridiagonalization + QL.
///
/// The input must be square and symmetric; only symmetry up to roundoff is
/// assumed (the lower triangle wins). Fails if the QL sweep for some
/// eigenvalue exceeds its iteration budget, which for symmetric input does
/// not happen in practice.
pub fn sym_eig(a: &Array2<f64>) -> Result<SymEig> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::parameter(format!(
            "sym_eig needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::parameter("sym_eig on empty matrix"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("sym_eig input contains non-finite entries"));
    }

    let mut z: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[[i, j]]).collect()).collect();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];

    tred2(&mut z, &mut d, &mut e);
    tql2(&mut z, &mut d, &mut e)?;

    // Sort eigenpairs by descending eigenvalue; ties keep original order so
    // the result is deterministic.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));

    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, col]] = z[row][src];
        }
    }
    Ok(SymEig { values, vectors })
}

/// Householder reduction of `z` (symmetric, row-major) to tridiagonal form,
/// accumulating the orthogonal transform back into `z`.
fn tred2(z: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[i][k].abs()).sum();
            if scale == 0.0 {
                e[i] = z[i][l];
            } else {
                for k in 0..=l {
                    z[i][k] /= scale;
                    h += z[i][k] * z[i][k];
                }
                let f = z[i][l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i][l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    z[j][i] = z[i][j] / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += z[j][k] * z[i][k];
                    }
                    for k in (j + 1)..=l {
                        g_acc += z[k][j] * z[i][k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * z[i][j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = z[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[j][k] -= f * e[k] + g * z[i][k];
                    }
                }
            }
        } else {
            e[i] = z[i][l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[i][k] * z[k][j];
                }
                for k in 0..i {
                    z[k][j] -= g * z[k][i];
                }
            }
        }
        d[i] = z[i][i];
        z[i][i] = 1.0;
        for j in 0..i {
            z[j][i] = 0.0;
            z[i][j] = 0.0;
        }
    }
}

fn pythag(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Implicit-shift QL iteration on the tridiagonal (d, e), rotations
/// accumulated into `z`.
fn tql2(z: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::Convergence {
                    iterations: 50,
                    message: "QL sweep did not isolate an eigenvalue".into(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = pythag(g, 1.0);
            let sign_r = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = pythag(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut().take(n) {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// All complex roots of the real polynomial `coeffs[0] + coeffs[1] x + ...`,
/// highest-degree coefficient last, via Durand-Kerner iteration.
///
/// Used by the filter stability checks on denominator polynomials; degrees
/// here never exceed single digits.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    // Strip trailing zero coefficients that would make the degree ambiguous.
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    let degree = c.len().saturating_sub(1);
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = *c.last().unwrap();
    let monic: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v / lead, 0.0)).collect();

    let eval = |x: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &coef in monic.iter().rev() {
            acc = acc * x + coef;
        }
        acc
    };

    // Standard non-real seed with distinct powers so roots separate.
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32 + 1)).collect();

    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            max_step = max_step.max(delta.norm());
        }
        if max_step < 1e-13 {
            return Ok(roots);
        }
    }
    Err(Error::Convergence {
        iterations: 200,
        message: "polynomial root iteration stalled".into(),
    })
}
