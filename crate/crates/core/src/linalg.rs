//! Small dense kernels shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `X β`.
pub fn linear_predictor(x: &DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
    let n = x.nrows();
    let mut eta = vec![0.0; n];
    for (j, &b) in beta.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let col = x.column(j);
        for (e, &xij) in eta.iter_mut().zip(col.iter()) {
            *e += xij * b;
        }
    }
    eta
}

/// `Xᵀ v`.
pub fn xt_v(x: &DMatrix<f64>, v: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()))
}

/// `Xᵀ diag(w) X`, exploiting symmetry.
pub fn xt_w_x(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let p = x.ncols();
    let mut out = DMatrix::zeros(p, p);
    let mut wc = vec![0.0; x.nrows()];
    for a in 0..p {
        let ca = x.column(a);
        for ((t, &xa), &wi) in wc.iter_mut().zip(ca.iter()).zip(w) {
            *t = xa * wi;
        }
        for b in 0..=a {
            let s: f64 = x.column(b).iter().zip(&wc).map(|(xb, t)| xb * t).sum();
            out[(a, b)] = s;
            out[(b, a)] = s;
        }
    }
    out
}

/// Solves a symmetric positive definite system, adding a diagonal jitter
/// proportional to the mean diagonal when the plain Cholesky fails.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, jitter: f64) -> Result<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    let p = a.nrows();
    let scale = (a.trace() / p.max(1) as f64).abs().max(1e-300);
    let mut bumped = a.clone();
    for i in 0..p {
        bumped[(i, i)] += jitter * scale;
    }
    bumped.cholesky().map(|ch| ch.solve(b)).ok_or_else(|| Error::Singular("weighted normal equations".into()))
}

/// Least squares via Householder QR; fails on numerically rank-deficient `x`.
pub fn lstsq(x: &DMatrix<f64>, y: &[f64]) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::Singular(format!("n = {n} < p = {p}")));
    }
    let qr = x.clone().qr();
    check_rank(&qr.r())?;
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    qr.r().solve_upper_triangular(&qty).ok_or_else(|| Error::Singular("triangular solve".into()))
}

fn check_rank(r: &DMatrix<f64>) -> Result<()> {
    let d: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
    let max = d.iter().cloned().fold(0.0, f64::max);
    let tol = max * 1e-10 * r.nrows().max(1) as f64;
    if let Some(k) = d.iter().position(|&v| !(v > tol)) {
        return Err(Error::Singular(format!("column {k} is linearly dependent")));
    }
    Ok(())
}

/// Diagonal of the hat matrix `X (XᵀX)⁻¹ Xᵀ`.
pub fn leverages(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::Singular(format!("leverages need n > p (n = {n}, p = {p})")));
    }
    let qr = x.clone().qr();
    check_rank(&qr.r())?;
    let q = qr.q();
    Ok((0..n).map(|i| q.row(i).iter().map(|v| v * v).sum()).collect())
}

/// Inverse of a square matrix with a reciprocal-condition guard.
pub fn inverse_checked(a: &DMatrix<f64>, max_condition: f64) -> Result<DMatrix<f64>> {
    let cond = condition_number(a);
    if !(cond < max_condition) {
        return Err(Error::Singular(format!("condition number {cond:.3e}")));
    }
    a.clone().try_inverse().ok_or_else(|| Error::Singular("inverse".into()))
}

pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xtwx_matches_dense_product() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 1.0, -1.0, 1.0, 0.5, 1.0, 3.0]);
        let w = [1.0, 2.0, 0.5, 1.5];
        let dense = x.transpose() * DMatrix::from_diagonal(&DVector::from_column_slice(&w)) * &x;
        assert!((xt_w_x(&x, &w) - dense).abs().max() < 1e-14);
    }

    #[test]
    fn leverages_sum_to_rank() {
        let x = DMatrix::from_fn(10, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + if j == 0 { 1.0 } else { 0.1 * i as f64 });
        let h = leverages(&x).unwrap();
        let total: f64 = h.iter().sum();
        assert!((total - 3.0).abs() < 1e-10);
        assert!(h.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn lstsq_rejects_collinear() {
        let x = DMatrix::from_fn(6, 2, |i, _| i as f64);
        assert!(matches!(lstsq(&x, &[0.0; 6]), Err(Error::Singular(_))));
    }
}
