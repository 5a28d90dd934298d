//! Dense complex linear algebra used throughout the crate.

use nalgebra::linalg::{Schur, SymmetricEigen, SVD};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QlsError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

/// Build a complex matrix from real row-major data.
pub fn real_matrix(r: usize, c: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), r * c);
    CMatrix::from_fn(r, c, |i, j| C64::new(data[i * c + j], 0.0))
}

pub fn from_rows(rows: &[Vec<C64>]) -> CMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    CMatrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn scale_of(m: &CMatrix) -> f64 {
    max_abs(m).max(1.0)
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol * scale_of(m)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Block-diagonal matrix.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

pub fn hstack(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn vstack(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(QlsError::Dimension(format!(
            "solve: {}x{} against {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Ok(zeros(0, b.ncols()));
    }
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| QlsError::Singular("linear solve".into()))?;
    if !is_finite(&x) {
        return Err(QlsError::Singular("linear solve produced non-finite values".into()));
    }
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &eye(a.nrows()))
}

/// Complex Schur form `A = Q T Q^dag` with `T` upper triangular.
pub fn schur(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((zeros(0, 0), zeros(0, 0)));
    }
    let s = Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| QlsError::Convergence("Schur decomposition".into()))?;
    let (q, mut t) = s.unpack();
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    let (_, t) = schur(a)?;
    Ok((0..a.nrows()).map(|i| t[(i, i)]).collect())
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(a.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Numerical rank with a cutoff relative to the largest singular value.
pub fn rank(a: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        None => 0,
        Some(0.0) => 0,
        Some(&smax) => s.iter().filter(|&&x| x > rel_tol * smax).count(),
    }
}

/// Orthonormal basis (columns) of the null space, using an absolute cutoff
/// on singular values.
pub fn null_space(a: &CMatrix, abs_tol: f64) -> CMatrix {
    let n = a.ncols();
    if a.nrows() == 0 {
        return eye(n);
    }
    // pad to at least square so that V_t holds a full basis
    let padded = if a.nrows() < n {
        vstack(a, &zeros(n - a.nrows(), n))
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("requested V^t");
    let sv = &svd.singular_values;
    let cols: Vec<CVector> = (0..sv.len())
        .filter(|&k| sv[k] <= abs_tol)
        .map(|k| vt.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        zeros(n, 0)
    } else {
        CMatrix::from_columns(&cols)
    }
}

/// Unit vector spanning the (numerically) smallest right singular direction.
pub fn smallest_right_singular_vector(a: &CMatrix) -> (f64, CVector) {
    let n = a.ncols();
    let padded = if a.nrows() < n {
        vstack(a, &zeros(n - a.nrows(), n))
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("requested V^t");
    let (k, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, bs), (k, &s)| if s < bs { (k, s) } else { (bk, bs) });
    (smin, vt.row(k).adjoint())
}

/// Right eigenvector for a known (simple) eigenvalue.
pub fn eigenvector(a: &CMatrix, lambda: C64) -> CVector {
    let shifted = a - CMatrix::identity(a.nrows(), a.nrows()) * lambda;
    smallest_right_singular_vector(&shifted).1
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_columns(
        &idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
    );
    (vals, vecs)
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eig(a);
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| C64::new(f(v), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

pub fn hermitian_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let (vals, _) = hermitian_eig(a);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if vals.iter().any(|&v| v < -1e-12 * scale) {
        return Err(QlsError::NotPhysical("square root of an indefinite matrix".into()));
    }
    Ok(hermitian_fn(a, |v| v.max(0.0).sqrt()))
}

/// Solve `A X + X B = Q` by Bartels-Stewart on complex Schur forms.
pub fn sylvester(a: &CMatrix, b: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    let (m, n) = (a.nrows(), b.nrows());
    if !a.is_square() || !b.is_square() || q.shape() != (m, n) {
        return Err(QlsError::Dimension("sylvester operands".into()));
    }
    if m == 0 || n == 0 {
        return Ok(zeros(m, n));
    }
    let (qa, ta) = schur(a)?;
    let (qb, tb) = schur(b)?;
    let f = qa.adjoint() * q * &qb;
    let mut y = zeros(m, n);
    let scale = scale_of(a).max(scale_of(b));
    for j in 0..n {
        let mut rhs: CVector = f.column(j).into_owned();
        for k in 0..j {
            let coef = tb[(k, j)];
            if coef != C64::new(0.0, 0.0) {
                rhs -= y.column(k) * coef;
            }
        }
        let shift = tb[(j, j)];
        // back substitution with (T_A + shift I)
        for i in (0..m).rev() {
            let mut acc = rhs[i];
            for l in (i + 1)..m {
                acc -= ta[(i, l)] * y[(l, j)];
            }
            let d = ta[(i, i)] + shift;
            if d.norm() <= 1e-14 * scale {
                return Err(QlsError::Singular(
                    "Sylvester equation has no unique solution (shared eigenvalues)".into(),
                ));
            }
            y[(i, j)] = acc / d;
        }
    }
    Ok(&qa * y * qb.adjoint())
}

/// Solve `A P + P A^dag + Q = 0`.
pub fn lyapunov(a: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    sylvester(a, &a.adjoint(), &(-q))
}

/// Residual helper: `||r|| / max(1, ||scale||)` in the max-abs norm.
pub fn rel_residual(r: &CMatrix, scale: f64) -> f64 {
    max_abs(r) / scale.max(1.0)
}

pub fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMatrix {
        from_rows(&[
            vec![c(-1.0, 0.3), c(0.5, 0.0), c(0.0, 1.0)],
            vec![c(0.2, -0.1), c(-2.0, 1.0), c(0.3, 0.3)],
            vec![c(0.0, 0.0), c(1.0, -1.0), c(-0.5, -2.0)],
        ])
    }

    #[test]
    fn schur_reconstructs() {
        let a = sample();
        let (q, t) = schur(&a).unwrap();
        assert!(max_abs(&(&q * &t * q.adjoint() - &a)) < 1e-12);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let a = from_rows(&[
            vec![c(1.0, 2.0), c(3.0, 0.0)],
            vec![c(0.0, 0.0), c(-4.0, 0.5)],
        ]);
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((ev[0] - c(-4.0, 0.5)).norm() < 1e-12);
        assert!((ev[1] - c(1.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn sylvester_residual() {
        let a = sample();
        let b = sample().adjoint() * c(0.5, 0.0) - eye(3) * c(1.0, 0.0);
        let q = from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 1.0), c(0.0, -1.0)],
            vec![c(3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ]);
        let x = sylvester(&a, &b, &q).unwrap();
        assert!(max_abs(&(&a * &x + &x * &b - &q)) < 1e-12);
    }

    #[test]
    fn lyapunov_scalar() {
        // a p + p conj(a) + q = 0 with a = -1 + 2i, q = 3  =>  p = 3/2
        let a = from_rows(&[vec![c(-1.0, 2.0)]]);
        let q = from_rows(&[vec![c(3.0, 0.0)]]);
        let p = lyapunov(&a, &q).unwrap();
        assert!((p[(0, 0)] - c(1.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(2.0, 0.0), c(2.0, 0.0)]]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.ncols(), 1);
        assert!(max_abs(&(&a * &ns)) < 1e-12);
        assert_eq!(rank(&a, 1e-10), 1);
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        let m = from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(3.0, 0.0)]]);
        let r = hermitian_sqrt(&m).unwrap();
        assert!(max_abs(&(&r * &r - &m)) < 1e-12);
    }
}
