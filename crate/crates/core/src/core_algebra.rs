//! Doubled-up matrices, the flat adjoint, symplectic tests, Williamson
//! normal form and flat-Gram factorization.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{QlsError, Result};
use crate::linalg::{self, c, eye, hermitian_eig, max_abs, scale_of, zeros, CMatrix, CVector, C64};

/// `Delta(minus, plus) = [[minus, plus], [conj(plus), conj(minus)]]`.
///
/// Only the two upper blocks are stored, so the conjugate symmetry holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubledUp {
    minus: CMatrix,
    plus: CMatrix,
}

impl DoubledUp {
    pub fn new(minus: CMatrix, plus: CMatrix) -> Result<Self> {
        if minus.shape() != plus.shape() {
            return Err(QlsError::Dimension(format!(
                "doubled-up blocks {:?} and {:?} differ",
                minus.shape(),
                plus.shape()
            )));
        }
        Ok(DoubledUp { minus, plus })
    }

    /// `Delta(minus, 0)`.
    pub fn passive(minus: CMatrix) -> Self {
        let plus = zeros(minus.nrows(), minus.ncols());
        DoubledUp { minus, plus }
    }

    pub fn zeros(n_out: usize, n_in: usize) -> Self {
        DoubledUp { minus: zeros(n_out, n_in), plus: zeros(n_out, n_in) }
    }

    pub fn identity(n: usize) -> Self {
        DoubledUp::passive(eye(n))
    }

    /// The symplectic form `J = diag(I, -I)` as a full matrix.
    pub fn j(n: usize) -> CMatrix {
        j_matrix(n)
    }

    /// Read a full `2r x 2c` matrix, checking the conjugate-block symmetry to
    /// `tol` relative to its largest entry.
    pub fn from_full(m: &CMatrix, tol: f64) -> Result<Self> {
        let (r2, c2) = m.shape();
        if r2 % 2 != 0 || c2 % 2 != 0 {
            return Err(QlsError::Dimension(format!("{}x{} is not even-sized", r2, c2)));
        }
        let (r, cc) = (r2 / 2, c2 / 2);
        let a = m.view((0, 0), (r, cc)).into_owned();
        let b = m.view((0, cc), (r, cc)).into_owned();
        let bc = m.view((r, 0), (r, cc)).into_owned();
        let ac = m.view((r, cc), (r, cc)).into_owned();
        let err = max_abs(&(&bc - b.map(|z| z.conj()))).max(max_abs(&(&ac - a.map(|z| z.conj()))));
        if err > tol * scale_of(m) {
            return Err(QlsError::Structure(format!("block symmetry violated by {:.3e}", err)));
        }
        Ok(DoubledUp::project(m))
    }

    /// Nearest doubled-up matrix (average of the two block representations).
    pub fn project(m: &CMatrix) -> Self {
        let (r, cc) = (m.nrows() / 2, m.ncols() / 2);
        let a = m.view((0, 0), (r, cc)).into_owned();
        let b = m.view((0, cc), (r, cc)).into_owned();
        let bc = m.view((r, 0), (r, cc)).into_owned();
        let ac = m.view((r, cc), (r, cc)).into_owned();
        DoubledUp {
            minus: (a + ac.map(|z| z.conj())).scale(0.5),
            plus: (b + bc.map(|z| z.conj())).scale(0.5),
        }
    }

    pub fn to_full(&self) -> CMatrix {
        let (r, cc) = self.minus.shape();
        let mut out = zeros(2 * r, 2 * cc);
        out.view_mut((0, 0), (r, cc)).copy_from(&self.minus);
        out.view_mut((0, cc), (r, cc)).copy_from(&self.plus);
        out.view_mut((r, 0), (r, cc)).copy_from(&self.plus.map(|z| z.conj()));
        out.view_mut((r, cc), (r, cc)).copy_from(&self.minus.map(|z| z.conj()));
        out
    }

    pub fn minus(&self) -> &CMatrix {
        &self.minus
    }

    pub fn plus(&self) -> &CMatrix {
        &self.plus
    }

    pub fn n_out(&self) -> usize {
        self.minus.nrows()
    }

    pub fn n_in(&self) -> usize {
        self.minus.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.minus.is_square()
    }

    pub fn is_passive(&self, tol: f64) -> bool {
        max_abs(&self.plus) <= tol * scale_of(&self.minus)
    }

    /// `Z^flat = J Z^dag J = Delta(A^dag, -B^T)`.
    pub fn flat(&self) -> Self {
        DoubledUp { minus: self.minus.adjoint(), plus: -self.plus.transpose() }
    }

    /// `Z^dag = Delta(A^dag, B^T)`.
    pub fn adjoint(&self) -> Self {
        DoubledUp { minus: self.minus.adjoint(), plus: self.plus.transpose() }
    }

    pub fn scale(&self, k: f64) -> Self {
        DoubledUp { minus: self.minus.scale(k), plus: self.plus.scale(k) }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(DoubledUp::project(&linalg::inverse(&self.to_full())?))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.minus).max(max_abs(&self.plus))
    }

    /// Rows `rows` and columns `cols` of both blocks (mode/channel selection).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let pick = |m: &CMatrix| CMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]);
        DoubledUp { minus: pick(&self.minus), plus: pick(&self.plus) }
    }

    /// Block-diagonal sum on both the output and input index sets.
    pub fn direct_sum(&self, other: &Self) -> Self {
        DoubledUp {
            minus: linalg::block_diag(&self.minus, &other.minus),
            plus: linalg::block_diag(&self.plus, &other.plus),
        }
    }

    pub fn hstack(&self, other: &Self) -> Self {
        DoubledUp {
            minus: linalg::hstack(&self.minus, &other.minus),
            plus: linalg::hstack(&self.plus, &other.plus),
        }
    }

    pub fn vstack(&self, other: &Self) -> Self {
        DoubledUp {
            minus: linalg::vstack(&self.minus, &other.minus),
            plus: linalg::vstack(&self.plus, &other.plus),
        }
    }
}

impl Mul for &DoubledUp {
    type Output = DoubledUp;
    fn mul(self, rhs: &DoubledUp) -> DoubledUp {
        let conj = |m: &CMatrix| m.map(|z| z.conj());
        DoubledUp {
            minus: &self.minus * &rhs.minus + &self.plus * conj(&rhs.plus),
            plus: &self.minus * &rhs.plus + &self.plus * conj(&rhs.minus),
        }
    }
}

impl Add for &DoubledUp {
    type Output = DoubledUp;
    fn add(self, rhs: &DoubledUp) -> DoubledUp {
        DoubledUp { minus: &self.minus + &rhs.minus, plus: &self.plus + &rhs.plus }
    }
}

impl Sub for &DoubledUp {
    type Output = DoubledUp;
    fn sub(self, rhs: &DoubledUp) -> DoubledUp {
        DoubledUp { minus: &self.minus - &rhs.minus, plus: &self.plus - &rhs.plus }
    }
}

impl Neg for &DoubledUp {
    type Output = DoubledUp;
    fn neg(self) -> DoubledUp {
        DoubledUp { minus: -&self.minus, plus: -&self.plus }
    }
}

pub fn j_matrix(n: usize) -> CMatrix {
    let mut j = eye(2 * n);
    for k in n..2 * n {
        j[(k, k)] = c(-1.0, 0.0);
    }
    j
}

/// `Sigma = [[0, I], [I, 0]]`, which swaps `a` and `a^#`.
pub fn sigma_matrix(n: usize) -> CMatrix {
    let mut s = zeros(2 * n, 2 * n);
    for k in 0..n {
        s[(k, n + k)] = c(1.0, 0.0);
        s[(n + k, k)] = c(1.0, 0.0);
    }
    s
}

/// Flat adjoint of an arbitrary even-sized matrix: `J_m Z^dag J_n`.
pub fn flat_full(z: &CMatrix) -> CMatrix {
    j_matrix(z.ncols() / 2) * z.adjoint() * j_matrix(z.nrows() / 2)
}

pub fn flat_adjoint(m: &DoubledUp) -> DoubledUp {
    m.flat()
}

/// True iff `m` is doubled-up and `m^flat m = I` to `tol`.
pub fn is_symplectic(m: &CMatrix, tol: f64) -> Result<bool> {
    if !m.is_square() || !m.nrows().is_multiple_of(2) {
        return Err(QlsError::Dimension(format!(
            "symplectic test needs a square even-sized matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = match DoubledUp::from_full(m, tol) {
        Ok(d) => d,
        Err(_) => return Ok(false),
    };
    let n = d.n_out();
    let r = (&d.flat() * &d).to_full() - eye(2 * n);
    Ok(max_abs(&r) <= tol)
}

/// Input covariance `V(N, M) = [[N^T + I, M], [M^dag, N]]`.
pub fn covariance(n: &CMatrix, m: &CMatrix) -> CMatrix {
    let k = n.nrows();
    let mut v = zeros(2 * k, 2 * k);
    v.view_mut((0, 0), (k, k)).copy_from(&(n.transpose() + eye(k)));
    v.view_mut((0, k), (k, k)).copy_from(m);
    v.view_mut((k, 0), (k, k)).copy_from(&m.adjoint());
    v.view_mut((k, k), (k, k)).copy_from(n);
    v
}

/// Vacuum covariance `diag(I, 0)`.
pub fn vacuum(k: usize) -> CMatrix {
    covariance(&zeros(k, k), &zeros(k, k))
}

#[derive(Debug, Clone)]
pub struct WilliamsonResult {
    /// Thermal occupations `n_1 <= ... <= n_k`.
    pub symplectic_eigenvalues: Vec<f64>,
    /// Symplectic `S` with `S V S^dag = diag(n + 1, n)`.
    pub transform: DoubledUp,
}

impl WilliamsonResult {
    pub fn is_pure(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues.iter().all(|&n| n <= tol)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.symplectic_eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.symplectic_eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

/// Williamson normal form of a covariance `V = <a a^dag>` (vacuum is
/// `diag(I, 0)`).
pub fn williamson(v: &CMatrix, tol: f64) -> Result<WilliamsonResult> {
    if !v.is_square() || !v.nrows().is_multiple_of(2) {
        return Err(QlsError::Dimension(format!("covariance is {}x{}", v.nrows(), v.ncols())));
    }
    let n = v.nrows() / 2;
    if n == 0 {
        return Ok(WilliamsonResult { symplectic_eigenvalues: vec![], transform: DoubledUp::zeros(0, 0) });
    }
    if !linalg::is_hermitian(v, 1e-8) {
        return Err(QlsError::Physicality("covariance is not Hermitian".into()));
    }
    let j = j_matrix(n);
    let vs = linalg::hermitian_part(&(v - j.scale(0.5)));
    let (vals, _) = hermitian_eig(&vs);
    if vals[0] <= 0.0 {
        return Err(QlsError::Physicality(format!(
            "symmetrized covariance has eigenvalue {:.3e}",
            vals[0]
        )));
    }
    let root = linalg::hermitian_fn(&vs, f64::sqrt);
    let inv_root = linalg::hermitian_fn(&vs, |x| 1.0 / x.sqrt());
    let h = &root * &j * &root;
    let (d, w) = hermitian_eig(&h);
    // eigenvalues come in +-nu pairs; the upper half is ascending and positive
    let pos: Vec<usize> = (n..2 * n).collect();
    let mut nus = Vec::with_capacity(n);
    let mut cols: Vec<CVector> = Vec::with_capacity(2 * n);
    for &k in &pos {
        nus.push(d[k]);
        cols.push(w.column(k).into_owned());
    }
    let sigma = sigma_matrix(n);
    for &k in &pos {
        cols.push(&sigma * w.column(k).map(|z| z.conj()));
    }
    let u = CMatrix::from_columns(&cols);
    let scale_diag: Vec<C64> = nus.iter().chain(nus.iter()).map(|&x| c(x.sqrt(), 0.0)).collect();
    let s_full = linalg::diag(&scale_diag) * u.adjoint() * inv_root;
    let transform = DoubledUp::from_full(&s_full, 1e-6)?;
    let eigenvalues: Vec<f64> = nus.iter().map(|&x| x - 0.5).collect();
    let min = eigenvalues.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    if min < -tol.max(1e-12) {
        return Err(QlsError::Physicality(format!("negative symplectic eigenvalue {:.3e}", min)));
    }
    Ok(WilliamsonResult { symplectic_eigenvalues: eigenvalues, transform })
}

/// Symplectic `S = Delta((N^T + 1)^{1/2}, M (N^dag + 1)^{-1/2})` with
/// `S V_vac S^dag = V(N, M)`; requires a pure `V(N, M)`.
pub fn vacuum_basis_transform(n: &CMatrix, m: &CMatrix, tol: f64) -> Result<DoubledUp> {
    let k = n.nrows();
    if !n.is_square() || m.shape() != (k, k) {
        return Err(QlsError::Dimension("N and M must be square and equal-sized".into()));
    }
    let w = williamson(&covariance(n, m), tol)?;
    if !w.is_pure(tol) {
        return Err(QlsError::Impure(format!(
            "largest symplectic eigenvalue {:.3e}",
            w.max_eigenvalue()
        )));
    }
    let id = eye(k);
    let a = linalg::hermitian_fn(&(n.transpose() + &id), f64::sqrt);
    let b = m * linalg::hermitian_fn(&(n.adjoint() + &id), |x| 1.0 / x.sqrt());
    DoubledUp::new(a, b)
}

/// Doubled-up `T` with `T^flat T = G` for an invertible flat-self-adjoint `G`.
///
/// Works on the Hermitian matrix `K = J G`, whose spectrum pairs `+-d` with
/// eigenvectors `w` and `Sigma conj(w)`; `T = |D|^{1/2} [W, Sigma conj W]^dag`.
pub fn factor_flat_gram(g: &DoubledUp, tol: f64) -> Result<DoubledUp> {
    if !g.is_square() {
        return Err(QlsError::Dimension("flat Gram matrix must be square".into()));
    }
    let n = g.n_out();
    if n == 0 {
        return Ok(DoubledUp::zeros(0, 0));
    }
    let gf = g.to_full();
    let scale = scale_of(&gf);
    if max_abs(&(&g.flat() - g).to_full()) > tol * scale {
        return Err(QlsError::Structure("Gram matrix is not flat-self-adjoint".into()));
    }
    let j = j_matrix(n);
    let k = linalg::hermitian_part(&(&j * &gf));
    let (d, w) = hermitian_eig(&k);
    let dscale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if d.iter().any(|x| x.abs() <= 1e-12 * dscale.max(1e-300)) || dscale == 0.0 {
        return Err(QlsError::Singular("flat Gram matrix is singular".into()));
    }
    if d[n - 1] >= 0.0 || d[n] <= 0.0 {
        return Err(QlsError::Inconsistent("flat Gram spectrum is not +- paired".into()));
    }
    // positive half, ascending, with canonical bases on clusters
    let pos_vals: Vec<f64> = d[n..].to_vec();
    let pos_vecs = w.columns(n, n).into_owned();
    let basis = canonical_cluster_basis(&pos_vals, &pos_vecs, 1e-8 * dscale);
    let sigma = sigma_matrix(n);
    let mut cols: Vec<CVector> = (0..n).map(|i| basis.column(i).into_owned()).collect();
    for i in 0..n {
        cols.push(&sigma * basis.column(i).map(|z| z.conj()));
    }
    let u = CMatrix::from_columns(&cols);
    let root: Vec<C64> = pos_vals.iter().chain(pos_vals.iter()).map(|&x| c(x.sqrt(), 0.0)).collect();
    let t_full = linalg::diag(&root) * u.adjoint();
    let t = DoubledUp::from_full(&t_full, 1e-6)?;
    let resid = max_abs(&((&t.flat() * &t).to_full() - &gf));
    if resid > 1e-6 * scale {
        return Err(QlsError::Inconsistent(format!("flat Gram factor residual {:.3e}", resid)));
    }
    Ok(t)
}

/// Replace the eigenvectors of each cluster of (numerically) equal
/// eigenvalues by a basis that depends only on the cluster's subspace:
/// Gram-Schmidt over the columns of its orthogonal projector, in order.
fn canonical_cluster_basis(vals: &[f64], vecs: &CMatrix, gap: f64) -> CMatrix {
    let mut out = vecs.clone();
    let mut start = 0;
    while start < vals.len() {
        let mut end = start + 1;
        while end < vals.len() && vals[end] - vals[end - 1] <= gap {
            end += 1;
        }
        let b = vecs.columns(start, end - start).into_owned();
        let proj = &b * b.adjoint();
        let mut chosen: Vec<CVector> = Vec::new();
        for col in 0..proj.ncols() {
            if chosen.len() == end - start {
                break;
            }
            let mut r: CVector = proj.column(col).into_owned();
            for q in &chosen {
                let coef = q.dotc(&r);
                r -= q * coef;
            }
            let nr = r.norm();
            if nr > 1e-6 {
                chosen.push(r / c(nr, 0.0));
            }
        }
        for (i, q) in chosen.iter().enumerate() {
            out.set_column(start + i, q);
        }
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    fn squeezer(r: f64) -> DoubledUp {
        DoubledUp::new(from_rows(&[vec![c(r.cosh(), 0.0)]]), from_rows(&[vec![c(r.sinh(), 0.0)]])).unwrap()
    }

    #[test]
    fn flat_of_identity_and_j() {
        let id = DoubledUp::identity(2);
        assert_eq!(id.flat(), id);
        let j = j_matrix(2);
        assert!(max_abs(&(flat_full(&j) - &j)) < 1e-15);
    }

    #[test]
    fn symplectic_examples() {
        assert!(is_symplectic(&eye(2), 1e-10).unwrap());
        assert!(is_symplectic(&squeezer(0.7).to_full(), 1e-10).unwrap());
        let two = DoubledUp::passive(from_rows(&[vec![c(2.0, 0.0)]]));
        assert!(!is_symplectic(&two.to_full(), 1e-10).unwrap());
        assert!(is_symplectic(&eye(3), 1e-10).is_err());
    }

    #[test]
    fn williamson_of_vacuum_and_thermal() {
        let w = williamson(&vacuum(2), 1e-10).unwrap();
        assert!(w.symplectic_eigenvalues.iter().all(|x| x.abs() < 1e-12));
        let n = linalg::diag(&[c(0.3, 0.0), c(2.0, 0.0)]);
        let w = williamson(&covariance(&n, &zeros(2, 2)), 1e-10).unwrap();
        assert!((w.symplectic_eigenvalues[0] - 0.3).abs() < 1e-12);
        assert!((w.symplectic_eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn one_mode_vacuum_transform() {
        let nn = 1.5f64;
        let mm = (nn * (nn + 1.0)).sqrt();
        let s = vacuum_basis_transform(&from_rows(&[vec![c(nn, 0.0)]]), &from_rows(&[vec![c(mm, 0.0)]]), 1e-9)
            .unwrap();
        assert!((s.minus()[(0, 0)] - c((nn + 1.0).sqrt(), 0.0)).norm() < 1e-12);
        assert!((s.plus()[(0, 0)] - c(mm / (nn + 1.0).sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn thermal_input_is_rejected() {
        let n = from_rows(&[vec![c(1.0, 0.0)]]);
        let r = vacuum_basis_transform(&n, &zeros(1, 1), 1e-9);
        assert!(matches!(r, Err(QlsError::Impure(_))));
    }

    #[test]
    fn gram_factor_canonical_cases() {
        let t = factor_flat_gram(&DoubledUp::identity(3), 1e-10).unwrap();
        assert!((&t - &DoubledUp::identity(3)).max_abs() < 1e-12);
        let g = DoubledUp::identity(1).scale(4.0);
        let t = factor_flat_gram(&g, 1e-10).unwrap();
        assert!((&t - &DoubledUp::identity(1).scale(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn gram_factor_negative_definite() {
        // G = -0.2 I (one mode) needs the "lambda minus" canonical block
        let g = DoubledUp::identity(1).scale(-0.2);
        let t = factor_flat_gram(&g, 1e-10).unwrap();
        assert!((&(&t.flat() * &t) - &g).max_abs() < 1e-12);
    }

    #[test]
    fn gram_factor_singular() {
        let g = DoubledUp::zeros(1, 1);
        assert!(matches!(factor_flat_gram(&g, 1e-10), Err(QlsError::Singular(_))));
    }
}
