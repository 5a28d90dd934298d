//! Gilbert realization of a transfer function and its conversion to a
//! physical system.

use super::rational::RationalMatrixFunction;
use crate::core_algebra::{factor_flat_gram, is_symplectic, sigma_matrix, DoubledUp};
use crate::error::{QlsError, Result};
use crate::linalg::{self, c, max_abs, scale_of, zeros, CMatrix, CVector, C64};
use crate::system::{QLSystem, StateSpace};

/// Rank-one factor `R = col * row` (largest singular triple).
pub(crate) fn rank_one(r: &CMatrix, what: &str) -> Result<(CVector, CMatrix)> {
    let svd = r.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let s0 = svd.singular_values[idx[0]];
    if s0 == 0.0 {
        return Err(QlsError::Realization(format!("{} residue vanishes", what)));
    }
    if idx.len() > 1 && svd.singular_values[idx[1]] > 1e-6 * s0 {
        return Err(QlsError::Realization(format!(
            "{} residue has rank > 1 (sigma_2/sigma_1 = {:.3e})",
            what,
            svd.singular_values[idx[1]] / s0
        )));
    }
    let root = c(s0.sqrt(), 0.0);
    let col: CVector = u.column(idx[0]) * root;
    let row: CMatrix = vt.rows(idx[0], 1) * root;
    Ok((col, row))
}

/// Upper-half-plane poles with the index of their conjugate partner.
pub(crate) fn conjugate_pairs(poles: &[C64], tol: f64) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (i, p) in poles.iter().enumerate() {
        if p.im.abs() <= tol * p.norm().max(1.0) {
            return Err(QlsError::Unsupported(format!("pole {} lies on the real axis", p)));
        }
        if p.im < 0.0 {
            continue;
        }
        let j = poles
            .iter()
            .position(|q| (q - p.conj()).norm() <= tol * p.norm().max(1.0))
            .ok_or_else(|| QlsError::Structure(format!("pole {} has no conjugate partner", p)))?;
        pairs.push((i, j));
    }
    if 2 * pairs.len() != poles.len() {
        return Err(QlsError::Structure("poles do not come in conjugate pairs".into()));
    }
    Ok(pairs)
}

/// Minimal doubled-up realization from rank-one residues: the pole `p` with
/// `Im p > 0` gets column `b` / row `r`, its conjugate gets `Sigma conj(b)`
/// and `conj(r) Sigma`.
pub fn gilbert_realize(tf: &RationalMatrixFunction) -> Result<StateSpace> {
    let (rows, cols) = (tf.rows(), tf.cols());
    if rows % 2 != 0 || cols % 2 != 0 {
        return Err(QlsError::Dimension("doubled-up transfer function must be even-sized".into()));
    }
    let pairs = conjugate_pairs(&tf.poles, 1e-6)?;
    let k = pairs.len();
    let (so, si) = (sigma_matrix(rows / 2), sigma_matrix(cols / 2));
    let mut a = zeros(2 * k, 2 * k);
    let mut b = zeros(2 * k, cols);
    let mut cm = zeros(rows, 2 * k);
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        let (col, row) = rank_one(&tf.residues[i], "transfer-function")?;
        let col2 = &so * col.map(|z| z.conj());
        let row2 = row.map(|z| z.conj()) * &si;
        let mirror = &col2 * &row2;
        if max_abs(&(mirror - &tf.residues[j])) > 1e-6 * scale_of(&tf.residues[j]) {
            return Err(QlsError::Structure("residues at conjugate poles are not mirrored".into()));
        }
        a[(idx, idx)] = tf.poles[i];
        a[(k + idx, k + idx)] = tf.poles[i].conj();
        cm.set_column(idx, &col);
        cm.set_column(k + idx, &col2);
        b.set_row(idx, &row.row(0));
        b.set_row(k + idx, &row2.row(0));
    }
    StateSpace::new(a, b, cm, tf.constant.clone())
}

/// Minimal realization from rank-one residues without pairing poles; for
/// transfer functions of annihilation operators only (no doubled-up
/// structure).
pub fn modal_realize(tf: &RationalMatrixFunction) -> Result<StateSpace> {
    let k = tf.poles.len();
    let mut a = zeros(k, k);
    let mut b = zeros(k, tf.cols());
    let mut cm = zeros(tf.rows(), k);
    for (i, (&p, r)) in tf.poles.iter().zip(&tf.residues).enumerate() {
        let (col, row) = rank_one(r, "transfer-function")?;
        a[(i, i)] = p;
        cm.set_column(i, &col);
        b.set_row(i, &row.row(0));
    }
    StateSpace::new(a, b, cm, tf.constant.clone())
}

/// Solve `X A0 + A0^flat X + C0^flat C0 = 0` for the flat Gram matrix of
/// the physical coordinates.
pub(crate) fn physical_gram(a0: &DoubledUp, c0: &DoubledUp) -> Result<DoubledUp> {
    let q = -(&c0.flat() * c0).to_full();
    let x = linalg::sylvester(&a0.flat().to_full(), &a0.to_full(), &q)?;
    let x = DoubledUp::project(&x);
    Ok((&x + &x.flat()).scale(0.5))
}

/// Change coordinates of a doubled-up classical realization so it becomes
/// physically realizable: `T^flat T = X`, `A = T A0 T^-1`, `C = C0 T^-1`.
pub fn physical_from_classical(ss: &StateSpace) -> Result<QLSystem> {
    let a0 = DoubledUp::from_full(&ss.a, 1e-8)?;
    let b0 = DoubledUp::from_full(&ss.b, 1e-8)?;
    let c0 = DoubledUp::from_full(&ss.c, 1e-8)?;
    let d = DoubledUp::from_full(&ss.d, 1e-8)?;
    if !is_symplectic(&d.to_full(), 1e-8)? {
        return Err(QlsError::NotPhysical("feedthrough is not symplectic".into()));
    }
    if ss.eigenvalues()?.iter().any(|l| l.re >= -1e-12) {
        return Err(QlsError::NotHurwitz("classical realization must be Hurwitz".into()));
    }
    let x = physical_gram(&a0, &c0)?;
    let t = factor_flat_gram(&x, 1e-8).map_err(|e| match e {
        QlsError::Singular(_) => QlsError::NotPhysical("flat Gram matrix is singular".into()),
        other => other,
    })?;
    let tinv = t.inverse()?;
    let a = &(&t * &a0) * &tinv;
    let cc = &c0 * &tinv;
    let b = &t * &b0;
    let expect_b = -&(&cc.flat() * &d);
    let dev = (&b - &expect_b).max_abs();
    if dev > 1e-6 * b.max_abs().max(1.0) {
        return Err(QlsError::NotPhysical(format!("input matrix is not -C^flat S (deviation {:.3e})", dev)));
    }
    QLSystem::from_drift(d, cc, &a, 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{check_pr, default_grid, tf_distance};

    fn roundtrip(sys: &QLSystem) -> QLSystem {
        let tf = RationalMatrixFunction::from_state_space(&sys.state_space()).unwrap();
        let ss = gilbert_realize(&tf).unwrap();
        for s in default_grid(sys).unwrap() {
            assert!(max_abs(&(ss.eval(s).unwrap() - sys.transfer_function(s).unwrap())) < 1e-10);
        }
        physical_from_classical(&ss).unwrap()
    }

    #[test]
    fn cavity_round_trip() {
        let sys = QLSystem::cavity(2.0, 1.5);
        let got = roundtrip(&sys);
        assert!(check_pr(&got.drift(), got.c(), 1e-10));
        assert!(tf_distance(&got, &sys, &default_grid(&sys).unwrap()).unwrap() < 1e-8);
        assert!((got.c().minus()[(0, 0)].norm() - 2f64.sqrt()).abs() < 1e-8);
        assert!((got.omega().minus()[(0, 0)].re - 1.5).abs() < 1e-8);
    }

    #[test]
    fn dpa_round_trip() {
        let sys = QLSystem::with_coupling(
            DoubledUp::passive(linalg::real_matrix(1, 1, &[1.0])),
            DoubledUp::new(linalg::real_matrix(1, 1, &[2.0]), linalg::from_rows(&[vec![c(0.0, 0.4)]])).unwrap(),
        )
        .unwrap();
        let got = roundtrip(&sys);
        assert!(tf_distance(&got, &sys, &default_grid(&sys).unwrap()).unwrap() < 1e-8);
    }

    #[test]
    fn physical_input_stays_physical() {
        let sys = QLSystem::cavity(1.0, -0.7);
        let got = physical_from_classical(&sys.state_space()).unwrap();
        assert!((&got.omega().clone() - sys.omega()).max_abs() < 1e-10);
    }

    #[test]
    fn empty_transfer_function() {
        let tf = RationalMatrixFunction::new(linalg::eye(2), vec![], vec![]).unwrap();
        let ss = gilbert_realize(&tf).unwrap();
        assert_eq!(ss.order(), 0);
        assert_eq!(physical_from_classical(&ss).unwrap().n(), 0);
    }

    #[test]
    fn modal_matches_scalar_tf() {
        let tf = RationalMatrixFunction::scalar(c(1.0, 0.0), vec![c(-19.5, -3.0)], vec![c(-36.0, 0.0)]).unwrap();
        let ss = modal_realize(&tf).unwrap();
        for s in tf.grid(10) {
            assert!((ss.eval(s).unwrap() - tf.eval(s).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn rank_two_residue_rejected() {
        let tf = RationalMatrixFunction::new(
            linalg::eye(2),
            vec![c(-1.0, 1.0), c(-1.0, -1.0)],
            vec![linalg::eye(2), linalg::eye(2)],
        )
        .unwrap();
        assert!(matches!(gilbert_realize(&tf), Err(QlsError::Realization(_))));
    }
}
