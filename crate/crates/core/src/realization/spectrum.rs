//! Physical realization of a power spectrum.

use super::classical::{conjugate_pairs, physical_gram, rank_one};
use super::rational::RationalMatrixFunction;
use crate::core_algebra::{factor_flat_gram, j_matrix, sigma_matrix, vacuum_basis_transform, DoubledUp};
use crate::error::{QlsError, Result};
use crate::linalg::{self, max_abs, zeros, CMatrix, CVector};
use crate::stationary::{power_spectrum, InputCovariance};
use crate::system::QLSystem;

#[derive(Debug, Clone)]
pub struct PsRealization {
    /// Realized system; driven by vacuum it reproduces the spectrum.
    pub system: QLSystem,
    /// `T^flat T` of the coordinate change from the normalized modal seed.
    pub gram: DoubledUp,
    /// `S_in` with `S_in V_vac S_in^dag` equal to the spectrum at infinity.
    pub input_transform: DoubledUp,
}

/// Realize `Psi(s) J` given in partial fractions.
///
/// The constant term fixes the input basis `S_in`; in that basis the
/// residue at each stable pole `lambda` is rank one with column `C v`
/// (`v` the eigenvector of `A`). Columns are normalized to a leading one and
/// the mirrored pole gets `Sigma conj(column)`; the physical coordinates
/// then follow from the flat Gram equation.
pub fn ps_realize(ps: &RationalMatrixFunction) -> Result<PsRealization> {
    let dim = ps.rows();
    if dim != ps.cols() || !dim.is_multiple_of(2) {
        return Err(QlsError::Dimension("power spectrum must be square and even-sized".into()));
    }
    let m = dim / 2;
    let jm = j_matrix(m);
    let veff = &ps.constant * &jm;
    let nn = veff.view((m, m), (m, m)).into_owned();
    let mm = veff.view((0, m), (m, m)).into_owned();
    let s_in = vacuum_basis_transform(&linalg::hermitian_part(&nn), &mm, 1e-7)?;
    let s_full = s_in.to_full();
    let s_inv = s_in.flat().to_full();

    let stable = ps.stable_part();
    let pairs = conjugate_pairs(&stable.poles, 1e-6)?;
    let n = pairs.len();
    let sigma = sigma_matrix(m);
    let mut cols: Vec<CVector> = Vec::with_capacity(2 * n);
    let mut lambdas = Vec::with_capacity(n);
    for &(i, _) in &pairs {
        let r = &s_inv * &stable.residues[i] * &s_full;
        let (col, _) = rank_one(&r, "power-spectrum")?;
        let norm = col.norm();
        let lead = col
            .iter()
            .copied()
            .find(|z| z.norm() > 1e-8 * norm)
            .ok_or_else(|| QlsError::Realization("zero residue column".into()))?;
        cols.push(col / lead);
        lambdas.push(stable.poles[i]);
    }
    for k in 0..n {
        let mirrored = &sigma * cols[k].map(|z| z.conj());
        cols.push(mirrored);
    }
    let c0_full = if n == 0 { zeros(dim, 0) } else { CMatrix::from_columns(&cols) };
    let c0 = DoubledUp::from_full(&c0_full, 1e-12)?;
    let a0 = DoubledUp::passive(linalg::diag(&lambdas));
    let x = physical_gram(&a0, &c0)?;
    let t = factor_flat_gram(&x, 1e-8).map_err(|e| match e {
        QlsError::Singular(_) => QlsError::Realization("flat Gram matrix is singular (not globally minimal?)".into()),
        other => other,
    })?;
    let tinv = t.inverse()?;
    let a = &(&t * &a0) * &tinv;
    let c_vac = &c0 * &tinv;
    let vac_sys = QLSystem::from_drift(DoubledUp::identity(m), c_vac, &a, 1e-6)
        .map_err(|e| QlsError::Realization(format!("recovered drift is not physical: {}", e)))?;
    let system = QLSystem::new(s_in.clone(), &s_in * vac_sys.c(), vac_sys.omega().clone())?;

    let v = InputCovariance::vacuum(m);
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for s in ps.grid(20) {
        let target = ps.eval(s)?;
        scale = scale.max(max_abs(&target));
        worst = worst.max(max_abs(&(power_spectrum(&system, &v, s)? * &jm - target)));
    }
    if worst > 1e-6 * scale {
        return Err(QlsError::Realization(format!("realized power spectrum deviates by {:.3e}", worst)));
    }
    Ok(PsRealization { system, gram: x, input_transform: s_in })
}

/// `Psi(s) J` of a system in partial fractions, through its classical
/// cascade embedding.
pub fn power_spectrum_rmf(sys: &QLSystem, v: &InputCovariance) -> Result<RationalMatrixFunction> {
    let emb = crate::stationary::ps_cascade_embedding(sys, v)?;
    RationalMatrixFunction::from_state_space(&emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_rows};
    use crate::stationary::ps_distance;
    use crate::system::default_grid;

    fn god1() -> QLSystem {
        let cc = DoubledUp::new(linalg::real_matrix(1, 1, &[7.0]), linalg::real_matrix(1, 1, &[-1.0])).unwrap();
        let om = DoubledUp::new(linalg::real_matrix(1, 1, &[2.0]), from_rows(&[vec![c(0.0, 1.0)]])).unwrap();
        QLSystem::with_coupling(cc, om).unwrap()
    }

    #[test]
    fn god1_gram_and_spectrum() {
        let sys = god1();
        let v = InputCovariance::vacuum(1);
        let ps = power_spectrum_rmf(&sys, &v).unwrap();
        let got = ps_realize(&ps).unwrap();
        assert!((got.gram.minus()[(0, 0)].re + 0.2054).abs() < 5e-5, "{}", got.gram.minus()[(0, 0)]);
        assert!(got.gram.plus()[(0, 0)].norm() < 1e-8);
        let mut eig = got.system.eigenvalues().unwrap();
        eig.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((eig[0] - c(-24.0, -3f64.sqrt())).norm() < 1e-6);
        let grid = default_grid(&sys).unwrap();
        assert!(ps_distance(&got.system, &v, &sys, &v, &grid).unwrap() < 1e-8);
    }

    #[test]
    fn squeezed_input_basis() {
        let sys = god1();
        let v = InputCovariance::squeezed(0.4);
        let ps = power_spectrum_rmf(&sys, &v).unwrap();
        let got = ps_realize(&ps).unwrap();
        let grid = default_grid(&sys).unwrap();
        let vac = InputCovariance::vacuum(1);
        assert!(ps_distance(&got.system, &vac, &sys, &v, &grid).unwrap() < 1e-8);
    }
}
