//! Coherent quantum absorbers: a second system that, placed after the
//! first, purifies the joint stationary state and restores a vacuum output.

use crate::core_algebra::{vacuum, williamson, DoubledUp};
use crate::error::{QlsError, Result};
use crate::linalg::{self, c, zeros, CMatrix, C64};
use crate::stationary::{input_transform, power_spectrum, solve_lyapunov, vacuum_basis_system, InputCovariance};
use crate::system::{gauge_transform, is_hurwitz, series_product, QLSystem};

#[derive(Debug, Clone)]
pub struct AbsorberResult {
    pub dual: QLSystem,
    /// `series_product(sys, dual)`.
    pub combined: QLSystem,
    /// Largest symplectic eigenvalue of the combined stationary state.
    pub purity_residual: f64,
    /// Gauge transform that brings the stationary state to `diag(N + 1, N)`.
    pub basis_transform: DoubledUp,
    /// Field rotation to the vacuum basis (identity when `S` maps vacuum to
    /// vacuum).
    pub input_transform: DoubledUp,
}

#[derive(Debug, Clone)]
pub struct Canonical {
    pub system: QLSystem,
    pub transform: DoubledUp,
    /// Thermal occupations, ascending.
    pub occupations: Vec<f64>,
}

/// Gauge the system so its vacuum-driven stationary state is
/// `diag(N + 1, N)` with every `N_i > gm_tol`.
pub fn canonicalize_stationary(sys: &QLSystem, gm_tol: f64) -> Result<Canonical> {
    if !is_hurwitz(sys, 1e-12)? {
        return Err(QlsError::NotHurwitz("absorber needs a Hurwitz system".into()));
    }
    let st = solve_lyapunov(sys, &InputCovariance::vacuum(sys.m()))?;
    let w = williamson(&st.p, 1e-8)?;
    if let Some(&nmin) = w.symplectic_eigenvalues.first() {
        if nmin <= gm_tol {
            return Err(QlsError::NotGloballyMinimal(format!("stationary occupation {:.3e} is not positive", nmin)));
        }
    }
    let system = gauge_transform(sys, &w.transform)?;
    Ok(Canonical { system, transform: w.transform, occupations: w.symplectic_eigenvalues })
}

/// Construct the dual system for a vacuum-driven, globally minimal system.
pub fn dual_system(sys: &QLSystem, gm_tol: f64) -> Result<AbsorberResult> {
    let m = sys.m();
    let s_in = input_transform(sys, &InputCovariance::vacuum(m), 1e-8)?;
    let rotated = vacuum_basis_system(sys, &s_in)?;
    let canon = canonicalize_stationary(&rotated, gm_tol)?;
    let n = sys.n();
    let occ = &canon.occupations;
    let pdiag: Vec<C64> = occ.iter().map(|x| c(x + 1.0, 0.0)).chain(occ.iter().map(|&x| c(x, 0.0))).collect();
    let p = linalg::diag(&pdiag);
    let p_inv = linalg::diag(&pdiag.iter().map(|z| 1.0 / z).collect::<Vec<_>>());
    // Q = [[0, M], [M, 0]] pairs each mode with its dual partner
    let mut q = zeros(2 * n, 2 * n);
    let mut q_inv = zeros(2 * n, 2 * n);
    for (i, &x) in occ.iter().enumerate() {
        let mi = (x * (x + 1.0)).sqrt();
        q[(i, n + i)] = c(mi, 0.0);
        q[(n + i, i)] = c(mi, 0.0);
        q_inv[(i, n + i)] = c(1.0 / mi, 0.0);
        q_inv[(n + i, i)] = c(1.0 / mi, 0.0);
    }
    let c1 = canon.system.c();
    let c1f = c1.flat().to_full();
    let a1 = canon.system.drift().to_full();
    let x = &p * &q_inv * c1f.columns(0, m);
    let c2m = x.rows(0, n).adjoint();
    let c2p = -x.rows(n, n).adjoint();
    let c2 = DoubledUp::new(c2m, c2p)?;
    let pq = &p * &q_inv;
    let a2 = &q * &p_inv * &a1 * &pq + c2.flat().to_full() * c1.to_full() * &pq;
    let a2d = DoubledUp::from_full(&a2, 1e-8)?;
    let dual_vac = QLSystem::from_drift(DoubledUp::identity(m), c2, &a2d, 1e-8)?;
    let dual = dual_vac.with_scattering(s_in.flat())?;
    let combined = series_product(sys, &dual)?;
    let purity_residual = purity_of(&combined)?;
    Ok(AbsorberResult { dual, combined, purity_residual, basis_transform: canon.transform, input_transform: s_in })
}

fn purity_of(combined: &QLSystem) -> Result<f64> {
    let st = solve_lyapunov(combined, &InputCovariance::vacuum(combined.m()))?;
    Ok(st.symplectic_spectrum.iter().fold(0.0f64, |m, &x| m.max(x)))
}

#[derive(Debug, Clone, Copy)]
pub struct AbsorberCheck {
    pub purity_residual: f64,
    pub ps_residual: f64,
}

/// Purity of the cascade `sys -> dual` and the grid deviation of its power
/// spectrum from vacuum.
pub fn verify_absorber(sys: &QLSystem, dual: &QLSystem, grid: &[C64]) -> Result<AbsorberCheck> {
    let combined = series_product(sys, dual)?;
    let purity_residual = purity_of(&combined)?;
    let v = InputCovariance::vacuum(combined.m());
    let vac: CMatrix = vacuum(combined.m());
    let mut ps_residual = 0.0f64;
    for &s in grid {
        ps_residual = ps_residual.max(linalg::max_abs(&(power_spectrum(&combined, &v, s)? - &vac)));
    }
    Ok(AbsorberCheck { purity_residual, ps_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_rows, max_abs};
    use crate::system::default_grid;

    fn one_mode() -> QLSystem {
        let cc = DoubledUp::new(from_rows(&[vec![c(2.0, 0.5)]]), from_rows(&[vec![c(0.4, -0.3)]])).unwrap();
        let om = DoubledUp::new(linalg::real_matrix(1, 1, &[1.3]), from_rows(&[vec![c(0.2, 0.6)]])).unwrap();
        QLSystem::with_coupling(cc, om).unwrap()
    }

    #[test]
    fn one_mode_dual_is_an_absorber() {
        let sys = one_mode();
        let res = dual_system(&sys, 1e-7).unwrap();
        assert!(res.purity_residual < 1e-8, "{}", res.purity_residual);
        let chk = verify_absorber(&sys, &res.dual, &default_grid(&sys).unwrap()).unwrap();
        assert!(chk.ps_residual < 1e-8);
        let mut e1 = sys.eigenvalues().unwrap();
        let mut e2 = res.dual.eigenvalues().unwrap();
        e1.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        e2.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn one_mode_closed_form() {
        let canon = canonicalize_stationary(&one_mode(), 1e-7).unwrap();
        let res = dual_system(&one_mode(), 1e-7).unwrap();
        let c1m = canon.system.c().minus()[(0, 0)];
        let c1p = canon.system.c().plus()[(0, 0)];
        let c2m = -(c1m.norm_sqr() / c1p.norm_sqr()).sqrt() * c1p;
        let c2p = -(c1p.norm_sqr() / c1m.norm_sqr()).sqrt() * c1m;
        assert!((res.dual.c().minus()[(0, 0)] - c2m).norm() < 1e-8);
        assert!((res.dual.c().plus()[(0, 0)] - c2p).norm() < 1e-8);
        let a1 = canon.system.drift();
        let a2 = res.dual.drift();
        assert!((a2.minus()[(0, 0)] - a1.minus()[(0, 0)].conj()).norm() < 1e-8);
        assert!((a2.plus()[(0, 0)] + a1.plus()[(0, 0)].conj()).norm() < 1e-8);
    }

    fn two_mode() -> QLSystem {
        let i = c(0.0, 1.0);
        let r = |x: f64| c(x, 0.0);
        let cfull = from_rows(&[vec![r(5.0), r(4.0), r(1.0), -i], vec![r(1.0), i, r(5.0), r(4.0)]]);
        let a = from_rows(&[
            vec![c(-12.0, -2.0), c(0.0, 0.5), r(1.0), c(-2.0, -2.5)],
            vec![c(-20.0, -0.5), c(-7.5, -6.0), c(-6.0, -7.5), c(0.0, -2.0)],
            vec![r(1.0), c(-2.0, 2.5), c(-12.0, 2.0), c(0.0, -0.5)],
            vec![c(-6.0, 7.5), c(0.0, 2.0), c(-20.0, 0.5), c(-7.5, 6.0)],
        ]);
        let cc = DoubledUp::from_full(&cfull, 1e-12).unwrap();
        QLSystem::from_drift(DoubledUp::identity(1), cc, &DoubledUp::from_full(&a, 1e-12).unwrap(), 1e-8).unwrap()
    }

    #[test]
    fn two_mode_example() {
        let sys = two_mode();
        let st = solve_lyapunov(&sys, &InputCovariance::vacuum(1)).unwrap();
        assert!((st.p[(0, 0)].re - 1.1067).abs() < 5e-3, "{}", st.p[(0, 0)]);
        let res = dual_system(&sys, 1e-7).unwrap();
        assert!(res.purity_residual < 1e-8, "{}", res.purity_residual);
        let chk = verify_absorber(&sys, &res.dual, &default_grid(&sys).unwrap()).unwrap();
        assert!(chk.ps_residual < 1e-8);
    }

    #[test]
    fn self_cascade_is_not_an_absorber() {
        let sys = one_mode();
        let chk = verify_absorber(&sys, &sys, &default_grid(&sys).unwrap()).unwrap();
        assert!(chk.purity_residual > 1e-3 && chk.ps_residual > 1e-3);
    }

    #[test]
    fn passive_system_is_rejected() {
        let r = dual_system(&QLSystem::cavity(1.0, 0.5), 1e-7);
        assert!(matches!(r, Err(QlsError::NotGloballyMinimal(_))));
    }

    #[test]
    fn canonical_state_is_diagonal() {
        let canon = canonicalize_stationary(&one_mode(), 1e-7).unwrap();
        let st = solve_lyapunov(&canon.system, &InputCovariance::vacuum(1)).unwrap();
        let n = canon.occupations[0];
        let want = linalg::diag(&[c(n + 1.0, 0.0), c(n, 0.0)]);
        assert!(max_abs(&(st.p - want)) < 1e-10);
    }
}
