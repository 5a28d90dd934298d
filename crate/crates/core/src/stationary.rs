//! Stationary states, power spectra, global minimality and the pure/mixed
//! decomposition.

use crate::core_algebra::{self, covariance, j_matrix, vacuum, williamson, DoubledUp};
use crate::error::{QlsError, Result};
use crate::linalg::{self, max_abs, scale_of, zeros, CMatrix, C64};
use crate::system::{gauge_transform, is_hurwitz, series_product, tf_distance, QLSystem, StateSpace};

/// Gaussian field input with `V(N, M) = [[N^T + I, M], [M^dag, N]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputCovariance {
    n: CMatrix,
    m: CMatrix,
}

impl InputCovariance {
    pub fn new(n: CMatrix, m: CMatrix) -> Result<Self> {
        let k = n.nrows();
        if !n.is_square() || m.shape() != (k, k) {
            return Err(QlsError::Dimension("N and M must be square and equal-sized".into()));
        }
        if !linalg::is_hermitian(&n, 1e-10) {
            return Err(QlsError::Physicality("N must be Hermitian".into()));
        }
        if max_abs(&(&m - m.transpose())) > 1e-10 * scale_of(&m) {
            return Err(QlsError::Physicality("M must be symmetric".into()));
        }
        let v = InputCovariance { n, m };
        williamson(&v.full(), 1e-9)?;
        Ok(v)
    }

    pub fn vacuum(k: usize) -> Self {
        InputCovariance { n: zeros(k, k), m: zeros(k, k) }
    }

    /// Single-mode squeezed vacuum with real `M = sqrt(N (N + 1))`.
    pub fn squeezed(n: f64) -> Self {
        let m = (n * (n + 1.0)).sqrt();
        InputCovariance { n: linalg::real_matrix(1, 1, &[n]), m: linalg::real_matrix(1, 1, &[m]) }
    }

    pub fn n(&self) -> &CMatrix {
        &self.n
    }

    pub fn m(&self) -> &CMatrix {
        &self.m
    }

    pub fn channels(&self) -> usize {
        self.n.nrows()
    }

    pub fn full(&self) -> CMatrix {
        covariance(&self.n, &self.m)
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        williamson(&self.full(), tol).map(|w| w.is_pure(tol)).unwrap_or(false)
    }

    pub fn is_vacuum(&self) -> bool {
        max_abs(&self.n) == 0.0 && max_abs(&self.m) == 0.0
    }
}

/// Stationary covariance `P = <a a^dag>` with its thermal occupations.
#[derive(Debug, Clone)]
pub struct StationaryState {
    pub p: CMatrix,
    pub symplectic_spectrum: Vec<f64>,
}

fn check_channels(sys: &QLSystem, v: &InputCovariance) -> Result<()> {
    if sys.m() != v.channels() {
        return Err(QlsError::Dimension(format!(
            "system has {} channels, input covariance {}",
            sys.m(),
            v.channels()
        )));
    }
    Ok(())
}

/// Field covariance seen by the couplings, `S V S^dag`.
pub fn effective_input(sys: &QLSystem, v: &InputCovariance) -> CMatrix {
    let s = sys.s().to_full();
    &s * v.full() * s.adjoint()
}

/// Solve `A P + P A^dag + C^flat (S V S^dag) C^flat^dag = 0`.
pub fn solve_lyapunov(sys: &QLSystem, v: &InputCovariance) -> Result<StationaryState> {
    check_channels(sys, v)?;
    if !is_hurwitz(sys, 1e-12)? {
        return Err(QlsError::NotHurwitz("stationary state needs a Hurwitz drift".into()));
    }
    let a = sys.drift().to_full();
    let cf = sys.c().flat().to_full();
    let q = &cf * effective_input(sys, v) * cf.adjoint();
    let p = linalg::hermitian_part(&linalg::lyapunov(&a, &q)?);
    let resid = max_abs(&(&a * &p + &p * a.adjoint() + &q));
    let scale = (scale_of(&a) * scale_of(&p)).max(scale_of(&q));
    if resid > 1e-8 * scale {
        return Err(QlsError::Accuracy(format!("Lyapunov residual {:.3e}", resid)));
    }
    let symplectic_spectrum = if sys.n() == 0 {
        Vec::new()
    } else {
        williamson(&p, 1e-8)?.symplectic_eigenvalues
    };
    Ok(StationaryState { p, symplectic_spectrum })
}

/// `Psi(s) = Xi(s) V Xi(-conj s)^dag`.
pub fn power_spectrum(sys: &QLSystem, v: &InputCovariance, s: C64) -> Result<CMatrix> {
    check_channels(sys, v)?;
    let ss = sys.state_space();
    let x1 = ss.eval(s)?;
    let x2 = ss.eval(-s.conj())?;
    Ok(x1 * v.full() * x2.adjoint())
}

/// Symplectic `S_in` with `S_in V_vac S_in^dag = S V S^dag`; requires a pure
/// input.
pub fn input_transform(sys: &QLSystem, v: &InputCovariance, tol: f64) -> Result<DoubledUp> {
    check_channels(sys, v)?;
    let veff = effective_input(sys, v);
    let m = sys.m();
    let nn = veff.view((m, m), (m, m)).into_owned();
    let mm = veff.view((0, m), (m, m)).into_owned();
    core_algebra::vacuum_basis_transform(&nn, &mm, tol)
}

/// `(I, S_in^flat C, Omega)`: the same system driven by vacuum.
pub fn vacuum_basis_system(sys: &QLSystem, s_in: &DoubledUp) -> Result<QLSystem> {
    QLSystem::with_coupling(&s_in.flat() * sys.c(), sys.omega().clone())
}

/// Fully mixed stationary state for a pure input, cross-checked against
/// controllability of `(A, C^flat S_in V_vac)`.
pub fn is_globally_minimal(sys: &QLSystem, v: &InputCovariance, gm_tol: f64) -> Result<bool> {
    check_channels(sys, v)?;
    if !v.is_pure(gm_tol) {
        return Err(QlsError::Unsupported("global minimality is only decided for pure inputs".into()));
    }
    if sys.n() == 0 {
        return Ok(true);
    }
    let s_in = input_transform(sys, v, gm_tol)?;
    let rotated = vacuum_basis_system(sys, &s_in)?;
    let st = solve_lyapunov(&rotated, &InputCovariance::vacuum(sys.m()))?;
    let nmin = st.symplectic_spectrum.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let by_state = nmin > gm_tol;
    let a = rotated.drift().to_full();
    let b = rotated.c().flat().to_full() * vacuum(sys.m());
    let by_control = linalg::rank(&crate::system::controllability_matrix(&a, &b), 1e-10) == 2 * sys.n();
    if by_state != by_control {
        return Err(QlsError::Inconsistent(format!(
            "stationary spectrum (min {:.3e}) and controllability disagree",
            nmin
        )));
    }
    Ok(by_state)
}

#[derive(Debug, Clone)]
pub struct SisoGm {
    pub globally_minimal: bool,
    pub reducible_eigs: Vec<C64>,
}

/// Passive SISO systems with a squeezed input are globally minimal iff no
/// eigenvalue of `A_-` is real or the conjugate of another.
pub fn siso_passive_gm(sys: &QLSystem, v: &InputCovariance, tol: f64) -> Result<SisoGm> {
    check_channels(sys, v)?;
    if sys.m() != 1 || !sys.is_passive(1e-12) {
        return Err(QlsError::Unsupported("needs a passive single-channel system".into()));
    }
    if max_abs(v.m()) == 0.0 {
        return Err(QlsError::Unsupported("needs a squeezed input (M != 0)".into()));
    }
    let eig = linalg::eigenvalues(sys.drift().minus())?;
    let scale = eig.iter().fold(1.0f64, |m, l| m.max(l.norm()));
    let reducible_eigs: Vec<C64> = eig
        .iter()
        .copied()
        .filter(|l| eig.iter().any(|k| (l - k.conj()).norm() <= tol * scale))
        .collect();
    Ok(SisoGm { globally_minimal: reducible_eigs.is_empty(), reducible_eigs })
}

/// Series decomposition into a pure part (first) and a mixed part (second).
///
/// `pure` keeps the original field scattering and is passive in the vacuum
/// basis; `mixed` is driven by the output of `pure`, which carries the
/// unchanged input state `S V S^dag`. `series_product(pure, mixed)` has the
/// transfer function of the original system and the same power spectrum.
#[derive(Debug, Clone)]
pub struct PureMixedSplit {
    pub pure: QLSystem,
    pub mixed: QLSystem,
    /// `S_in` with `S_in V_vac S_in^dag = S V S^dag`.
    pub input_transform: DoubledUp,
    /// Thermal occupations of the stationary state, ascending.
    pub symplectic_spectrum: Vec<f64>,
}

impl PureMixedSplit {
    /// The mixed part as a stand-alone system fed by the original input:
    /// its power spectrum equals that of the original system.
    pub fn spectral_system(&self, original: &QLSystem) -> Result<QLSystem> {
        self.mixed.with_scattering(original.s().clone())
    }
}

pub fn pure_mixed_split(sys: &QLSystem, v: &InputCovariance, gm_tol: f64) -> Result<PureMixedSplit> {
    check_channels(sys, v)?;
    if !v.is_pure(gm_tol) {
        return Err(QlsError::Unsupported("pure/mixed split needs a pure input".into()));
    }
    let s_in = input_transform(sys, v, gm_tol)?;
    let rotated = vacuum_basis_system(sys, &s_in)?;
    let st = solve_lyapunov(&rotated, &InputCovariance::vacuum(sys.m()))?;
    let w = williamson(&st.p, 1e-8)?;
    let canon = gauge_transform(&rotated, &w.transform)?;
    let n = sys.n();
    let k = w.symplectic_eigenvalues.iter().filter(|&&x| x <= gm_tol).count();
    let pure_idx: Vec<usize> = (0..k).collect();
    let mixed_idx: Vec<usize> = (k..n).collect();
    let all_ch: Vec<usize> = (0..sys.m()).collect();
    let back = |c: &DoubledUp| &s_in * c;
    let pure = QLSystem::new(
        sys.s().clone(),
        back(&canon.c().select(&all_ch, &pure_idx)),
        canon.omega().select(&pure_idx, &pure_idx),
    )?;
    let mixed = QLSystem::with_coupling(
        back(&canon.c().select(&all_ch, &mixed_idx)),
        canon.omega().select(&mixed_idx, &mixed_idx),
    )?;
    let composite = series_product(&pure, &mixed)?;
    let grid = crate::system::default_grid(sys)?;
    let dist = tf_distance(&composite, sys, &grid)?;
    let scale = sys.c().max_abs().powi(2).max(sys.omega().max_abs()).max(1.0);
    if dist > 1e-6 * scale {
        return Err(QlsError::Inconsistent(format!("pure/mixed cascade deviates by {:.3e}", dist)));
    }
    Ok(PureMixedSplit { pure, mixed, input_transform: s_in, symplectic_spectrum: w.symplectic_eigenvalues })
}

/// Classical state space with transfer function `Psi(s) J`, built as the
/// cascade of `Xi(-conj s)^dag J`, the constant `V`, and `Xi(s)`; the drift
/// is lower block triangular.
pub fn ps_cascade_embedding(sys: &QLSystem, v: &InputCovariance) -> Result<StateSpace> {
    check_channels(sys, v)?;
    let g1 = sys.state_space();
    let jm = j_matrix(sys.m());
    let vv = v.full();
    // Xi(-conj s)^dag J = D^dag J + B^dag (s + A^dag)^{-1} (-C^dag J)
    let a2 = -g1.a.adjoint();
    let b2 = -(g1.c.adjoint() * &jm);
    let c2 = g1.b.adjoint();
    let d2 = g1.d.adjoint() * &jm;
    let nn = g1.a.nrows();
    let mut a = zeros(2 * nn, 2 * nn);
    a.view_mut((0, 0), (nn, nn)).copy_from(&a2);
    a.view_mut((nn, nn), (nn, nn)).copy_from(&g1.a);
    a.view_mut((nn, 0), (nn, nn)).copy_from(&(&g1.b * &vv * &c2));
    let b = linalg::vstack(&b2, &(&g1.b * &vv * &d2));
    let c = linalg::hstack(&(&g1.d * &vv * &c2), &g1.c);
    let d = &g1.d * &vv * &d2;
    StateSpace::new(a, b, c, d)
}

/// Grid deviation of `Psi` from a constant covariance.
pub fn ps_deviation_from(sys: &QLSystem, v: &InputCovariance, target: &CMatrix, grid: &[C64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &s in grid {
        worst = worst.max(max_abs(&(power_spectrum(sys, v, s)? - target)));
    }
    Ok(worst)
}

/// Largest deviation between two power spectra over a grid.
pub fn ps_distance(
    a: &QLSystem,
    va: &InputCovariance,
    b: &QLSystem,
    vb: &InputCovariance,
    grid: &[C64],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &s in grid {
        worst = worst.max(max_abs(&(power_spectrum(a, va, s)? - power_spectrum(b, vb, s)?)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_rows};
    use crate::system::{default_grid, is_minimal};

    pub(crate) fn gm2(x: f64) -> QLSystem {
        let cc = DoubledUp::passive(from_rows(&[vec![c(0.0, 0.0), c(2.0 * 2f64.sqrt(), 0.0)]]));
        let om = DoubledUp::passive(linalg::real_matrix(
            2,
            2,
            &[(4.0 + x) / 2.0, (4.0 - x) / 2.0, (4.0 - x) / 2.0, (4.0 + x) / 2.0],
        ));
        QLSystem::with_coupling(cc, om).unwrap()
    }

    fn god1() -> QLSystem {
        let cc = DoubledUp::new(linalg::real_matrix(1, 1, &[7.0]), linalg::real_matrix(1, 1, &[-1.0])).unwrap();
        let om = DoubledUp::new(linalg::real_matrix(1, 1, &[2.0]), from_rows(&[vec![c(0.0, 1.0)]])).unwrap();
        QLSystem::with_coupling(cc, om).unwrap()
    }

    #[test]
    fn passive_cavity_vacuum_state() {
        let sys = QLSystem::cavity(1.0, 0.3);
        let st = solve_lyapunov(&sys, &InputCovariance::vacuum(1)).unwrap();
        assert!(max_abs(&(st.p - vacuum(1))) < 1e-12);
        for s in default_grid(&sys).unwrap() {
            let psi = power_spectrum(&sys, &InputCovariance::vacuum(1), s).unwrap();
            assert!(max_abs(&(psi - vacuum(1))) < 1e-12);
        }
    }

    #[test]
    fn non_hurwitz_is_rejected() {
        let sys = QLSystem::with_coupling(DoubledUp::zeros(1, 1), DoubledUp::identity(1)).unwrap();
        assert!(matches!(solve_lyapunov(&sys, &InputCovariance::vacuum(1)), Err(QlsError::NotHurwitz(_))));
    }

    #[test]
    fn god1_is_globally_minimal() {
        let sys = god1();
        let eig = sys.eigenvalues().unwrap();
        assert!(eig.iter().all(|l| (l.re + 24.0).abs() < 1e-9 && (l.im.abs() - 3f64.sqrt()).abs() < 1e-9));
        assert!(is_globally_minimal(&sys, &InputCovariance::vacuum(1), 1e-7).unwrap());
    }

    #[test]
    fn passive_vacuum_not_globally_minimal() {
        let sys = QLSystem::cavity(1.0, 0.3);
        assert!(!is_globally_minimal(&sys, &InputCovariance::vacuum(1), 1e-7).unwrap());
    }

    #[test]
    fn gm2_verdicts() {
        let v = InputCovariance::squeezed(1.0);
        for (x, gm, pure_dim) in [(0.0, true, 0), (8.0, true, 0), (-1.0, false, 1), (-4.0, false, 2)] {
            let sys = gm2(x);
            assert!(is_minimal(&sys, 1e-10));
            assert_eq!(is_globally_minimal(&sys, &v, 1e-7).unwrap(), gm, "x = {}", x);
            let siso = siso_passive_gm(&sys, &v, 1e-9).unwrap();
            assert_eq!(siso.globally_minimal, gm, "x = {}", x);
            assert_eq!(siso.reducible_eigs.len(), pure_dim, "x = {}", x);
            let split = pure_mixed_split(&sys, &v, 1e-7).unwrap();
            assert_eq!(split.pure.n(), pure_dim, "x = {}", x);
            let grid = default_grid(&sys).unwrap();
            let spec = split.spectral_system(&sys).unwrap();
            assert!(ps_distance(&spec, &v, &sys, &v, &grid).unwrap() < 1e-8, "x = {}", x);
        }
    }

    #[test]
    fn conjugate_pair_cascade_is_reducible() {
        let a = QLSystem::cavity(2.0, 1.5);
        let b = QLSystem::cavity(2.0, -1.5);
        let sys = series_product(&a, &b).unwrap();
        let r = siso_passive_gm(&sys, &InputCovariance::squeezed(0.5), 1e-9).unwrap();
        assert!(!r.globally_minimal);
        assert_eq!(r.reducible_eigs.len(), 2);
    }

    #[test]
    fn embedding_matches_psi_j() {
        let sys = god1();
        let v = InputCovariance::vacuum(1);
        let emb = ps_cascade_embedding(&sys, &v).unwrap();
        let j = j_matrix(1);
        for s in default_grid(&sys).unwrap() {
            let lhs = emb.eval(s).unwrap();
            let rhs = power_spectrum(&sys, &v, s).unwrap() * &j;
            assert!(max_abs(&(lhs - rhs)) < 1e-8);
        }
        assert!(emb.is_minimal(1e-10));
        let trivial = QLSystem::identity(1);
        let e = ps_cascade_embedding(&trivial, &v).unwrap();
        assert!(max_abs(&(e.d - vacuum(1) * j)) < 1e-15);
    }

    #[test]
    fn thermal_input_rejected_for_gm() {
        let v = InputCovariance::new(linalg::real_matrix(1, 1, &[1.0]), zeros(1, 1)).unwrap();
        assert!(matches!(is_globally_minimal(&god1(), &v, 1e-7), Err(QlsError::Unsupported(_))));
    }

    #[test]
    fn unphysical_covariance_rejected() {
        let r = InputCovariance::new(linalg::real_matrix(1, 1, &[0.1]), linalg::real_matrix(1, 1, &[1.0]));
        assert!(matches!(r, Err(QlsError::Physicality(_))));
    }
}
