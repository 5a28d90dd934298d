//! Passive realizations with unobserved noise channels, and the noise
//! unobservable subspace.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core_algebra::DoubledUp;
use crate::error::{QlsError, Result};
use crate::linalg::{self, c, eye, max_abs, zeros, CMatrix, CVector, I};
use crate::system::{observability_matrix, QLSystem, StateSpace};

const MAX_RESTARTS: usize = 50;
const MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct NoisyOptions {
    pub seed: u64,
    /// Relative residual target for the physicality equation.
    pub tol: f64,
}

impl Default for NoisyOptions {
    fn default() -> Self {
        NoisyOptions { seed: 0, tol: 1e-12 }
    }
}

struct Problem<'a> {
    a0: &'a CMatrix,
    b0: &'a CMatrix,
    c0: &'a CMatrix,
    d: &'a CMatrix,
    n: usize,
    k: usize,
}

impl Problem<'_> {
    fn unpack(&self, z: &DVector<f64>) -> CMatrix {
        CMatrix::from_fn(self.k, self.n, |i, j| {
            let idx = 2 * (i * self.n + j);
            c(z[idx], z[idx + 1])
        })
    }

    /// `X` with `X A0 + A0^dag X + C0^dag C0 + K^dag K = 0`.
    fn gram(&self, kk: &CMatrix) -> Result<CMatrix> {
        let q = -(self.c0.adjoint() * self.c0 + kk.adjoint() * kk);
        Ok(linalg::hermitian_part(&linalg::sylvester(&self.a0.adjoint(), self.a0, &q)?))
    }

    /// `X B0 + C0^dag D`, stacked as real and imaginary parts.
    fn residual(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let x = self.gram(&self.unpack(z))?;
        let r = x * self.b0 + self.c0.adjoint() * self.d;
        let mut out = DVector::zeros(2 * r.len());
        for (i, v) in r.iter().enumerate() {
            out[2 * i] = v.re;
            out[2 * i + 1] = v.im;
        }
        Ok(out)
    }
}

/// Levenberg-Marquardt with forward-difference Jacobian.
fn levenberg_marquardt(p: &Problem, mut z: DVector<f64>, target: f64) -> Result<Option<DVector<f64>>> {
    let mut r = p.residual(&z)?;
    let mut mu = 1e-3;
    for _ in 0..MAX_ITERS {
        let cost = r.norm();
        if cost <= target {
            return Ok(Some(z));
        }
        let mut jac = DMatrix::zeros(r.len(), z.len());
        for j in 0..z.len() {
            let h = 1e-7 * z[j].abs().max(1.0);
            let mut zp = z.clone();
            zp[j] += h;
            let rp = p.residual(&zp)?;
            jac.set_column(j, &((rp - &r) / h));
        }
        let jt = jac.transpose();
        let g = &jt * &r;
        let h = &jt * &jac;
        let mut improved = false;
        for _ in 0..30 {
            let mut lhs = h.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += mu * (1.0 + h[(i, i)]);
            }
            let step = match lhs.lu().solve(&(-&g)) {
                Some(s) => s,
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let zn = &z + &step;
            let rn = p.residual(&zn)?;
            if rn.norm() < cost {
                z = zn;
                r = rn;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Ok(if r.norm() <= target { Some(z) } else { None })
}

/// Extend a minimal realization `(A0, B0, C0, D)` of the accessible block
/// of a passive system by `n_noise` noise channels so that the result is
/// physically realizable.
pub fn noisy_realize(ss: &StateSpace, n_noise: usize, opts: &NoisyOptions) -> Result<QLSystem> {
    let n = ss.order();
    let m1 = ss.d.nrows();
    if ss.d.ncols() != m1 {
        return Err(QlsError::Dimension("accessible block must be square".into()));
    }
    if max_abs(&(ss.d.adjoint() * &ss.d - eye(m1))) > 1e-8 {
        return Err(QlsError::Unsupported("feedthrough of the accessible block must be unitary".into()));
    }
    if ss.eigenvalues()?.iter().any(|l| l.re >= -1e-12) {
        return Err(QlsError::NotHurwitz("accessible block must be Hurwitz".into()));
    }
    let p = Problem { a0: &ss.a, b0: &ss.b, c0: &ss.c, d: &ss.d, n, k: n_noise };
    let scale = (ss.c.norm() * ss.c.norm()).max(1.0);
    let target = opts.tol * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut found: Option<(CMatrix, CMatrix)> = None;
    let restarts = if n_noise == 0 { 1 } else { MAX_RESTARTS };
    for _ in 0..restarts {
        let z0 = DVector::from_fn(2 * n_noise * n, |_, _| rng.random_range(-1.0..1.0) * ss.c.norm().max(1.0));
        let z = if n_noise == 0 {
            if p.residual(&z0)?.norm() <= target {
                Some(z0)
            } else {
                None
            }
        } else {
            levenberg_marquardt(&p, z0, target)?
        };
        let Some(z) = z else { continue };
        let kk = p.unpack(&z);
        let x = p.gram(&kk)?;
        let (vals, _) = linalg::hermitian_eig(&x);
        if vals.first().is_some_and(|&v| v <= 0.0) {
            continue;
        }
        found = Some((kk, x));
        break;
    }
    let (kk, x) = found.ok_or_else(|| {
        QlsError::Infeasible(format!("no physical noise coupling found after {} restarts", restarts))
    })?;
    let t = linalg::hermitian_sqrt(&x)?;
    let tinv = linalg::inverse(&t)?;
    let a = &t * &ss.a * &tinv;
    let c1 = &ss.c * &tinv;
    let c2 = &kk * &tinv;
    let cc = linalg::vstack(&c1, &c2);
    let omega = linalg::hermitian_part(&((&a + (cc.adjoint() * &cc).scale(0.5)) * I));
    let mut s = eye(m1 + n_noise);
    s.view_mut((0, 0), (m1, m1)).copy_from(&ss.d);
    QLSystem::new(DoubledUp::passive(s), DoubledUp::passive(cc), DoubledUp::passive(omega))
}

/// Orthonormal basis of the modes the noise channels cannot see: the
/// unobservable subspace of `(C_noise, A_-)`.
pub fn nus_detect(sys: &QLSystem, accessible: &[usize]) -> Result<Vec<CVector>> {
    if !sys.is_passive(1e-10) {
        return Err(QlsError::Unsupported("noise unobservable subspace needs a passive system".into()));
    }
    if accessible.iter().any(|&i| i >= sys.m()) {
        return Err(QlsError::Dimension("accessible channel index out of range".into()));
    }
    let noise: Vec<usize> = (0..sys.m()).filter(|i| !accessible.contains(i)).collect();
    let n = sys.n();
    let a = sys.drift().minus().clone();
    let cn = CMatrix::from_fn(noise.len(), n, |i, j| sys.c().minus()[(noise[i], j)]);
    let obs = if noise.is_empty() { zeros(0, n) } else { observability_matrix(&cn, &a) };
    let smax = linalg::singular_values(&obs).first().copied().unwrap_or(0.0);
    let basis = if smax == 0.0 { eye(n) } else { linalg::null_space(&obs, 1e-9 * smax) };
    Ok((0..basis.ncols()).map(|j| basis.column(j).into_owned()).collect())
}
