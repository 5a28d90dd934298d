//! SISO cascades of one-mode systems: the passive pole product and direct
//! identification of an active cascade from its transfer function.

use nalgebra::{DMatrix, DVector};

use super::rational::RationalMatrixFunction;
use crate::core_algebra::{is_symplectic, DoubledUp};
use crate::error::{QlsError, Result};
use crate::linalg::{self, c, max_abs, CMatrix, C64};
use crate::system::{series_product, QLSystem};

/// One-mode stage `(Delta(c, 0), Delta(theta, omega_plus))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeStage {
    pub c: f64,
    pub theta: f64,
    pub omega_plus: C64,
}

/// `x = c^2 / 2`, `y = sqrt(|Omega_+|^2 - theta^2)` (real or imaginary),
/// `phi = arg Omega_+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneModeParams {
    pub x: f64,
    pub theta: f64,
    pub y: C64,
    pub phi: f64,
}

impl CascadeStage {
    pub fn system(&self) -> QLSystem {
        let cc = DoubledUp::passive(linalg::real_matrix(1, 1, &[self.c]));
        let om = DoubledUp::new(
            linalg::real_matrix(1, 1, &[self.theta]),
            CMatrix::from_element(1, 1, self.omega_plus),
        )
        .expect("1x1 blocks");
        QLSystem::with_coupling(cc, om).expect("one-mode stage is valid")
    }

    pub fn params(&self) -> OneModeParams {
        let d = self.omega_plus.norm_sqr() - self.theta * self.theta;
        OneModeParams {
            x: 0.5 * self.c * self.c,
            theta: self.theta,
            y: if d >= 0.0 { c(d.sqrt(), 0.0) } else { c(0.0, (-d).sqrt()) },
            phi: self.omega_plus.arg(),
        }
    }

    pub fn from_params(p: &OneModeParams) -> Self {
        let w = (p.y * p.y + p.theta * p.theta).re.max(0.0).sqrt();
        CascadeStage { c: (2.0 * p.x).sqrt(), theta: p.theta, omega_plus: C64::from_polar(w, p.phi) }
    }
}

/// Stages in signal order (`stages[0]` receives the input) followed by a
/// constant output scattering.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeRealization {
    pub stages: Vec<CascadeStage>,
    pub output_scattering: DoubledUp,
}

impl CascadeRealization {
    pub fn system(&self) -> Result<QLSystem> {
        let mut sys = QLSystem::identity(1);
        for st in &self.stages {
            sys = series_product(&sys, &st.system())?;
        }
        let out = QLSystem::new(self.output_scattering.clone(), DoubledUp::zeros(1, 0), DoubledUp::zeros(0, 0))?;
        series_product(&sys, &out)
    }
}

/// Passive cascade with transfer function `prod (s + conj z) / (s - z)`.
pub fn passive_siso_cascade(poles: &[C64]) -> Result<CascadeRealization> {
    let mut stages = Vec::with_capacity(poles.len());
    for &z in poles {
        if z.re >= 0.0 {
            return Err(QlsError::NotHurwitz(format!("pole {} is not in the left half plane", z)));
        }
        stages.push(CascadeStage { c: (-2.0 * z.re).sqrt(), theta: -z.im, omega_plus: c(0.0, 0.0) });
    }
    Ok(CascadeRealization { stages, output_scattering: DoubledUp::identity(1) })
}

#[derive(Debug, Clone, Default)]
pub struct CascadeOptions {
    /// Pole pairs nearest these locations are peeled first, in this order;
    /// the rest follow by descending `|Re|`.
    pub preferred: Vec<C64>,
    /// Absolute pole-matching tolerance.
    pub pole_tol: Option<f64>,
}

/// Full doubled-up `Xi` from its two independent entries.
pub fn doubled_transfer(xi_minus: &RationalMatrixFunction, xi_plus: &RationalMatrixFunction, tol: f64) -> Result<RationalMatrixFunction> {
    if xi_minus.rows() != 1 || xi_minus.cols() != 1 || xi_plus.rows() != 1 || xi_plus.cols() != 1 {
        return Err(QlsError::Dimension("cascade identification takes scalar Xi_- and Xi_+".into()));
    }
    let close = |a: C64, b: C64| (a - b).norm() <= tol * a.norm().max(1.0);
    let mut poles: Vec<C64> = Vec::new();
    for &p in xi_minus.poles.iter().chain(&xi_plus.poles) {
        if !poles.iter().any(|&q| close(p, q)) {
            poles.push(p);
        }
    }
    let find = |f: &RationalMatrixFunction, p: C64| -> C64 {
        f.poles
            .iter()
            .zip(&f.residues)
            .find(|(q, _)| close(p, **q))
            .map(|(_, r)| r[(0, 0)])
            .unwrap_or(c(0.0, 0.0))
    };
    let mut residues = Vec::with_capacity(poles.len());
    for &p in &poles {
        if !poles.iter().any(|&q| close(p.conj(), q)) {
            return Err(QlsError::Structure(format!("pole {} has no conjugate partner", p)));
        }
        let r = linalg::from_rows(&[
            vec![find(xi_minus, p), find(xi_plus, p)],
            vec![find(xi_plus, p.conj()).conj(), find(xi_minus, p.conj()).conj()],
        ]);
        residues.push(r);
    }
    let (km, kp) = (xi_minus.constant[(0, 0)], xi_plus.constant[(0, 0)]);
    let constant = linalg::from_rows(&[vec![km, kp], vec![kp.conj(), km.conj()]]);
    RationalMatrixFunction::new(constant, poles, residues)
}

/// Peel one-mode stages off the input side of `Xi` until only a constant
/// remains.
pub fn siso_cascade_identify(
    xi_minus: &RationalMatrixFunction,
    xi_plus: &RationalMatrixFunction,
    opts: &CascadeOptions,
) -> Result<CascadeRealization> {
    let tol = opts.pole_tol.unwrap_or(1e-6);
    let input = doubled_transfer(xi_minus, xi_plus, tol)?;
    let mut rest = input.clone();
    let mut preferred = opts.preferred.clone();
    let mut stages = Vec::new();
    while !rest.poles.is_empty() {
        let (ip, iq) = pick_pair(&rest.poles, &mut preferred, tol)?;
        let p = rest.poles[ip];
        let x = -0.5 * (p.re + rest.poles[iq].re);
        let eta = 0.5 * (p.im - rest.poles[iq].im);
        if x <= 0.0 {
            return Err(QlsError::NotHurwitz(format!("pole {} is not in the left half plane", p)));
        }
        let stage = identify_stage(&rest, x, eta)?;
        let xi1 = stage.system();
        let eig = xi1.eigenvalues()?;
        if !eig.iter().all(|l| (l - p).norm() <= 1e-6 * p.norm().max(1.0) || (l - p.conj()).norm() <= 1e-6 * p.norm().max(1.0)) {
            return Err(QlsError::Identification("identified stage does not carry the chosen poles".into()));
        }
        rest = peel(&rest, &xi1, ip, iq)?;
        stages.push(stage);
    }
    let k = rest.constant.clone();
    if !is_symplectic(&k, 1e-6)? {
        return Err(QlsError::Identification("remaining constant is not symplectic".into()));
    }
    let out = CascadeRealization { stages, output_scattering: DoubledUp::project(&k) };
    let sys = out.system()?;
    let grid = input.grid(24);
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for &s in &grid {
        let a = input.eval(s)?;
        scale = scale.max(max_abs(&a));
        worst = worst.max(max_abs(&(a - sys.transfer_function(s)?)));
    }
    if worst > 1e-6 * scale {
        return Err(QlsError::Identification(format!("reconstructed cascade deviates by {:.3e}", worst)));
    }
    Ok(out)
}

fn pick_pair(poles: &[C64], preferred: &mut Vec<C64>, tol: f64) -> Result<(usize, usize)> {
    for p in poles {
        if p.im.abs() <= tol * p.norm().max(1.0) {
            return Err(QlsError::Unsupported(format!("pole {} lies on the real axis", p)));
        }
    }
    let partner = |i: usize| -> Result<usize> {
        let target = poles[i].conj();
        let (j, d) = poles
            .iter()
            .enumerate()
            .map(|(j, q)| (j, (q - target).norm()))
            .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if d > tol * target.norm().max(1.0) || j == i {
            return Err(QlsError::Identification(format!("pole {} has no conjugate partner", poles[i])));
        }
        Ok(j)
    };
    let upper: Vec<usize> = (0..poles.len()).filter(|&i| poles[i].im > 0.0).collect();
    while let Some(want) = preferred.first().copied() {
        preferred.remove(0);
        let best = upper.iter().copied().min_by(|&a, &b| {
            let da = (poles[a] - want).norm().min((poles[a].conj() - want).norm());
            let db = (poles[b] - want).norm().min((poles[b].conj() - want).norm());
            da.partial_cmp(&db).unwrap()
        });
        if let Some(i) = best {
            return Ok((i, partner(i)?));
        }
    }
    let i = upper
        .iter()
        .copied()
        .max_by(|&a, &b| poles[a].re.abs().partial_cmp(&poles[b].re.abs()).unwrap())
        .ok_or_else(|| QlsError::Identification("no pole in the upper half plane".into()))?;
    Ok((i, partner(i)?))
}

/// The first stage with poles `-x +- i eta` makes `Xi` singular at the
/// mirrored points `x +- i eta`; its null vectors are the stage eigenvectors,
/// which fix `theta` and `Omega_+` through a small real least-squares system.
fn identify_stage(xi: &RationalMatrixFunction, x: f64, eta: f64) -> Result<CascadeStage> {
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (z, sign) in [(c(x, eta), -1.0), (c(x, -eta), 1.0)] {
        let m = xi.eval(z)?;
        let (smin, v) = linalg::smallest_right_singular_vector(&m);
        let smax = linalg::singular_values(&m)[0];
        if smin > 1e-6 * smax.max(1.0) {
            return Err(QlsError::Identification(format!(
                "transfer function is not singular at {} (smallest singular value {:.3e})",
                z, smin
            )));
        }
        let (n1, n2) = (v[0], v[1]);
        // theta n1 + w n2 = sign * eta * n1
        let b = n1 * (sign * eta);
        rows.push([n1.re, n2.re, -n2.im]);
        rhs.push(b.re);
        rows.push([n1.im, n2.im, n2.re]);
        rhs.push(b.im);
    }
    let a = DMatrix::from_fn(4, 3, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let sol = svd
        .solve(&b, 1e-14)
        .map_err(|e| QlsError::Identification(format!("stage least squares: {}", e)))?;
    let resid = (&a * &sol - &b).norm();
    let scale = eta.abs().max(sol.norm()).max(1.0);
    if resid > 1e-6 * scale {
        return Err(QlsError::Identification(format!("stage equations inconsistent (residual {:.3e})", resid)));
    }
    Ok(CascadeStage { c: (2.0 * x).sqrt(), theta: sol[0], omega_plus: c(sol[1], sol[2]) })
}

/// `Xi Xi_1^{-1}` in partial fractions: the two stage poles cancel, the
/// residues at the others pick up `Xi_1(p)^{-1}`.
fn peel(xi: &RationalMatrixFunction, stage: &QLSystem, ip: usize, iq: usize) -> Result<RationalMatrixFunction> {
    let mut poles = Vec::new();
    let mut residues = Vec::new();
    for (k, (&p, r)) in xi.poles.iter().zip(&xi.residues).enumerate() {
        if k == ip || k == iq {
            continue;
        }
        let inv = linalg::inverse(&stage.transfer_function(p)?)?;
        poles.push(p);
        residues.push(r * inv);
    }
    let rest = RationalMatrixFunction::new(xi.constant.clone(), poles, residues)?;
    let grid = xi.grid(12);
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for &s in &grid {
        let full = xi.eval(s)?;
        scale = scale.max(max_abs(&full));
        worst = worst.max(max_abs(&(rest.eval(s)? * stage.transfer_function(s)? - full)));
    }
    if worst > 1e-6 * scale {
        return Err(QlsError::Identification(format!("stage does not factor out (remainder {:.3e})", worst)));
    }
    Ok(rest)
}
