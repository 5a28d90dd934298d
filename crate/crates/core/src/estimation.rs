//! Quantum Fisher information for parameter families of linear systems.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;

use serde::Serialize;

use crate::core_algebra::{j_matrix, DoubledUp};
use crate::error::{QlsError, Result};
use crate::linalg::{self, c, max_abs, CMatrix, CVector};
use crate::quadrature::{integrate_real_line, QuadOptions};
use crate::stationary::{effective_input, power_spectrum, solve_lyapunov, InputCovariance};
use crate::system::{gauge_transform, is_hurwitz, spectral_gap, AffineFamily, AffineTerm, Block, FamilyTarget, ParamFamily, QLSystem, TangentData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QfiMethod {
    Coherent,
    SqueezedCoherent,
    StationaryTime,
    StationaryFreq,
    Multiparam,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QFIReport {
    pub value: f64,
    pub method: QfiMethod,
    pub diagnostics: BTreeMap<String, f64>,
}

impl QFIReport {
    fn new(value: f64, method: QfiMethod) -> Self {
        QFIReport { value, method, diagnostics: BTreeMap::new() }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.diagnostics.insert(key.to_string(), v);
        self
    }
}

fn check_stationary_input(sys: &QLSystem, v: &InputCovariance) -> Result<()> {
    if !v.is_pure(1e-8) {
        return Err(QlsError::Impure("stationary QFI rates need a pure input".into()));
    }
    if !is_hurwitz(sys, 1e-12)? {
        return Err(QlsError::NotHurwitz("stationary QFI rates need a Hurwitz system".into()));
    }
    Ok(())
}

/// Empty cavity with coupling `c` (damping `c^2`) detuned by `theta`.
pub fn cavity_detuning_family(coupling: f64) -> AffineFamily {
    let base = QLSystem::cavity(coupling * coupling, 0.0);
    let term = AffineTerm { target: FamilyTarget::Omega, block: Block::Minus, row: 0, col: 0, coeff: c(1.0, 0.0) };
    AffineFamily::new(base, vec![term]).expect("cavity family is valid")
}

/// Symplectic generator `exp(theta i J 2R)` for a doubled-up `R` with
/// Hermitian minus block and symmetric plus block.
fn gauge_generator(r: &DoubledUp) -> Result<CMatrix> {
    let rf = r.to_full();
    if !linalg::is_hermitian(&rf, 1e-10 * linalg::scale_of(&rf)) {
        return Err(QlsError::Structure("gauge generator must be Hermitian".into()));
    }
    let n = r.n_out();
    Ok((j_matrix(n) * rf).scale(2.0) * c(0.0, 1.0))
}

/// Gauge orbit `theta -> T(theta) . sys` with `T = exp(theta i J 2R)`. The
/// transfer function and power spectrum do not depend on `theta`.
pub struct GaugeFamily {
    base: QLSystem,
    generator: CMatrix,
}

impl GaugeFamily {
    pub fn new(base: QLSystem, r: &DoubledUp) -> Result<Self> {
        if r.n_out() != base.n() || !r.is_square() {
            return Err(QlsError::Dimension("gauge generator must be n x n".into()));
        }
        let generator = gauge_generator(r)?;
        Ok(GaugeFamily { base, generator })
    }
}

impl ParamFamily for GaugeFamily {
    fn system(&self, theta: f64) -> Result<QLSystem> {
        let t = DoubledUp::from_full(&self.generator.scale(theta).exp(), 1e-8)?;
        gauge_transform(&self.base, &t)
    }

    fn tangent(&self, theta: f64) -> Result<TangentData> {
        let sys = self.system(theta)?;
        gauge_tangent_of(&sys, &self.generator)
    }
}

/// Tangent along the gauge direction `R`: `C' = -i C J 2R`,
/// `A' = i [J 2R, A]`.
pub fn gauge_tangent(sys: &QLSystem, r: &DoubledUp) -> Result<TangentData> {
    gauge_tangent_of(sys, &gauge_generator(r)?)
}

fn gauge_tangent_of(sys: &QLSystem, g: &CMatrix) -> Result<TangentData> {
    let cf = sys.c().to_full();
    let a = sys.drift().to_full();
    let dc = -(&cf * g);
    let da = g * &a - &a * g;
    let dcf = crate::core_algebra::flat_full(&dc);
    let cflat = crate::core_algebra::flat_full(&cf);
    let inner = da + (dcf * &cf + cflat * &dc).scale(0.5);
    let domega = (j_matrix(sys.n()) * inner) * c(0.0, 1.0);
    Ok(TangentData {
        dc: DoubledUp::from_full(&dc, 1e-8)?,
        domega: DoubledUp::project(&linalg::hermitian_part(&domega)),
    })
}

/// QFI rate from the stationary state: solve `A^dag B + B A + X = 0` with
/// `X = Omega'/2 + Im(C'^dag J C)/2`, set `D = C' + i C J 2B` and evaluate
/// `f = 4 E[a^dag D^dag J V J D a]` with the stationary covariance.
pub fn stationary_qfi_rate_time<F: ParamFamily + ?Sized>(family: &F, theta0: f64, v: &InputCovariance) -> Result<QFIReport> {
    let sys = family.system(theta0)?;
    check_stationary_input(&sys, v)?;
    let td = family.tangent(theta0)?;
    let (n, m) = (sys.n(), sys.m());
    let jn = j_matrix(n);
    let jm = j_matrix(m);
    let cf = sys.c().to_full();
    let dc = td.dc.to_full();
    let a = sys.drift().to_full();
    let z = dc.adjoint() * &jm * &cf;
    let x = td.domega.to_full().scale(0.5) + (&z - z.adjoint()) * c(0.0, -0.25);
    let b = linalg::lyapunov(&a.adjoint(), &x)?;
    let b_res = max_abs(&(a.adjoint() * &b + &b * &a + &x)) / linalg::scale_of(&x).max(1e-300);
    let d = &dc + (&cf * &jn * b.scale(2.0)) * c(0.0, 1.0);
    let p = solve_lyapunov(&sys, v)?.p;
    let veff = effective_input(&sys, v);
    let k = d.adjoint() * &jm * veff * &jm * &d;
    let val = (k * (p - &jn)).trace().scale(4.0);
    Ok(QFIReport::new(val.re, QfiMethod::StationaryTime)
        .with("b_residual", b_res)
        .with("imag_part", val.im)
        .with("d_norm", max_abs(&d)))
}

/// `-Tr(J Psi' J Psi')` at one frequency from systems at `theta0 +- h`.
fn freq_density(sp: &QLSystem, sm: &QLSystem, v: &InputCovariance, h: f64, jm: &CMatrix, w: f64) -> Result<(f64, f64)> {
    let s = c(0.0, -w);
    let dpsi = (power_spectrum(sp, v, s)? - power_spectrum(sm, v, s)?).scale(0.5 / h);
    let f = -(jm * &dpsi * jm * &dpsi).trace().re;
    Ok((f, dpsi.norm_squared()))
}

/// QFI rate as `(1/2pi) int -Tr(J Psi'(w) J Psi'(w)) dw`, with `Psi'` from
/// central differences over the family. `grid` adds quadrature breakpoints
/// (frequencies) to the pole-derived ones.
pub fn stationary_qfi_rate_freq<F: ParamFamily + ?Sized>(
    family: &F,
    theta0: f64,
    v: &InputCovariance,
    grid: &[f64],
) -> Result<QFIReport> {
    let sys = family.system(theta0)?;
    check_stationary_input(&sys, v)?;
    let h = family.fd_step(theta0);
    let sp = family.system(theta0 + h)?;
    let sm = family.system(theta0 - h)?;
    let jm = j_matrix(sys.m());
    let eig = sys.eigenvalues()?;
    let sigma = eig.iter().fold(0.0f64, |m, l| m.max(l.norm())).max(1e-12);
    let mut cuts: Vec<f64> = eig.iter().flat_map(|l| [l.im, -l.im]).collect();
    cuts.push(0.0);
    cuts.extend_from_slice(grid);

    let mut pilot = 0.0f64;
    let mut psi_scale = 1.0f64;
    for &w in &cuts {
        pilot = pilot.max(freq_density(&sp, &sm, v, h, &jm, w)?.1);
        psi_scale = psi_scale.max(max_abs(&power_spectrum(&sys, v, c(0.0, -w))?));
    }
    // differences of Psi carry roughly eps * |Psi| of rounding
    let noise = 1e3 * f64::EPSILON * psi_scale / h;
    let opts = QuadOptions { rel_tol: 1e-8, abs_tol: (1e-10 * pilot * sigma).max(noise * noise * sigma), max_intervals: 4000 };
    let q = integrate_real_line(|w| Ok(freq_density(&sp, &sm, v, h, &jm, w)?.0), sigma, &cuts, &opts)?;
    let k = 0.5 / std::f64::consts::PI;
    Ok(QFIReport::new(q.value * k, QfiMethod::StationaryFreq)
        .with("quadrature_error", q.error * k)
        .with("evaluations", q.evaluations as f64)
        .with("intervals", q.intervals as f64)
        .with("frequency_scale", sigma)
        .with("grid_points", grid.len() as f64))
}

/// `F = 4 |(dXi(-iw)/dtheta (alpha, conj alpha))_top|^2` for a coherent
/// input of amplitude `alpha` at frequency `w`. With `optimize_omega` the
/// largest value over `grid` is reported and `omega_opt` is set.
pub fn coherent_qfi<F: ParamFamily + ?Sized>(
    family: &F,
    theta0: f64,
    omega: f64,
    alpha: &CVector,
    optimize_omega: bool,
    grid: &[f64],
) -> Result<QFIReport> {
    let h = family.fd_step(theta0);
    let sp = family.system(theta0 + h)?;
    let sm = family.system(theta0 - h)?;
    let m = sp.m();
    if alpha.len() != m {
        return Err(QlsError::Dimension(format!("alpha has {} entries, system has {} channels", alpha.len(), m)));
    }
    let mut ad = CVector::zeros(2 * m);
    for i in 0..m {
        ad[i] = alpha[i];
        ad[m + i] = alpha[i].conj();
    }
    let at = |w: f64| -> Result<f64> {
        let s = c(0.0, -w);
        let dxi = (sp.transfer_function(s)? - sm.transfer_function(s)?).scale(0.5 / h);
        let out = dxi * &ad;
        Ok(4.0 * out.rows(0, m).norm_squared())
    };
    if !optimize_omega {
        return Ok(QFIReport::new(at(omega)?, QfiMethod::Coherent).with("omega", omega));
    }
    if grid.is_empty() {
        return Err(QlsError::Dimension("frequency optimization needs a non-empty grid".into()));
    }
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &w in grid {
        let f = at(w)?;
        if f > best.0 {
            best = (f, w);
        }
    }
    Ok(QFIReport::new(best.0, QfiMethod::Coherent).with("omega_opt", best.1).with("grid_points", grid.len() as f64))
}

/// Squeezed-coherent SISO QFI `|lambda'|^2 (|alpha|^2 e^{2r} + sinh^2 r)`
/// for an arbitrary split of the energy.
pub fn squeezed_coherent_qfi_split(dlambda: f64, coherent_energy: f64, squeezing_energy: f64) -> QFIReport {
    let r = squeezing_energy.max(0.0).sqrt().asinh();
    let v = dlambda * dlambda * (coherent_energy * (2.0 * r).exp() + squeezing_energy);
    QFIReport::new(v, QfiMethod::SqueezedCoherent).with("r", r)
}

/// Equal split `|alpha|^2 = sinh^2 r = E/2`.
pub fn squeezed_coherent_qfi(dlambda: f64, energy: f64) -> Result<QFIReport> {
    if !(energy > 0.0) {
        return Err(QlsError::Unsupported(format!("energy must be positive, got {}", energy)));
    }
    let rep = squeezed_coherent_qfi_split(dlambda, energy / 2.0, energy / 2.0);
    Ok(rep.with("leading", dlambda * dlambda * energy * energy))
}

/// MIMO bound `E^2 |L|^2` with the spectral norm.
pub fn squeezed_coherent_qfi_mimo(l: &CMatrix, energy: f64) -> Result<QFIReport> {
    if !(energy > 0.0) {
        return Err(QlsError::Unsupported(format!("energy must be positive, got {}", energy)));
    }
    let norm = linalg::singular_values(l).into_iter().fold(0.0f64, f64::max);
    Ok(QFIReport::new(energy * energy * norm * norm, QfiMethod::SqueezedCoherent).with("spectral_norm", norm))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoonBounds {
    pub trace_cr_strategy1: f64,
    pub trace_cr_strategy2_min: f64,
    pub alpha_opt: f64,
    pub h: f64,
    pub k: f64,
    pub det: f64,
    /// `strategy1 / strategy2_min`.
    pub ratio: f64,
}

fn cofactor(j: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    let d = j.nrows();
    if d == 1 {
        return nalgebra::DMatrix::from_element(1, 1, 1.0);
    }
    nalgebra::DMatrix::from_fn(d, d, |r, cidx| {
        let minor = j.clone().remove_row(r).remove_column(cidx);
        let sign = if (r + cidx) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

/// Cramer-Rao traces of the two N00N strategies for `d` phases with
/// Jacobian `J = d lambda / d theta` and `N` photons.
pub fn multiparam_noon_bounds(j: &nalgebra::DMatrix<f64>, n_photons: f64) -> Result<NoonBounds> {
    let d = j.nrows();
    if d == 0 || j.ncols() != d {
        return Err(QlsError::Dimension("Jacobian must be square and non-empty".into()));
    }
    let det = j.determinant();
    let scale = j.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    if det.abs() <= 1e-12 * scale.powi(d as i32) {
        return Err(QlsError::Identification("Jacobian is singular: parameters are not identifiable".into()));
    }
    let p = cofactor(j);
    let h = p.norm_squared();
    let mut k = 0.0;
    for r in 0..d {
        for l in 0..d {
            for m in 0..d {
                k += (p[(r, l)] - p[(r, m)]).powi(2);
            }
        }
    }
    k *= 0.5;
    let df = d as f64;
    let n2j2 = n_photons * n_photons * det * det;
    let s1 = df * df * h / n2j2;
    let disc = (df * h * (df * h - k)).max(0.0);
    let s2 = (2.0 * df * h - k + 2.0 * disc.sqrt()) / (4.0 * n2j2);
    let alpha_opt = if k.abs() <= 1e-12 * df * h { 1.0 / (2.0 * df) } else { (df * h - disc.sqrt()) / (df * k) };
    Ok(NoonBounds { trace_cr_strategy1: s1, trace_cr_strategy2_min: s2, alpha_opt, h, k, det, ratio: s1 / s2 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleProfile {
    pub omegas: Vec<f64>,
    pub f_values: Vec<f64>,
    /// Both maximizers of `f^2`, `-kappa/2` then `kappa/2`.
    pub omega_opt: [f64; 2],
    pub f_opt_sq: f64,
    /// Grid point with the largest `f^2` (first on ties).
    pub grid_argmax: f64,
}

/// `f(w) = 2 kappa w / (w^2 + kappa^2/4)` on a frequency grid.
pub fn ensemble_coupling_profile(kappa: f64, grid: &[f64]) -> Result<EnsembleProfile> {
    if !(kappa > 0.0) {
        return Err(QlsError::Unsupported(format!("kappa must be positive, got {}", kappa)));
    }
    let f = |w: f64| 2.0 * kappa * w / (w * w + kappa * kappa / 4.0);
    let f_values: Vec<f64> = grid.iter().map(|&w| f(w)).collect();
    let mut grid_argmax = f64::NAN;
    let mut best = f64::NEG_INFINITY;
    for (&w, &v) in grid.iter().zip(&f_values) {
        if v * v > best {
            best = v * v;
            grid_argmax = w;
        }
    }
    let w_opt = kappa / 2.0;
    Ok(EnsembleProfile { omegas: grid.to_vec(), f_values, omega_opt: [-w_opt, w_opt], f_opt_sq: f(w_opt).powi(2), grid_argmax })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub coupling: f64,
    pub tau: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log f` against `log tau`; `None` unless every
    /// `f` is positive and at least two distinct `tau` are present.
    pub slope: Option<f64>,
}

impl ScalingTable {
    pub fn to_csv(&self) -> String {
        let slope = self.slope.map(|s| format!("{:.12e}", s)).unwrap_or_else(|| "nan".into());
        let mut out = String::from("coupling,tau,f,slope_fit\n");
        for r in &self.rows {
            out.push_str(&format!("{:.12e},{:.12e},{:.12e},{}\n", r.coupling, r.tau, r.f, slope));
        }
        out
    }
}

fn loglog_slope(rows: &[ScalingRow]) -> Option<f64> {
    if rows.len() < 2 || rows.iter().any(|r| !(r.f > 0.0) || !(r.tau > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.tau.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.f.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Stationary QFI rate against the slowest time scale `tau = 1/gap` as the
/// coupling is weakened. `make(coupling)` builds the family.
pub fn destabilized_scaling_check<P, M>(make: M, couplings: &[f64], theta0: f64, v: &InputCovariance) -> Result<ScalingTable>
where
    P: ParamFamily,
    M: Fn(f64) -> Result<P>,
{
    let mut rows = Vec::with_capacity(couplings.len());
    for &cp in couplings {
        let fam = make(cp)?;
        let sys = fam.system(theta0)?;
        let gap = spectral_gap(&sys)?;
        if !(gap > 0.0) {
            return Err(QlsError::NotHurwitz(format!("coupling {} gives no spectral gap", cp)));
        }
        let f = stationary_qfi_rate_time(&fam, theta0, v)?.value;
        rows.push(ScalingRow { coupling: cp, tau: 1.0 / gap, f });
    }
    let slope = loglog_slope(&rows);
    Ok(ScalingTable { rows, slope })
}
