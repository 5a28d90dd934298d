//! Rational matrix functions in partial-fraction form.

use crate::error::{QlsError, Result};
use crate::linalg::{self, c, max_abs, zeros, CMatrix, C64};
use crate::system::StateSpace;

/// `f(s) = constant + sum_k residues[k] / (s - poles[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrixFunction {
    pub constant: CMatrix,
    pub poles: Vec<C64>,
    pub residues: Vec<CMatrix>,
}

impl RationalMatrixFunction {
    pub fn new(constant: CMatrix, poles: Vec<C64>, residues: Vec<CMatrix>) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(QlsError::Dimension(format!("{} poles but {} residues", poles.len(), residues.len())));
        }
        if residues.iter().any(|r| r.shape() != constant.shape()) {
            return Err(QlsError::Dimension("residue and constant shapes differ".into()));
        }
        Ok(RationalMatrixFunction { constant, poles, residues })
    }

    pub fn scalar(constant: C64, poles: Vec<C64>, residues: Vec<C64>) -> Result<Self> {
        let one = |z: C64| CMatrix::from_element(1, 1, z);
        RationalMatrixFunction::new(one(constant), poles, residues.into_iter().map(one).collect())
    }

    /// Scalar function `num(s) / den(s)` from coefficients, highest degree
    /// first. Requires a proper function with simple poles.
    pub fn from_polynomials(num: &[C64], den: &[C64]) -> Result<Self> {
        let den = trim(den);
        let num = trim(num);
        if den.is_empty() {
            return Err(QlsError::Dimension("empty denominator".into()));
        }
        if num.len() > den.len() {
            return Err(QlsError::Unsupported("improper rational function".into()));
        }
        let lead = den[0];
        let den: Vec<C64> = den.iter().map(|z| z / lead).collect();
        let num: Vec<C64> = num.iter().map(|z| z / lead).collect();
        let constant = if num.len() == den.len() { num[0] } else { c(0.0, 0.0) };
        let poles = roots(&den)?;
        check_distinct(&poles)?;
        let dden = derivative(&den);
        let residues = poles.iter().map(|&p| horner(&num, p) / horner(&dden, p)).collect();
        RationalMatrixFunction::scalar(constant, poles, residues)
    }

    /// Partial fractions of `D + C (sI - A)^{-1} B` for diagonalizable `A`
    /// with distinct eigenvalues.
    pub fn from_state_space(ss: &StateSpace) -> Result<Self> {
        let poles = ss.eigenvalues()?;
        check_distinct(&poles)?;
        let mut residues = Vec::with_capacity(poles.len());
        for &p in &poles {
            let v = linalg::eigenvector(&ss.a, p);
            let w = linalg::eigenvector(&ss.a.adjoint(), p.conj());
            let denom = w.dotc(&v);
            if denom.norm() < 1e-12 {
                return Err(QlsError::Unsupported("non-semisimple drift".into()));
            }
            let r = (&ss.c * &v) * (w.adjoint() * &ss.b) / denom;
            residues.push(r);
        }
        RationalMatrixFunction::new(ss.d.clone(), poles, residues)
    }

    pub fn rows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn cols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn eval(&self, s: C64) -> Result<CMatrix> {
        let mut out = self.constant.clone();
        for (p, r) in self.poles.iter().zip(&self.residues) {
            let d = s - p;
            if d.norm() <= 1e-13 * p.norm().max(1.0) {
                return Err(QlsError::Pole(format!("s = {} is a pole", s)));
            }
            out += r / d;
        }
        Ok(out)
    }

    /// Keep only poles in the open left half plane.
    pub fn stable_part(&self) -> Self {
        let (poles, residues) = self
            .poles
            .iter()
            .zip(&self.residues)
            .filter(|(p, _)| p.re < 0.0)
            .map(|(p, r)| (*p, r.clone()))
            .unzip();
        RationalMatrixFunction { constant: self.constant.clone(), poles, residues }
    }

    /// Entry `(i, j)` as a scalar function.
    pub fn entry(&self, i: usize, j: usize) -> Self {
        let one = |z: C64| CMatrix::from_element(1, 1, z);
        RationalMatrixFunction {
            constant: one(self.constant[(i, j)]),
            poles: self.poles.clone(),
            residues: self.residues.iter().map(|r| one(r[(i, j)])).collect(),
        }
    }

    pub fn max_deviation(&self, other: &Self, grid: &[C64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &s in grid {
            worst = worst.max(max_abs(&(self.eval(s)? - other.eval(s)?)));
        }
        Ok(worst)
    }

    /// Frequency grid `s = -i omega` avoiding the poles, spread over the
    /// range of pole magnitudes.
    pub fn grid(&self, count: usize) -> Vec<C64> {
        let mags: Vec<f64> = self.poles.iter().map(|p| p.norm()).filter(|&m| m > 0.0).collect();
        let lo = mags.iter().fold(f64::INFINITY, |a, &b| a.min(b)).min(1.0) * 1e-2;
        let hi = mags.iter().fold(0.0f64, |a, &b| a.max(b)).max(1.0) * 1e2;
        let lo = if lo.is_finite() { lo } else { 1e-2 };
        (0..count)
            .map(|k| {
                let t = k as f64 / (count.max(2) - 1) as f64;
                let w = lo * (hi / lo).powf(t);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                c(0.0, -sign * w)
            })
            .collect()
    }
}

/// Residue at a known pole from evaluations at `p + eps e^{i theta}`,
/// averaged over four angles.
pub fn residue_by_limit(f: impl Fn(C64) -> Result<CMatrix>, pole: C64, eps: f64) -> Result<CMatrix> {
    let mut acc: Option<CMatrix> = None;
    for k in 0..4 {
        let th = std::f64::consts::FRAC_PI_4 + k as f64 * std::f64::consts::FRAC_PI_2;
        let d = C64::from_polar(eps, th);
        let term = f(pole + d)? * d;
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    Ok(acc.unwrap() / c(4.0, 0.0))
}

fn check_distinct(poles: &[C64]) -> Result<()> {
    let scale = poles.iter().fold(1.0f64, |m, p| m.max(p.norm()));
    for i in 0..poles.len() {
        for j in (i + 1)..poles.len() {
            if (poles[i] - poles[j]).norm() <= 1e-6 * scale {
                return Err(QlsError::Unsupported("repeated poles".into()));
            }
        }
    }
    Ok(())
}

fn trim(p: &[C64]) -> Vec<C64> {
    let start = p.iter().position(|z| z.norm() != 0.0).unwrap_or(p.len());
    p[start..].to_vec()
}

/// Horner evaluation, coefficients highest degree first.
pub fn horner(p: &[C64], s: C64) -> C64 {
    p.iter().fold(c(0.0, 0.0), |acc, &a| acc * s + a)
}

fn derivative(p: &[C64]) -> Vec<C64> {
    let deg = p.len().saturating_sub(1);
    p.iter().take(deg).enumerate().map(|(k, &a)| a * (deg - k) as f64).collect()
}

/// Roots of a monic polynomial (highest degree first) from its companion
/// matrix.
pub fn roots(p: &[C64]) -> Result<Vec<C64>> {
    let deg = p.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let mut comp = zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -p[j + 1] / p[0];
    }
    for i in 1..deg {
        comp[(i, i - 1)] = c(1.0, 0.0);
    }
    let mut r = linalg::eigenvalues(&comp)?;
    // one polishing Newton step, kept only when small and improving
    let dp = derivative(p);
    for z in r.iter_mut() {
        let d = horner(&dp, *z);
        if d.norm() == 0.0 {
            continue;
        }
        let cand = *z - horner(p, *z) / d;
        if (cand - *z).norm() <= 1e-6 * z.norm().max(1.0) && horner(p, cand).norm() < horner(p, *z).norm() {
            *z = cand;
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::QLSystem;

    #[test]
    fn polynomial_form_matches_partial_fractions() {
        // (s + 1) / (s^2 + 3 s + 2) = 1 / (s + 2)
        let f = RationalMatrixFunction::from_polynomials(
            &[c(1.0, 0.0), c(1.0, 0.0)],
            &[c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0)],
        )
        .unwrap();
        let s = c(0.3, 0.7);
        assert!((f.eval(s).unwrap()[(0, 0)] - 1.0 / (s + 2.0)).norm() < 1e-12);
    }

    #[test]
    fn state_space_partial_fractions() {
        let sys = QLSystem::cavity(2.0, 1.0);
        let f = RationalMatrixFunction::from_state_space(&sys.state_space()).unwrap();
        for s in f.grid(10) {
            assert!(max_abs(&(f.eval(s).unwrap() - sys.transfer_function(s).unwrap())) < 1e-12);
        }
    }

    #[test]
    fn limit_residue() {
        let f = RationalMatrixFunction::scalar(c(1.0, 0.0), vec![c(-1.0, 2.0)], vec![c(3.0, -1.0)]).unwrap();
        let r = residue_by_limit(|s| f.eval(s), c(-1.0, 2.0), 1e-5).unwrap();
        assert!((r[(0, 0)] - c(3.0, -1.0)).norm() < 1e-9);
    }

    #[test]
    fn repeated_poles_rejected() {
        let r = RationalMatrixFunction::from_polynomials(&[c(1.0, 0.0)], &[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(r, Err(QlsError::Unsupported(_))));
    }
}
