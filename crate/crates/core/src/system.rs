//! The `(S, C, Omega)` system model, realizability and system-theoretic
//! checks, transfer functions, gauge transformations and network
//! composition.

use crate::core_algebra::{flat_full, is_symplectic, j_matrix, DoubledUp};
use crate::error::{QlsError, Result};
use crate::linalg::{self, c, eye, max_abs, scale_of, zeros, CMatrix, C64, I};
use crate::Tolerances;

/// A quantum linear system with `n` modes and `m` field channels.
#[derive(Debug, Clone, PartialEq)]
pub struct QLSystem {
    s: DoubledUp,
    c: DoubledUp,
    omega: DoubledUp,
}

impl QLSystem {
    pub fn new(s: DoubledUp, c: DoubledUp, omega: DoubledUp) -> Result<Self> {
        let (m, n) = (c.n_out(), c.n_in());
        if !s.is_square() || s.n_out() != m {
            return Err(QlsError::Dimension(format!("S is {}x{} for {} channels", s.n_out(), s.n_in(), m)));
        }
        if !omega.is_square() || omega.n_out() != n {
            return Err(QlsError::Dimension(format!(
                "Omega is {}x{} for {} modes",
                omega.n_out(),
                omega.n_in(),
                n
            )));
        }
        let om = omega.to_full();
        if !linalg::is_hermitian(&om, 1e-10) {
            return Err(QlsError::Structure("Omega_- must be Hermitian and Omega_+ symmetric".into()));
        }
        if !is_symplectic(&s.to_full(), 1e-8)? {
            return Err(QlsError::NotSymplectic("field scattering S".into()));
        }
        let omega = DoubledUp::project(&linalg::hermitian_part(&om));
        Ok(QLSystem { s, c, omega })
    }

    /// System with trivial field scattering `S = I`.
    pub fn with_coupling(c: DoubledUp, omega: DoubledUp) -> Result<Self> {
        let m = c.n_out();
        QLSystem::new(DoubledUp::identity(m), c, omega)
    }

    /// Recover `Omega = i J (A + C^flat C / 2)` from a drift matrix that
    /// satisfies physical realizability with `C`.
    pub fn from_drift(s: DoubledUp, c: DoubledUp, a: &DoubledUp, tol: f64) -> Result<Self> {
        if !a.is_square() || a.n_out() != c.n_in() {
            return Err(QlsError::Dimension("drift and coupling sizes differ".into()));
        }
        if !check_pr(a, &c, tol) {
            return Err(QlsError::NotPhysical(format!(
                "physical realizability residual {:.3e}",
                pr_residual(a, &c)
            )));
        }
        let n = a.n_out();
        let j = j_matrix(n);
        let cf = c.to_full();
        let inner = a.to_full() + (flat_full(&cf) * &cf).scale(0.5);
        let om = (j * inner) * I;
        let omega = DoubledUp::project(&linalg::hermitian_part(&om));
        QLSystem::new(s, c, omega)
    }

    /// Empty-cavity `(sqrt(kappa), omega0)` with vacuum scattering.
    pub fn cavity(kappa: f64, omega0: f64) -> Self {
        let c = DoubledUp::passive(linalg::real_matrix(1, 1, &[kappa.sqrt()]));
        let om = DoubledUp::passive(linalg::real_matrix(1, 1, &[omega0]));
        QLSystem::with_coupling(c, om).expect("cavity is valid")
    }

    /// Degenerate parametric amplifier with damping `kappa`, pump `eps`.
    pub fn dpa(kappa: f64, eps: f64) -> Self {
        let cp = DoubledUp::passive(linalg::real_matrix(1, 1, &[kappa.sqrt()]));
        let om = DoubledUp::new(zeros(1, 1), linalg::from_rows(&[vec![c(0.0, eps / 2.0)]])).unwrap();
        QLSystem::with_coupling(cp, om).expect("DPA is valid")
    }

    /// No modes, identity scattering on `m` channels.
    pub fn identity(m: usize) -> Self {
        QLSystem { s: DoubledUp::identity(m), c: DoubledUp::zeros(m, 0), omega: DoubledUp::zeros(0, 0) }
    }

    pub fn s(&self) -> &DoubledUp {
        &self.s
    }

    pub fn c(&self) -> &DoubledUp {
        &self.c
    }

    pub fn omega(&self) -> &DoubledUp {
        &self.omega
    }

    pub fn n(&self) -> usize {
        self.c.n_in()
    }

    pub fn m(&self) -> usize {
        self.c.n_out()
    }

    pub fn is_passive(&self, tol: f64) -> bool {
        self.c.is_passive(tol) && self.omega.is_passive(tol) && self.s.is_passive(tol)
    }

    /// `A = -C^flat C / 2 - i J Omega`.
    pub fn drift(&self) -> DoubledUp {
        let j = j_matrix(self.n());
        let cf = self.c.to_full();
        let a = (flat_full(&cf) * &cf).scale(-0.5) - (j * self.omega.to_full()) * I;
        DoubledUp::project(&a)
    }

    /// Input matrix `B = -C^flat S` of the state-space form.
    pub fn input_matrix(&self) -> DoubledUp {
        -&(&self.c.flat() * &self.s)
    }

    pub fn state_space(&self) -> StateSpace {
        StateSpace {
            a: self.drift().to_full(),
            b: self.input_matrix().to_full(),
            c: self.c.to_full(),
            d: self.s.to_full(),
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        linalg::eigenvalues(&self.drift().to_full())
    }

    /// `Xi(s) = (I - C (sI - A)^{-1} C^flat) S`.
    pub fn transfer_function(&self, s: C64) -> Result<CMatrix> {
        self.state_space().eval(s)
    }

    pub fn with_scattering(&self, s: DoubledUp) -> Result<Self> {
        QLSystem::new(s, self.c.clone(), self.omega.clone())
    }
}

/// Classical state-space quadruple with `G(s) = D + C (sI - A)^{-1} B`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
}

impl StateSpace {
    pub fn new(a: CMatrix, b: CMatrix, c: CMatrix, d: CMatrix) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(QlsError::Dimension(format!(
                "state space A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn eval(&self, s: C64) -> Result<CMatrix> {
        let n = self.order();
        if n == 0 {
            return Ok(self.d.clone());
        }
        let res = eye(n) * s - &self.a;
        let scale = scale_of(&self.a).max(s.norm());
        let smin = linalg::singular_values(&res).last().copied().unwrap_or(0.0);
        if smin <= 1e-13 * scale {
            return Err(QlsError::Pole(format!("s = {} is on the spectrum", s)));
        }
        let x = linalg::solve(&res, &self.b).map_err(|_| QlsError::Pole(format!("s = {}", s)))?;
        Ok(&self.d + &self.c * x)
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        linalg::eigenvalues(&self.a)
    }

    pub fn is_minimal(&self, rank_tol: f64) -> bool {
        let n = self.order();
        linalg::rank(&controllability_matrix(&self.a, &self.b), rank_tol) == n
            && linalg::rank(&observability_matrix(&self.c, &self.a), rank_tol) == n
    }
}

pub fn drift_matrix(sys: &QLSystem) -> DoubledUp {
    sys.drift()
}

pub fn pr_residual(a: &DoubledUp, c: &DoubledUp) -> f64 {
    let r = &(a + &a.flat()) + &(&c.flat() * c);
    r.max_abs()
}

/// `A + A^flat + C^flat C = 0` to `tol`, relative to the size of the terms.
pub fn check_pr(a: &DoubledUp, c: &DoubledUp, tol: f64) -> bool {
    if a.n_out() != c.n_in() || !a.is_square() {
        return false;
    }
    let scale = a.max_abs().max(c.max_abs().powi(2)).max(1.0);
    pr_residual(a, c) <= tol * scale
}

pub fn transfer_function(sys: &QLSystem, s: C64) -> Result<CMatrix> {
    sys.transfer_function(s)
}

// Powers of A are normalized by its size so the rank cutoff is not swamped.
fn normalized_power_blocks(a: &CMatrix) -> CMatrix {
    let k = scale_of(a);
    a.unscale(k)
}

pub fn controllability_matrix(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let an = normalized_power_blocks(a);
    let mut blocks = b.clone();
    let mut cur = b.clone();
    for _ in 1..n {
        cur = &an * cur;
        blocks = linalg::hstack(&blocks, &cur);
    }
    blocks
}

pub fn observability_matrix(c: &CMatrix, a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let an = normalized_power_blocks(a);
    let mut blocks = c.clone();
    let mut cur = c.clone();
    for _ in 1..n {
        cur *= &an;
        blocks = linalg::vstack(&blocks, &cur);
    }
    blocks
}

/// Observability of `(C, A)`; for physically realizable systems this is
/// equivalent to controllability.
pub fn is_minimal(sys: &QLSystem, rank_tol: f64) -> bool {
    let n = 2 * sys.n();
    if n == 0 {
        return true;
    }
    linalg::rank(&observability_matrix(&sys.c.to_full(), &sys.drift().to_full()), rank_tol) == n
}

pub fn is_hurwitz(sys: &QLSystem, stab_tol: f64) -> Result<bool> {
    Ok(sys.eigenvalues()?.iter().all(|l| l.re < -stab_tol))
}

/// Smallest `|Re(lambda)|` over the drift spectrum; infinite without modes.
pub fn spectral_gap(sys: &QLSystem) -> Result<f64> {
    Ok(sys.eigenvalues()?.iter().fold(f64::INFINITY, |m, l| m.min(l.re.abs())))
}

/// `first` feeds `second`; the composite transfer function is
/// `Xi_second(s) Xi_first(s)`.
pub fn series_product(first: &QLSystem, second: &QLSystem) -> Result<QLSystem> {
    if first.m() != second.m() {
        return Err(QlsError::Dimension(format!(
            "series product of {} and {} channels",
            first.m(),
            second.m()
        )));
    }
    let (n1, n2) = (first.n(), second.n());
    let a1 = first.drift();
    let a2 = second.drift();
    let k = -&(&(&second.c.flat() * &second.s) * &first.c);
    let top = a1.hstack(&DoubledUp::zeros(n1, n2));
    let bottom = k.hstack(&a2);
    let a = top.vstack(&bottom);
    let c = (&second.s * &first.c).hstack(&second.c);
    let s = &second.s * &first.s;
    QLSystem::from_drift(s, c, &a, 1e-8)
}

/// Side-by-side systems on disjoint channels and modes.
pub fn concatenate(a: &QLSystem, b: &QLSystem) -> QLSystem {
    QLSystem { s: a.s.direct_sum(&b.s), c: a.c.direct_sum(&b.c), omega: a.omega.direct_sum(&b.omega) }
}

/// `C' = C T^flat`, `J Omega' = T J Omega T^flat`, `S` unchanged.
pub fn gauge_transform(sys: &QLSystem, t: &DoubledUp) -> Result<QLSystem> {
    let n = sys.n();
    if !t.is_square() || t.n_out() != n {
        return Err(QlsError::Dimension(format!("gauge transform must be {}x{} modes", n, n)));
    }
    if !is_symplectic(&t.to_full(), 1e-8)? {
        return Err(QlsError::NotSymplectic("gauge transform".into()));
    }
    let tf = t.flat();
    let c = &sys.c * &tf;
    let j = j_matrix(n);
    let om = &j * (t.to_full() * &j * sys.omega.to_full() * tf.to_full());
    let omega = DoubledUp::project(&linalg::hermitian_part(&om));
    QLSystem::new(sys.s.clone(), c, omega)
}

/// Largest entrywise deviation of the two transfer functions over `grid`.
pub fn tf_distance(a: &QLSystem, b: &QLSystem, grid: &[C64]) -> Result<f64> {
    if a.m() != b.m() {
        return Err(QlsError::Dimension("systems have different channel counts".into()));
    }
    let (sa, sb) = (a.state_space(), b.state_space());
    let mut worst = 0.0f64;
    for &s in grid {
        worst = worst.max(max_abs(&(sa.eval(s)? - sb.eval(s)?)));
    }
    Ok(worst)
}

pub fn tf_equal(a: &QLSystem, b: &QLSystem, grid: &[C64], tol: f64) -> Result<bool> {
    Ok(tf_distance(a, b, grid)? <= tol)
}

/// 41 log-spaced frequencies in `[1e-2 gap, 1e2 ||A||]` plus zero, returned as
/// points `s = -i omega` kept away from the drift spectrum.
pub fn default_grid(sys: &QLSystem) -> Result<Vec<C64>> {
    let eig = sys.eigenvalues()?;
    let gap = eig.iter().fold(f64::INFINITY, |m, l| m.min(l.re.abs()));
    let norm = sys.drift().max_abs();
    let lo = if gap.is_finite() && gap > 0.0 { 1e-2 * gap } else { 1e-2 };
    let hi = if norm > 0.0 { (1e2 * norm).max(10.0 * lo) } else { 1e2 };
    let mut omegas = vec![0.0];
    let count = 41;
    for k in 0..count {
        let t = k as f64 / (count - 1) as f64;
        omegas.push(lo * (hi / lo).powf(t));
    }
    let mut grid = Vec::with_capacity(omegas.len());
    for mut w in omegas {
        for _ in 0..20 {
            if eig.iter().all(|l| (l - c(0.0, -w)).norm() > 1e-6) {
                break;
            }
            w = if w == 0.0 { 1e-3 * lo.max(1e-6) } else { w * 1.001 };
        }
        grid.push(c(0.0, -w));
    }
    Ok(grid)
}

/// Finite-difference derivatives of a family at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentData {
    pub dc: DoubledUp,
    pub domega: DoubledUp,
}

/// A one-parameter family of systems `theta -> (S, C(theta), Omega(theta))`.
pub trait ParamFamily {
    fn system(&self, theta: f64) -> Result<QLSystem>;

    fn fd_step(&self, theta: f64) -> f64 {
        1e-6 * theta.abs().max(1.0)
    }

    /// Central differences unless the family knows its derivative.
    fn tangent(&self, theta: f64) -> Result<TangentData> {
        let h = self.fd_step(theta);
        let p = self.system(theta + h)?;
        let q = self.system(theta - h)?;
        if max_abs(&(p.s.to_full() - q.s.to_full())) > 1e-12 {
            return Err(QlsError::Unsupported("field scattering must not depend on the parameter".into()));
        }
        let k = 0.5 / h;
        Ok(TangentData { dc: (&p.c - &q.c).scale(k), domega: (&p.omega - &q.omega).scale(k) })
    }
}

/// Family given by a closure.
pub struct FnFamily<F: Fn(f64) -> Result<QLSystem>>(pub F);

impl<F: Fn(f64) -> Result<QLSystem>> ParamFamily for FnFamily<F> {
    fn system(&self, theta: f64) -> Result<QLSystem> {
        (self.0)(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyTarget {
    C,
    Omega,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Minus,
    Plus,
}

/// `theta * coeff` added at `(row, col)` of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTerm {
    pub target: FamilyTarget,
    pub block: Block,
    pub row: usize,
    pub col: usize,
    pub coeff: C64,
}

/// `system(theta) = base + theta * sum(terms)`. Omega terms are completed
/// to keep `Omega_-` Hermitian and `Omega_+` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFamily {
    pub base: QLSystem,
    pub terms: Vec<AffineTerm>,
}

impl AffineFamily {
    pub fn new(base: QLSystem, terms: Vec<AffineTerm>) -> Result<Self> {
        for t in &terms {
            let (r, cc) = match t.target {
                FamilyTarget::C => (base.m(), base.n()),
                FamilyTarget::Omega => (base.n(), base.n()),
            };
            if t.row >= r || t.col >= cc {
                return Err(QlsError::Dimension(format!("family term at ({}, {}) outside {}x{}", t.row, t.col, r, cc)));
            }
            if t.target == FamilyTarget::Omega && t.block == Block::Minus && t.row == t.col && t.coeff.im != 0.0 {
                return Err(QlsError::Structure("diagonal Omega_- coefficients must be real".into()));
            }
        }
        Ok(AffineFamily { base, terms })
    }

    fn direction(&self) -> (DoubledUp, DoubledUp) {
        let (m, n) = (self.base.m(), self.base.n());
        let mut c_blocks = [zeros(m, n), zeros(m, n)];
        let mut o_blocks = [zeros(n, n), zeros(n, n)];
        for t in &self.terms {
            let b = match t.block {
                Block::Minus => 0,
                Block::Plus => 1,
            };
            match t.target {
                FamilyTarget::C => c_blocks[b][(t.row, t.col)] += t.coeff,
                FamilyTarget::Omega => {
                    o_blocks[b][(t.row, t.col)] += t.coeff;
                    if t.row != t.col {
                        let mirror = if b == 0 { t.coeff.conj() } else { t.coeff };
                        o_blocks[b][(t.col, t.row)] += mirror;
                    }
                }
            }
        }
        let [cm, cp] = c_blocks;
        let [om, op] = o_blocks;
        (DoubledUp::new(cm, cp).unwrap(), DoubledUp::new(om, op).unwrap())
    }
}

impl ParamFamily for AffineFamily {
    fn system(&self, theta: f64) -> Result<QLSystem> {
        let (dc, dom) = self.direction();
        QLSystem::new(
            self.base.s.clone(),
            &self.base.c + &dc.scale(theta),
            &self.base.omega + &dom.scale(theta),
        )
    }

    fn tangent(&self, _theta: f64) -> Result<TangentData> {
        let (dc, domega) = self.direction();
        Ok(TangentData { dc, domega })
    }
}

/// Default tolerances as a convenience for call sites.
pub fn tol() -> Tolerances {
    Tolerances::default()
}
