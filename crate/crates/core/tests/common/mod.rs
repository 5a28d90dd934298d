#![allow(dead_code)]

use qls::linalg::{c, from_rows, real_matrix};
use qls::system::{is_hurwitz, is_minimal, spectral_gap};
use qls::{DoubledUp, InputCovariance, QLSystem, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cplx(r: &mut ChaCha8Rng, scale: f64) -> C64 {
    c(r.random_range(-1.0..1.0) * scale, r.random_range(-1.0..1.0) * scale)
}

fn cmat(r: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> qls::CMatrix {
    qls::CMatrix::from_fn(rows, cols, |_, _| cplx(r, scale))
}

/// Random doubled-up Hamiltonian: Hermitian minus block, symmetric plus.
pub fn random_hamiltonian(r: &mut ChaCha8Rng, n: usize, active: f64) -> DoubledUp {
    let h = cmat(r, n, n, 2.0);
    let k = cmat(r, n, n, active);
    DoubledUp::new((&h + h.adjoint()).scale(0.5), (&k + k.transpose()).scale(0.5)).unwrap()
}

/// Random PR system with `n` modes and `m` channels: Hurwitz with a gap of
/// at least 0.05, minimal, and no drift eigenvalue near the real axis (the
/// realization routines reject real poles). Draws until all hold.
pub fn random_system(r: &mut ChaCha8Rng, n: usize, m: usize) -> QLSystem {
    loop {
        let cm = cmat(r, m, n, 1.5);
        let cp = cmat(r, m, n, 0.5);
        let cc = DoubledUp::new(cm, cp).unwrap();
        let om = random_hamiltonian(r, n, 0.4);
        let sys = QLSystem::with_coupling(cc, om).unwrap();
        let off_axis = sys.eigenvalues().unwrap().iter().all(|l| l.im.abs() > 1e-3 * l.norm().max(1.0));
        if off_axis && is_hurwitz(&sys, 1e-12).unwrap() && spectral_gap(&sys).unwrap() > 0.05 && is_minimal(&sys, 1e-8) {
            return sys;
        }
    }
}

/// Seeded suite of PR systems with 1-4 modes and 1-2 channels.
pub fn suite(count: usize, seed: u64) -> Vec<QLSystem> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let n = r.random_range(1..=4);
            let m = r.random_range(1..=2);
            random_system(&mut r, n, m)
        })
        .collect()
}

/// Random symplectic `exp(i J 2R)` for a Hermitian doubled-up `R`.
pub fn random_symplectic(r: &mut ChaCha8Rng, n: usize, size: f64) -> DoubledUp {
    let g = random_hamiltonian(r, n, size).scale(size / 2.0);
    let gen = (DoubledUp::j(n) * g.to_full()).scale(2.0) * c(0.0, 1.0);
    DoubledUp::from_full(&gen.exp(), 1e-8).unwrap()
}

/// Pure squeezed input on each of `m` channels.
pub fn squeezed_input(m: usize, r: f64) -> InputCovariance {
    let n = r.sinh().powi(2);
    let mm = r.sinh() * r.cosh();
    let nd: Vec<f64> = (0..m * m).map(|k| if k % (m + 1) == 0 { n } else { 0.0 }).collect();
    let md: Vec<f64> = (0..m * m).map(|k| if k % (m + 1) == 0 { mm } else { 0.0 }).collect();
    InputCovariance::new(real_matrix(m, m, &nd), real_matrix(m, m, &md)).unwrap()
}

/// Two-mode system with an exactly PR drift, full doubled-up form.
pub fn two_mode_absorber_example() -> QLSystem {
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

/// One-mode system with mixed stationary state under vacuum input.
pub fn god1() -> QLSystem {
    let cc = DoubledUp::new(real_matrix(1, 1, &[7.0]), real_matrix(1, 1, &[-1.0])).unwrap();
    let om = DoubledUp::new(real_matrix(1, 1, &[2.0]), from_rows(&[vec![c(0.0, 1.0)]])).unwrap();
    QLSystem::with_coupling(cc, om).unwrap()
}

/// Two passive modes behind one channel; `x` sets the mode splitting.
pub fn gm2(x: f64) -> QLSystem {
    let cc = DoubledUp::passive(from_rows(&[vec![c(0.0, 0.0), c(2.0 * 2f64.sqrt(), 0.0)]]));
    let om = DoubledUp::passive(real_matrix(2, 2, &[(4.0 + x) / 2.0, (4.0 - x) / 2.0, (4.0 - x) / 2.0, (4.0 + x) / 2.0]));
    QLSystem::with_coupling(cc, om).unwrap()
}

/// Two-mode SISO system `C_- = (8, 12)`, `C_+ = (0, -1)`.
pub fn ordert() -> QLSystem {
    let i = c(0.0, 1.0);
    let cc = DoubledUp::new(real_matrix(1, 2, &[8.0, 12.0]), real_matrix(1, 2, &[0.0, -1.0])).unwrap();
    let om = DoubledUp::new(
        real_matrix(2, 2, &[6.0, -1.0, -1.0, 2.0]),
        from_rows(&[vec![c(0.0, 0.0), i], vec![i, c(0.0, 0.0)]]),
    )
    .unwrap();
    QLSystem::with_coupling(cc, om).unwrap()
}

/// Frequencies `s = -i w` on a symmetric grid.
pub fn axis_grid(count: usize, half_width: f64) -> Vec<C64> {
    (0..count)
        .map(|k| {
            let w = -half_width + 2.0 * half_width * k as f64 / (count - 1) as f64;
            c(0.0, -w)
        })
        .collect()
}
