//! Adaptive Gauss-Kronrod integration over the real line.

use crate::error::{QlsError, Result};
use std::f64::consts::FRAC_PI_2;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    /// Integral of `|f|`, used to judge cancellation.
    pub abs_value: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-9, abs_tol: 0.0, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

fn kronrod<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<Piece> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    let mut abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x)?;
        let f2 = f(center + x)?;
        kron += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Piece {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
        abs_value: abs * half.abs(),
    })
}

/// Globally adaptive 7-15 point Gauss-Kronrod on `[a, b]`, starting from
/// the given interior breakpoints.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<Quadrature> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|x| *x > a && *x < b && x.is_finite()).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (b - a));
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);
    let mut pieces = Vec::with_capacity(edges.len());
    for w in edges.windows(2) {
        pieces.push(kronrod(&mut f, w[0], w[1])?);
    }
    let mut evals = 15 * pieces.len();
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        let abs_value: f64 = pieces.iter().map(|p| p.abs_value).sum();
        let target = (opts.rel_tol * value.abs()).max(opts.abs_tol);
        let summary = Quadrature { value, error, abs_value, evaluations: evals, intervals: pieces.len() };
        if error <= target {
            return Ok(summary);
        }
        if pieces.len() >= opts.max_intervals {
            return Err(QlsError::Accuracy(format!(
                "quadrature stopped at {} intervals: value {:.6e}, error estimate {:.3e}",
                pieces.len(),
                value,
                error
            )));
        }
        // bisect the worst piece; ties resolved by position for determinism
        let (k, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p.error > best.1 { (i, p.error) } else { best });
        let p = pieces[k];
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(QlsError::Accuracy(format!(
                "quadrature interval collapsed near {:.6e}: value {:.6e}, error estimate {:.3e}",
                mid, value, error
            )));
        }
        let left = kronrod(&mut f, p.a, mid)?;
        let right = kronrod(&mut f, mid, p.b)?;
        evals += 30;
        pieces[k] = left;
        pieces.insert(k + 1, right);
    }
}

/// `int_{-inf}^{inf} f(w) dw` through `w = sigma tan(t)`. The map sends a
/// `1/w^2` tail to a bounded integrand, so no truncation is needed.
/// `breakpoints` are frequencies where `f` has structure (peaks).
pub fn integrate_real_line<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    sigma: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<Quadrature> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(QlsError::Unsupported(format!("frequency scale must be positive, got {}", sigma)));
    }
    let cuts: Vec<f64> = breakpoints.iter().map(|w| (w / sigma).atan()).collect();
    integrate(
        |t| {
            let c = t.cos();
            Ok(f(sigma * t.tan())? * sigma / (c * c))
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        &cuts,
        opts,
    )
}
