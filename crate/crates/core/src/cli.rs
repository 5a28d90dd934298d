//! Command-line front end. Results go to `--output` (or stdout) as JSON, or
//! CSV for sweeps; a one-line summary and any error object go to stderr.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::absorber::{dual_system, verify_absorber};
use crate::error::{QlsError, Result};
use crate::estimation::{
    cavity_detuning_family, coherent_qfi, destabilized_scaling_check, stationary_qfi_rate_freq, stationary_qfi_rate_time,
};
use crate::io::*;
use crate::linalg::{c, max_abs, CVector, C64};
use crate::realization::{
    gilbert_realize, modal_realize, noisy_realize, physical_from_classical, ps_realize, siso_cascade_identify, CascadeOptions,
    NoisyOptions, RationalMatrixFunction,
};
use crate::stationary::{is_globally_minimal, power_spectrum, pure_mixed_split, siso_passive_gm, solve_lyapunov, InputCovariance};
use crate::system::{
    check_pr, default_grid, is_hurwitz, is_minimal, pr_residual, spectral_gap, AffineFamily, ParamFamily, QLSystem,
};
use crate::Tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "qls", version, about = "Quantum linear systems toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Frequencies for grid evaluations: "auto" or a comma-separated list.
    #[arg(long, global = true, default_value = "auto")]
    pub grid: String,
    /// Input field covariance (JSON with "N" and "M"); vacuum by default.
    #[arg(long = "input", global = true)]
    pub input_cov: Option<PathBuf>,
    /// Suppress the summary line on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub structure_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub numeric_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub rank_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub stability_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub gm_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub pole_tol: f64,
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            structure: self.structure_tol,
            numeric: self.numeric_tol,
            rank: self.rank_tol,
            stability: self.stability_tol,
            global_minimality: self.gm_tol,
            pole: self.pole_tol,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Physical realizability, stability and minimality report.
    Validate { system: PathBuf },
    /// Transfer function on the grid.
    Tf { system: PathBuf },
    /// Power spectrum on the grid.
    Ps { system: PathBuf },
    /// Global minimality verdict and stationary symplectic spectrum.
    Gm { system: PathBuf },
    /// Split into pure and mixed parts.
    Split { system: PathBuf },
    /// Physical system from a doubled-up transfer function.
    RealizeTf { tf: PathBuf },
    /// Physical system from a power spectrum `Psi(s) J`.
    RealizePs { ps: PathBuf },
    /// Passive system with noise channels from its accessible block.
    RealizeNoisy {
        /// State space {"A","B","C","D"} or a transfer function.
        accessible: PathBuf,
        #[arg(long, default_value_t = 1)]
        noise: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cascade of one-mode stages from a SISO transfer function
    /// {"minus": tf, "plus": tf}.
    CascadeId {
        tf: PathBuf,
        /// Pole to peel first, "re,im"; repeat for later stages.
        #[arg(long = "first", value_parser = parse_complex)]
        first: Vec<C64>,
    },
    /// Coherent absorber of a globally minimal system.
    Absorber { system: PathBuf },
    /// Fisher information of a parameter family.
    Qfi {
        family: PathBuf,
        #[arg(long, value_enum, default_value_t = QfiKind::Time)]
        method: QfiKind,
        #[arg(long, default_value_t = 0.0)]
        theta0: f64,
        /// Probe frequency for the coherent method.
        #[arg(long, default_value_t = 0.0)]
        omega: f64,
        /// Coherent amplitudes, "re,im" per channel.
        #[arg(long, value_parser = parse_complex)]
        alpha: Vec<C64>,
        /// Maximize the coherent QFI over the grid.
        #[arg(long)]
        optimize_omega: bool,
    },
    /// QFI rate against the slowest time scale as the coupling is weakened;
    /// writes CSV.
    Sweep {
        /// Family whose couplings are scaled; the detuned cavity if omitted.
        family: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        couplings: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        theta0: f64,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiKind {
    Time,
    Freq,
    Coherent,
}

fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{}: {}", x, e));
    match parts.as_slice() {
        [re] => Ok(c(num(re)?, 0.0)),
        [re, im] => Ok(c(num(re)?, num(im)?)),
        _ => Err(format!("expected \"re\" or \"re,im\", got \"{}\"", s)),
    }
}

enum Output {
    Json(Value),
    Csv(String),
}

struct Done {
    output: Output,
    summary: String,
}

pub fn exit_code(e: &QlsError) -> i32 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_NUMERIC
    }
}

pub fn error_object(e: &QlsError) -> Value {
    json!({"error": {"kind": e.kind(), "message": e.to_string(), "exit_code": exit_code(e)}})
}

/// Parse arguments, run, write output; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli).and_then(|done| emit(&cli.common, done)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let obj = error_object(&e);
            eprintln!("{}", serde_json::to_string(&obj).expect("error object serializes"));
            exit_code(&e)
        }
    }
}

fn emit(common: &Common, done: Done) -> Result<()> {
    let text = match done.output {
        Output::Json(v) => serde_json::to_string_pretty(&v).expect("JSON values serialize") + "\n",
        Output::Csv(s) => s,
    };
    match &common.output {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| QlsError::Parse(format!("stdout: {}", e)))?;
        }
    }
    if !common.quiet {
        eprintln!("{}", done.summary);
    }
    Ok(())
}

/// Write through a temporary sibling and rename, so a failed run never
/// leaves a partial file behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| QlsError::Parse(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let io_err = |e: std::io::Error| QlsError::Parse(format!("{}: {}", path.display(), e));
    let result = std::fs::write(&tmp, bytes).and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}

fn load_system(path: &Path) -> Result<QLSystem> {
    system_from_json(&read_json(path)?)
}

fn load_input(common: &Common, m: usize) -> Result<InputCovariance> {
    let v = match &common.input_cov {
        Some(p) => covariance_from_json(&read_json(p)?)?,
        None => InputCovariance::vacuum(m),
    };
    if v.channels() != m {
        return Err(QlsError::Dimension(format!("input covariance has {} channels, system has {}", v.channels(), m)));
    }
    Ok(v)
}

/// Real frequencies from "--grid"; `None` for "auto".
fn explicit_frequencies(common: &Common) -> Result<Option<Vec<f64>>> {
    let g = common.grid.trim();
    if g.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    g.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| QlsError::Parse(format!("grid entry \"{}\": {}", x, e))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn system_grid(common: &Common, sys: &QLSystem) -> Result<Vec<C64>> {
    match explicit_frequencies(common)? {
        Some(ws) => Ok(ws.into_iter().map(|w| c(0.0, -w)).collect()),
        None => default_grid(sys),
    }
}

fn rmf_grid(common: &Common, f: &RationalMatrixFunction) -> Result<Vec<C64>> {
    match explicit_frequencies(common)? {
        Some(ws) => Ok(ws.into_iter().map(|w| c(0.0, -w)).collect()),
        None => Ok(f.grid(20)),
    }
}

fn tf_deviation(sys: &QLSystem, f: &RationalMatrixFunction, grid: &[C64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &s in grid {
        worst = worst.max(max_abs(&(sys.transfer_function(s)? - f.eval(s)?)));
    }
    Ok(worst)
}

fn dispatch(cli: &Cli) -> Result<Done> {
    let common = &cli.common;
    let tol = common.tolerances();
    match &cli.command {
        Command::Validate { system } => {
            let v = read_json(system)?;
            let sys = system_from_json(&v)?;
            let drift = sys.drift();
            let hurwitz = is_hurwitz(&sys, tol.stability)?;
            let minimal = is_minimal(&sys, tol.rank);
            let eig = sys.eigenvalues()?;
            let mut out = json!({
                "pr": check_pr(&drift, sys.c(), tol.numeric),
                "pr_residual": pr_residual(&drift, sys.c()),
                "hurwitz": hurwitz,
                "minimal": minimal,
                "passive": sys.is_passive(tol.structure),
                "eigenvalues": complex_list_to_json(&eig),
                "n": sys.n(),
                "m": sys.m(),
            });
            if hurwitz && sys.n() > 0 {
                out["spectral_gap"] = json!(spectral_gap(&sys)?);
                let input = load_input(common, sys.m())?;
                if input.is_pure(tol.global_minimality) {
                    out["globally_minimal"] = json!(is_globally_minimal(&sys, &input, tol.global_minimality)?);
                }
            }
            let summary = format!("pr={} hurwitz={} minimal={}", out["pr"], hurwitz, minimal);
            Ok(Done { output: Output::Json(out), summary })
        }
        Command::Tf { system } => {
            let sys = load_system(system)?;
            let grid = system_grid(common, &sys)?;
            let values = grid.iter().map(|&s| sys.transfer_function(s).map(|m| matrix_to_json(&m))).collect::<Result<Vec<_>>>()?;
            let summary = format!("transfer function at {} points", grid.len());
            Ok(Done { output: Output::Json(json!({"s": complex_list_to_json(&grid), "values": values})), summary })
        }
        Command::Ps { system } => {
            let sys = load_system(system)?;
            let input = load_input(common, sys.m())?;
            let grid = system_grid(common, &sys)?;
            let values = grid.iter().map(|&s| power_spectrum(&sys, &input, s).map(|m| matrix_to_json(&m))).collect::<Result<Vec<_>>>()?;
            let summary = format!("power spectrum at {} points", grid.len());
            Ok(Done { output: Output::Json(json!({"s": complex_list_to_json(&grid), "values": values})), summary })
        }
        Command::Gm { system } => {
            let sys = load_system(system)?;
            let input = load_input(common, sys.m())?;
            let verdict = is_globally_minimal(&sys, &input, tol.global_minimality)?;
            let st = solve_lyapunov(&sys, &input)?;
            let mut out = json!({
                "globally_minimal": verdict,
                "symplectic_spectrum": st.symplectic_spectrum,
                "pure_dimension": st.symplectic_spectrum.iter().filter(|&&x| x <= tol.global_minimality).count(),
            });
            if sys.m() == 1 && sys.is_passive(tol.structure) {
                let siso = siso_passive_gm(&sys, &input, tol.numeric)?;
                out["siso_reducible_eigenvalues"] = complex_list_to_json(&siso.reducible_eigs);
            }
            Ok(Done { output: Output::Json(out), summary: format!("globally_minimal={}", verdict) })
        }
        Command::Split { system } => {
            let sys = load_system(system)?;
            let input = load_input(common, sys.m())?;
            let sp = pure_mixed_split(&sys, &input, tol.global_minimality)?;
            let out = json!({
                "pure": system_to_json(&sp.pure),
                "mixed": system_to_json(&sp.mixed),
                "input_transform": doubled_to_json(&sp.input_transform),
                "symplectic_spectrum": sp.symplectic_spectrum,
            });
            let summary = format!("pure modes {}, mixed modes {}", sp.pure.n(), sp.mixed.n());
            Ok(Done { output: Output::Json(out), summary })
        }
        Command::RealizeTf { tf } => {
            let f = rmf_from_json(&read_json(tf)?)?;
            let sys = physical_from_classical(&gilbert_realize(&f)?)?;
            let dev = tf_deviation(&sys, &f, &rmf_grid(common, &f)?)?;
            let out = json!({"system": system_to_json(&sys), "tf_deviation": dev});
            Ok(Done { output: Output::Json(out), summary: format!("{} modes, tf deviation {:.3e}", sys.n(), dev) })
        }
        Command::RealizePs { ps } => {
            let f = rmf_from_json(&read_json(ps)?)?;
            let r = ps_realize(&f)?;
            let vac = InputCovariance::vacuum(r.system.m());
            let jm = crate::core_algebra::j_matrix(r.system.m());
            let mut dev = 0.0f64;
            for s in rmf_grid(common, &f)? {
                dev = dev.max(max_abs(&(power_spectrum(&r.system, &vac, s)? * &jm - f.eval(s)?)));
            }
            let out = json!({
                "system": system_to_json(&r.system),
                "gram": doubled_to_json(&r.gram),
                "input_transform": doubled_to_json(&r.input_transform),
                "eigenvalues": complex_list_to_json(&r.system.eigenvalues()?),
                "ps_deviation": dev,
            });
            Ok(Done { output: Output::Json(out), summary: format!("{} modes, spectrum deviation {:.3e}", r.system.n(), dev) })
        }
        Command::RealizeNoisy { accessible, noise, seed } => {
            let v = read_json(accessible)?;
            let (ss, target) = if v.get("A").is_some() && v.get("D").is_some() {
                (state_space_from_json(&v)?, None)
            } else {
                let f = rmf_from_json(&v)?;
                (modal_realize(&f)?, Some(f))
            };
            let sys = noisy_realize(&ss, *noise, &NoisyOptions { seed: *seed, ..NoisyOptions::default() })?;
            let m1 = ss.d.nrows();
            let grid = system_grid(common, &sys)?;
            let mut dev = 0.0f64;
            for &s in &grid {
                let got = sys.transfer_function(s)?.view((0, 0), (m1, m1)).into_owned();
                let want = match &target {
                    Some(f) => f.eval(s)?,
                    None => ss.eval(s)?,
                };
                dev = dev.max(max_abs(&(got - want)));
            }
            let out = json!({"system": system_to_json(&sys), "accessible_deviation": dev, "seed": seed});
            Ok(Done { output: Output::Json(out), summary: format!("{} noise channels, accessible deviation {:.3e}", noise, dev) })
        }
        Command::CascadeId { tf, first } => {
            let v = read_json(tf)?;
            let minus = rmf_from_json(v.get("minus").ok_or_else(|| QlsError::Parse("missing field \"minus\"".into()))?)?;
            let plus = rmf_from_json(v.get("plus").ok_or_else(|| QlsError::Parse("missing field \"plus\"".into()))?)?;
            let opts = CascadeOptions { preferred: first.clone(), pole_tol: Some(tol.pole) };
            let casc = siso_cascade_identify(&minus, &plus, &opts)?;
            let stages: Vec<Value> = casc
                .stages
                .iter()
                .map(|st| {
                    json!({
                        "c": st.c,
                        "omega_minus": st.theta,
                        "omega_plus": complex_to_json(st.omega_plus),
                        "poles": st.system().eigenvalues().map(|e| complex_list_to_json(&e)).unwrap_or(Value::Null),
                    })
                })
                .collect();
            let sys = casc.system()?;
            let out = json!({
                "stages": stages,
                "output_scattering": doubled_to_json(&casc.output_scattering),
                "system": system_to_json(&sys),
            });
            Ok(Done { output: Output::Json(out), summary: format!("{} stages", casc.stages.len()) })
        }
        Command::Absorber { system } => {
            let sys = load_system(system)?;
            let res = dual_system(&sys, tol.global_minimality)?;
            let grid = system_grid(common, &sys)?;
            let chk = verify_absorber(&sys, &res.dual, &grid)?;
            let out = json!({
                "system": system_to_json(&sys),
                "dual": system_to_json(&res.dual),
                "combined": system_to_json(&res.combined),
                "purity_residual": res.purity_residual,
                "ps_residual": chk.ps_residual,
                "basis_transform": doubled_to_json(&res.basis_transform),
                "input_transform": doubled_to_json(&res.input_transform),
            });
            let summary = format!("purity residual {:.3e}, spectrum residual {:.3e}", res.purity_residual, chk.ps_residual);
            Ok(Done { output: Output::Json(out), summary })
        }
        Command::Qfi { family, method, theta0, omega, alpha, optimize_omega } => {
            let fam = family_from_json(&read_json(family)?)?;
            let sys = fam.system(*theta0)?;
            let freqs = explicit_frequencies(common)?;
            let rep = match method {
                QfiKind::Time => stationary_qfi_rate_time(&fam, *theta0, &load_input(common, sys.m())?)?,
                QfiKind::Freq => stationary_qfi_rate_freq(&fam, *theta0, &load_input(common, sys.m())?, freqs.as_deref().unwrap_or(&[]))?,
                QfiKind::Coherent => {
                    if alpha.len() != sys.m() {
                        return Err(QlsError::Dimension(format!("--alpha needs {} amplitudes", sys.m())));
                    }
                    let grid: Vec<f64> = match freqs {
                        Some(ws) => ws,
                        None => default_grid(&sys)?.iter().flat_map(|s| [s.im, -s.im]).collect(),
                    };
                    coherent_qfi(&fam, *theta0, *omega, &CVector::from_vec(alpha.clone()), *optimize_omega, &grid)?
                }
            };
            let summary = format!("qfi {:.10e}", rep.value);
            let v = serde_json::to_value(&rep).map_err(|e| QlsError::Inconsistent(e.to_string()))?;
            Ok(Done { output: Output::Json(v), summary })
        }
        Command::Sweep { family, couplings, theta0 } => {
            let base: Option<AffineFamily> = match family {
                Some(p) => Some(family_from_json(&read_json(p)?)?),
                None => None,
            };
            let m = base.as_ref().map(|f| f.base.m()).unwrap_or(1);
            let input = match &common.input_cov {
                Some(_) => load_input(common, m)?,
                None => return Err(QlsError::Unsupported("sweep needs a squeezed --input; vacuum gives zero information".into())),
            };
            let table = destabilized_scaling_check(
                |cp| match &base {
                    Some(f) => scaled_family(f, cp),
                    None => Ok(cavity_detuning_family(cp)),
                },
                couplings,
                *theta0,
                &input,
            )?;
            let summary = match table.slope {
                Some(s) => format!("log-log slope {:.6}", s),
                None => "slope undefined".to_string(),
            };
            Ok(Done { output: Output::Csv(table.to_csv()), summary })
        }
    }
}

/// The family with every coupling entry (base and terms) multiplied by `k`.
fn scaled_family(f: &AffineFamily, k: f64) -> Result<AffineFamily> {
    let b = &f.base;
    let base = QLSystem::new(b.s().clone(), b.c().scale(k), b.omega().clone())?;
    let terms = f
        .terms
        .iter()
        .map(|t| {
            let mut t = t.clone();
            if t.target == crate::system::FamilyTarget::C {
                t.coeff *= k;
            }
            t
        })
        .collect();
    AffineFamily::new(base, terms)
}
