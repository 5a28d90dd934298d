//! Reconstruction of physical systems from transfer-function and
//! power-spectrum data.

mod cascade;
mod classical;
mod noisy;
mod rational;
mod spectrum;

pub use cascade::{
    doubled_transfer, passive_siso_cascade, siso_cascade_identify, CascadeOptions, CascadeRealization, CascadeStage,
    OneModeParams,
};
pub use classical::{gilbert_realize, modal_realize, physical_from_classical};
pub use noisy::{noisy_realize, nus_detect, NoisyOptions};
pub use rational::{horner, residue_by_limit, roots, RationalMatrixFunction};
pub use spectrum::{power_spectrum_rmf, ps_realize, PsRealization};
