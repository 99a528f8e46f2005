//! Time integration of the modal equations
//! `q'' + 2 gamma q' + omega² q = f_ext - f_nl(q)`.

mod bank;
mod excitation;
mod hook;
mod rk;
mod scan;
mod scheme;
mod simulate;
mod trajectory;

pub use bank::{oscillator_bank, Damping, OscillatorBank};
pub use excitation::{Excitation, ForceSignal, ModalDrive, Pluck, RaisedCosine};
pub use hook::{NonlinearHook, TensionHook};
pub use rk::rk_reference;
pub use scan::{initial_state, pole_and_residue, prefix_apply, scan_linear, scan_mode, Affine, SCAN_BLOCK};
pub use scheme::{
    ftm_coeffs, start_history, sv_coeffs, FtmCoeffs, Recurrence, SchemeCoeffs, SchemeKind, SimState, Stepper,
    SvCoeffs,
};
pub use simulate::{samples_for, simulate, ModalSystem};
pub use trajectory::Trajectory;
