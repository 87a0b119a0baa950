//! Controller laws as pure state-derivative functions.
//!
//! All right-hand sides are written in per-unit time; the simulation engine
//! multiplies them by the time base `ω_b`. Angle states that carry the
//! absolute frequency offset `ω_0 − ω_g` take `omega_b` explicitly.

pub mod dcvoc;
pub mod droop;
pub mod dvoc;
pub mod gfl;
pub mod lvrt;

pub use dcvoc::{
    dcvoc_rhs, dcvoc_rhs_polar, project_outward, saturate, DcvocDeriv, DcvocParams, DcvocPolar, DcvocState,
};
pub use droop::{droop_gfm_rhs, DroopGfmParams, DroopGfmState};
pub use dvoc::{dvoc_rhs, DvocParams, DvocState};
pub use gfl::{gfl_current_command, pll_gfl_rhs, CurrentCommand, PllGflDeriv, PllGflParams, PllGflState};
pub use lvrt::{lvrt_refs, lvrt_refs_split, LvrtConfig, LvrtMonitor, LvrtRefs};
