//! Parameter sweeps over the drive plane (A, ε₀) for the driven
//! qubit-resonator models of `lzs-core`, with CSV/binary persistence,
//! region overlays and PNG heatmaps.

pub mod config;
pub mod cut;
pub mod io;
pub mod overlay;
pub mod plot;
pub mod run;

pub use config::{parse_config_str, validate_config, ConfigError, SweepConfig};
pub use cut::{cut_1d, CutAxis, Curve};
pub use io::Format;
pub use overlay::{emit_overlay, Overlay};
pub use plot::{emit_plot, Palette};
pub use run::{run_sweep, run_sweep_checkpointed, SweepResult};
