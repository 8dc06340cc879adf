//! Bounds, monitors and diagnostics evaluated along computed trajectories.

mod constants;
mod equilibria;
mod lyapunov;
mod monitor;
mod spikes;
mod translation;
mod verify;

pub use constants::{absorbing_time, compute_constants, gronwall_envelope, ConstantsReport};
pub use equilibria::{homogeneous_equilibria, reduced_cubic, Equilibrium, EquilibriumSet, Stability};
pub use lyapunov::{lyapunov_series, LyapunovRecord, LyapunovTracker};
pub use monitor::{tail_trend, MonitorSample, TailTrend};
pub use spikes::{spike_train_metrics, SpikeMetrics, BURST_GAP_FACTOR};
pub use translation::translation_modulus;
pub use verify::{verify_dissipativity, verify_dissipativity_in_ball, DissipativityReport, VerifyRow};
