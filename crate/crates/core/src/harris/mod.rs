//! Zero-temperature dynamics through the graphical representation: rate-1
//! Poisson clocks per vertex and a uniform coin per ring.

mod coupling;
mod engine;
pub mod rng;

pub use coupling::{
    run_coupled, run_coupled_observed, run_fixation_resample, CoupledOutcome, CouplingPolicy, CouplingViolation,
    ResampleParams, ResampleReport,
};
pub use engine::{
    delta_h, flip_rate, run, run_logged, sample_initial, ClockSurgery, Dynamics, EventLog, EventRecord, Observer,
    Rate, Ring, SpinConfiguration,
};
pub use rng::{HarrisSchedule, Stream};
