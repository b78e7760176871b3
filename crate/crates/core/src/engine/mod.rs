//! Generic Monte-Carlo machinery for complex Itô SDEs.
//!
//! Models implement [`SdeModel`]; [`step_semi_implicit`] advances one step
//! with the semi-implicit midpoint scheme; [`run_ensemble`] fans trajectories
//! out over independent counter-based RNG streams; [`noise_spectrum`] and
//! [`windowed_variance`] reduce recorded quadratures to squeezing statistics.

mod ensemble;
mod sde;
mod spectrum;

pub use ensemble::{
    run_ensemble, trajectory_rng, EnsembleResult, FnObserver, ObservableFn, Observer,
    TrajectoryConfig,
};
pub use sde::{
    step_semi_implicit, Diverged, OrnsteinUhlenbeck, SdeModel, SemiImplicitStepper,
    StratonovichTerm,
};
pub use spectrum::{
    detection_window_spectrum, linear_fit, noise_spectrum, windowed_variance, SpectrumEstimate,
    SpectrumOptions,
};
