//! Reservoir backends behind one interface.
//!
//! A [`Backend`] is an immutable description that produces fresh
//! [`Reservoir`] states; the harness only talks to these two traits, so the
//! micromagnetic lattice, the analytic surrogate and the test mocks are
//! interchangeable.

mod micromagnetic;
pub mod mock;
mod surrogate;

pub use micromagnetic::{GridSpec, MicromagneticConfig, MicromagneticState, HALL_WINDOW_FRACTION};
pub use surrogate::{SurrogateNode, SurrogateParams, SurrogateState};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::StreamKey;
use crate::texture::SpinLattice;

/// A running reservoir: advanced under piecewise-constant fields, read as a
/// voltage.
pub trait Reservoir: Send {
    /// Evolves under a constant total field `h_total_oe` for `duration_s`
    /// protocol seconds.
    fn advance(&mut self, h_total_oe: f64, duration_s: f64) -> Result<()>;

    /// Hall voltage; a pure read.
    fn read_voltage(&self) -> f64;

    /// Protocol seconds since reset.
    fn elapsed(&self) -> f64;

    /// Spin texture, for backends that have one.
    fn lattice(&self) -> Option<&SpinLattice<f64>> {
        None
    }

    /// Switches the thermal noise stream; no-op for deterministic backends.
    fn reseed(&mut self, _stream: StreamKey) {}
}

/// Factory of reservoir states.
pub trait Backend: Sync {
    type State: Reservoir;

    /// Erases history and settles under `h_const`. `drive_spacing` is the
    /// protocol's sample spacing (seconds); `stream` addresses the thermal
    /// noise of this state.
    fn reset(&self, h_const: f64, drive_spacing: f64, stream: StreamKey) -> Result<Self::State>;

    fn kind(&self) -> &'static str;
}

/// Serializable backend choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Micromagnetic(MicromagneticConfig),
    Surrogate(SurrogateParams),
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Micromagnetic(c) => c.validate(),
            Self::Surrogate(s) => s.validate(),
        }
    }
}

/// State produced by a [`BackendConfig`].
#[derive(Clone, Debug)]
pub enum BackendState {
    Micromagnetic(Box<MicromagneticState>),
    Surrogate(SurrogateState),
}

impl Reservoir for BackendState {
    fn advance(&mut self, h_total_oe: f64, duration_s: f64) -> Result<()> {
        match self {
            Self::Micromagnetic(s) => s.advance(h_total_oe, duration_s),
            Self::Surrogate(s) => s.advance(h_total_oe, duration_s),
        }
    }

    fn read_voltage(&self) -> f64 {
        match self {
            Self::Micromagnetic(s) => s.read_voltage(),
            Self::Surrogate(s) => s.read_voltage(),
        }
    }

    fn elapsed(&self) -> f64 {
        match self {
            Self::Micromagnetic(s) => s.elapsed(),
            Self::Surrogate(s) => s.elapsed(),
        }
    }

    fn lattice(&self) -> Option<&SpinLattice<f64>> {
        match self {
            Self::Micromagnetic(s) => s.lattice(),
            Self::Surrogate(s) => s.lattice(),
        }
    }

    fn reseed(&mut self, stream: StreamKey) {
        match self {
            Self::Micromagnetic(s) => s.reseed(stream),
            Self::Surrogate(s) => s.reseed(stream),
        }
    }
}

impl Backend for BackendConfig {
    type State = BackendState;

    fn reset(&self, h_const: f64, drive_spacing: f64, stream: StreamKey) -> Result<BackendState> {
        Ok(match self {
            Self::Micromagnetic(c) => BackendState::Micromagnetic(Box::new(c.reset(h_const, drive_spacing, stream)?)),
            Self::Surrogate(s) => BackendState::Surrogate(s.reset(h_const, drive_spacing, stream)?),
        })
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Micromagnetic(_) => "micromagnetic",
            Self::Surrogate(_) => "surrogate",
        }
    }
}
