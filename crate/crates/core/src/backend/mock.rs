//! Minimal backends for contract tests.

use super::{Backend, Reservoir};
use crate::error::Result;
use crate::rng::StreamKey;

/// Memoryless linear device: `V = gain * (h - h_const)` for the field most
/// recently applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearMock {
    pub gain: f64,
}

#[derive(Clone, Debug)]
pub struct LinearMockState {
    gain: f64,
    h_const: f64,
    last: f64,
    elapsed: f64,
}

impl Backend for LinearMock {
    type State = LinearMockState;

    fn reset(&self, h_const: f64, _drive_spacing: f64, _stream: StreamKey) -> Result<LinearMockState> {
        Ok(LinearMockState { gain: self.gain, h_const, last: h_const, elapsed: 0.0 })
    }

    fn kind(&self) -> &'static str {
        "linear-mock"
    }
}

impl Reservoir for LinearMockState {
    fn advance(&mut self, h_total_oe: f64, duration_s: f64) -> Result<()> {
        self.last = h_total_oe;
        self.elapsed += duration_s;
        Ok(())
    }

    fn read_voltage(&self) -> f64 {
        self.gain * (self.last - self.h_const)
    }

    fn elapsed(&self) -> f64 {
        self.elapsed
    }
}

/// Exponential relaxation toward `gain * (h - h_const)` with time constant
/// `tau` seconds; linear but with memory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxingMock {
    pub gain: f64,
    pub tau: f64,
}

#[derive(Clone, Debug)]
pub struct RelaxingMockState {
    spec: RelaxingMock,
    h_const: f64,
    v: f64,
    elapsed: f64,
}

impl Backend for RelaxingMock {
    type State = RelaxingMockState;

    fn reset(&self, h_const: f64, _drive_spacing: f64, _stream: StreamKey) -> Result<RelaxingMockState> {
        Ok(RelaxingMockState { spec: *self, h_const, v: 0.0, elapsed: 0.0 })
    }

    fn kind(&self) -> &'static str {
        "relaxing-mock"
    }
}

impl Reservoir for RelaxingMockState {
    fn advance(&mut self, h_total_oe: f64, duration_s: f64) -> Result<()> {
        let target = self.spec.gain * (h_total_oe - self.h_const);
        let decay = (-duration_s / self.spec.tau).exp();
        self.v = target + (self.v - target) * decay;
        self.elapsed += duration_s;
        Ok(())
    }

    fn read_voltage(&self) -> f64 {
        self.v
    }

    fn elapsed(&self) -> f64 {
        self.elapsed
    }
}
