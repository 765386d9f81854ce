//! Spin-lattice reservoir driven by the stochastic LLG integrator.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, Reservoir};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::texture::{Boundary, LlgIntegrator, MaterialParams, SpinLattice, Vec3};

/// Side fraction of the centred Hall-cross window read as the voltage.
pub const HALL_WINDOW_FRACTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// µm per cell.
    pub cell_size: f64,
    pub boundary: Boundary,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 64, ny: 64, cell_size: 0.625, boundary: Boundary::Open }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicromagneticConfig {
    pub params: MaterialParams<f64>,
    pub grid: GridSpec,
    /// Relaxation steps at `h_const` after the saturating pulse.
    pub equilibration_steps: usize,
    /// Saturating pulse strength, Oe.
    pub reset_field_oe: f64,
    /// Pulse length, dimensionless time units.
    pub reset_pulse_time: f64,
    /// Dimensionless time units per protocol second.
    pub time_map: f64,
    pub window_fraction: f64,
    pub v_gain: f64,
    pub v_offset: f64,
}

impl Default for MicromagneticConfig {
    fn default() -> Self {
        Self {
            params: MaterialParams::default(),
            grid: GridSpec::default(),
            equilibration_steps: 10_000,
            reset_field_oe: 100.0,
            reset_pulse_time: 20.0,
            time_map: 2000.0,
            window_fraction: HALL_WINDOW_FRACTION,
            v_gain: 1.0,
            v_offset: 0.0,
        }
    }
}

impl MicromagneticConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let g = &self.grid;
        if g.nx < crate::texture::MIN_EXTENT || g.ny < crate::texture::MIN_EXTENT {
            return Err(Error::InvalidLattice(format!("grid {}x{} below the 8x8 minimum", g.nx, g.ny)));
        }
        if !(g.cell_size > 0.0 && g.cell_size.is_finite()) {
            return Err(Error::InvalidLattice(format!("cell_size {} must be positive", g.cell_size)));
        }
        let positive = [("time_map", self.time_map), ("reset_pulse_time", self.reset_pulse_time)];
        for (name, v) in positive {
            if !(v >= 0.0 && v.is_finite()) || (name == "time_map" && v == 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be positive and finite")));
            }
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::InvalidParams(format!("window_fraction {} outside (0, 1]", self.window_fraction)));
        }
        if ![self.reset_field_oe, self.v_gain, self.v_offset].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("non-finite reset field or voltage calibration".into()));
        }
        Ok(())
    }

    /// Cell ranges `(x0..x1, y0..y1)` of the Hall window.
    pub fn window(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let span = |n: usize| {
            let w = ((n as f64 * self.window_fraction).round() as usize).clamp(1, n);
            let start = (n - w) / 2;
            start..start + w
        };
        (span(self.grid.nx), span(self.grid.ny))
    }

    /// Wraps an existing texture (e.g. a seeded one) as a reservoir state.
    pub fn state_from_lattice(&self, lattice: SpinLattice<f64>, stream: StreamKey) -> Result<MicromagneticState> {
        self.validate()?;
        if lattice.nx() != self.grid.nx || lattice.ny() != self.grid.ny {
            return Err(Error::DimensionMismatch {
                expected: self.grid.nx * self.grid.ny,
                got: lattice.len(),
            });
        }
        let lattice = lattice.with_boundary(self.grid.boundary).with_cell_size(self.grid.cell_size);
        Ok(MicromagneticState {
            integrator: LlgIntegrator::new(lattice.len()),
            window: self.window(),
            config: self.clone(),
            lattice,
            rng: stream.rng(),
            elapsed: 0.0,
        })
    }

    /// Uniform `+z`, a saturating pulse, then relaxation under `h_const`.
    pub fn reset(&self, h_const: f64, _drive_spacing: f64, stream: StreamKey) -> Result<MicromagneticState> {
        let g = &self.grid;
        let up = SpinLattice::uniform(g.nx, g.ny, g.cell_size, Vec3::up())?;
        let mut state = self.state_from_lattice(up, stream)?;
        state.evolve(self.reset_field_oe, self.reset_pulse_time)?;
        state.evolve(h_const, self.equilibration_steps as f64 * self.params.dt)?;
        state.elapsed = 0.0;
        Ok(state)
    }
}

#[derive(Clone, Debug)]
pub struct MicromagneticState {
    config: MicromagneticConfig,
    lattice: SpinLattice<f64>,
    integrator: LlgIntegrator<f64>,
    rng: ChaCha8Rng,
    window: (std::ops::Range<usize>, std::ops::Range<usize>),
    elapsed: f64,
}

impl MicromagneticState {
    /// Integrates for `time` dimensionless units at field `h_oe`, splitting
    /// into equal steps no longer than `dt` or the stability limit at `h_oe`.
    fn evolve(&mut self, h_oe: f64, time: f64) -> Result<usize> {
        if time <= 0.0 {
            return Ok(0);
        }
        let p = &self.config.params;
        let dt_max = p.dt.min(p.max_stable_dt(h_oe));
        let steps = ((time / dt_max) - 1e-9).ceil().max(1.0) as usize;
        let dt = time / steps as f64;
        for _ in 0..steps {
            self.integrator.step_dt(&mut self.lattice, p, h_oe, dt, &mut self.rng)?;
        }
        Ok(steps)
    }

    pub fn config(&self) -> &MicromagneticConfig {
        &self.config
    }

    pub fn window_mean_mz(&self) -> f64 {
        let (xs, ys) = &self.window;
        let mut sum = 0.0;
        for y in ys.clone() {
            for x in xs.clone() {
                sum += self.lattice.spin(x, y).z;
            }
        }
        sum / (xs.len() * ys.len()) as f64
    }
}

impl Reservoir for MicromagneticState {
    fn advance(&mut self, h_total_oe: f64, duration_s: f64) -> Result<()> {
        if !(duration_s > 0.0 && duration_s.is_finite()) || !h_total_oe.is_finite() {
            return Err(Error::InvalidProtocol(format!("cannot advance {duration_s} s at {h_total_oe} Oe")));
        }
        self.evolve(h_total_oe, duration_s * self.config.time_map)?;
        self.elapsed += duration_s;
        Ok(())
    }

    fn read_voltage(&self) -> f64 {
        self.config.v_gain * self.window_mean_mz() + self.config.v_offset
    }

    fn elapsed(&self) -> f64 {
        self.elapsed
    }

    fn lattice(&self) -> Option<&SpinLattice<f64>> {
        Some(&self.lattice)
    }

    fn reseed(&mut self, stream: StreamKey) {
        self.rng = stream.rng();
    }
}

impl Backend for MicromagneticConfig {
    type State = MicromagneticState;

    fn reset(&self, h_const: f64, drive_spacing: f64, stream: StreamKey) -> Result<MicromagneticState> {
        MicromagneticConfig::reset(self, h_const, drive_spacing, stream)
    }

    fn kind(&self) -> &'static str {
        "micromagnetic"
    }
}
