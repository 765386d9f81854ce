//! Leaky hysteretic node network standing in for the magnetic film.
//!
//! Each node follows
//!
//! ```text
//! x <- γ x + tanh(a u + b x + c') - tanh(b x + c'),    c' = c + κ h_const
//! ```
//!
//! with `u = h_total - h_const` the drive in Oe. `x = 0` is the rest state
//! for every bias, so a reset is exact and the drive-free map is `x -> γ x`.
//! Node coefficients are derived from `seed`; the output is
//! `V = v_gain * mean(x)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, Reservoir};
use crate::error::{Error, Result};
use crate::rng::{aux_rng, StreamKey};

const NODE_STREAM: u32 = 0x5352_4e44;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateParams {
    pub n_nodes: usize,
    /// Leak factor γ in (0, 1]; 1 makes every node a pure integrator.
    pub leak_gamma: f64,
    /// Per-node input gains are drawn from `input_gain * [0.5, 1.5)`.
    pub input_gain: f64,
    /// Per-node feedback gains are drawn from `feedback_gain * [-1, 1)`.
    pub feedback_gain: f64,
    /// Per-node biases are drawn from `bias * [-1, 1)`.
    pub bias: f64,
    /// Bias shift per Oe of `h_const`.
    pub const_gain: f64,
    pub seed: u64,
    pub v_gain: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        Self {
            n_nodes: 8,
            leak_gamma: 0.95,
            input_gain: 0.05,
            feedback_gain: 0.02,
            bias: 0.5,
            const_gain: 0.5,
            seed: 1,
            v_gain: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateNode {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SurrogateParams {
    pub fn nodes(&self) -> Vec<SurrogateNode> {
        let mut rng = aux_rng(self.seed, NODE_STREAM);
        (0..self.n_nodes)
            .map(|_| SurrogateNode {
                a: self.input_gain * rng.random_range(0.5..1.5),
                b: self.feedback_gain * rng.random_range(-1.0..1.0),
                c: self.bias * rng.random_range(-1.0..1.0),
            })
            .collect()
    }

    /// Parameter sanity plus the echo-state condition: for γ < 1 every node's
    /// update must be a contraction in `x`, which holds when `γ + |b| < 1`
    /// (the derivative is `γ + b (sech²(·) - sech²(·))`).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.n_nodes == 0 {
            return bad("surrogate needs at least one node".into());
        }
        if !(self.leak_gamma > 0.0 && self.leak_gamma <= 1.0) {
            return bad(format!("leak_gamma = {} outside (0, 1]", self.leak_gamma));
        }
        let all = [self.input_gain, self.feedback_gain, self.bias, self.const_gain, self.v_gain];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite surrogate parameter".into());
        }
        if self.leak_gamma < 1.0 {
            let worst = self.nodes().iter().map(|n| n.b.abs()).fold(0.0, f64::max);
            if self.leak_gamma + worst >= 1.0 {
                return bad(format!(
                    "echo-state condition violated: leak_gamma + max|b| = {} >= 1",
                    self.leak_gamma + worst
                ));
            }
        }
        Ok(())
    }

    /// Exact state after `reset`: all nodes at rest.
    pub fn reset(&self, h_const: f64, drive_spacing: f64, _stream: StreamKey) -> Result<SurrogateState> {
        self.validate()?;
        if !(drive_spacing > 0.0 && drive_spacing.is_finite()) {
            return Err(Error::InvalidProtocol(format!("drive spacing {drive_spacing} must be positive")));
        }
        if !h_const.is_finite() {
            return Err(Error::InvalidProtocol("non-finite h_const".into()));
        }
        let nodes = self.nodes();
        let shift: Vec<f64> = nodes.iter().map(|n| n.c + self.const_gain * h_const).collect();
        Ok(SurrogateState {
            gamma: self.leak_gamma,
            v_gain: self.v_gain,
            spacing: drive_spacing,
            h_const,
            x: vec![0.0; nodes.len()],
            shift,
            nodes,
            updates: 0,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SurrogateState {
    gamma: f64,
    v_gain: f64,
    spacing: f64,
    h_const: f64,
    nodes: Vec<SurrogateNode>,
    shift: Vec<f64>,
    x: Vec<f64>,
    updates: u64,
}

impl SurrogateState {
    pub fn activations(&self) -> &[f64] {
        &self.x
    }

    /// One discrete update under drive `u` (Oe, relative to `h_const`).
    fn update(&mut self, u: f64) {
        for ((x, n), s) in self.x.iter_mut().zip(&self.nodes).zip(&self.shift) {
            let inner = n.b * *x + s;
            *x = self.gamma * *x + ((n.a * u + inner).tanh() - inner.tanh());
        }
    }
}

impl Reservoir for SurrogateState {
    /// Applies `duration / spacing` updates; the ratio must be a whole number.
    fn advance(&mut self, h_total_oe: f64, duration_s: f64) -> Result<()> {
        let ratio = duration_s / self.spacing;
        let count = ratio.round();
        if !(duration_s > 0.0) || count < 1.0 || (ratio - count).abs() > 1e-9 * count.max(1.0) {
            return Err(Error::InvalidProtocol(format!(
                "duration {duration_s} s is not a whole number of {} s surrogate updates",
                self.spacing
            )));
        }
        let u = h_total_oe - self.h_const;
        for _ in 0..count as u64 {
            self.update(u);
        }
        self.updates += count as u64;
        Ok(())
    }

    fn read_voltage(&self) -> f64 {
        self.v_gain * self.x.iter().sum::<f64>() / self.x.len() as f64
    }

    fn elapsed(&self) -> f64 {
        self.updates as f64 * self.spacing
    }
}

impl Backend for SurrogateParams {
    type State = SurrogateState;

    fn reset(&self, h_const: f64, drive_spacing: f64, stream: StreamKey) -> Result<SurrogateState> {
        SurrogateParams::reset(self, h_const, drive_spacing, stream)
    }

    fn kind(&self) -> &'static str {
        "surrogate"
    }
}
