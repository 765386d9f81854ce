//! Stochastic Heun integration of
//!
//! ```text
//! dm/dt = -m × H - α m × (m × H),    H = H_eff + ξ
//! ```
//!
//! The thermal field `ξ` has independent Gaussian components of variance
//! `2 α T / dt`, drawn once per step and shared by predictor and corrector
//! (Stratonovich). Both stages renormalise to unit length.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{effective_field_into, MaterialParams, SpinLattice, Vec3};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `dt · max|H_eff|` must stay below this.
pub const STABILITY_BOUND: f64 = 0.1;

#[inline]
fn torque<T: Scalar>(m: Vec3<T>, h: Vec3<T>, alpha: T) -> Vec3<T> {
    let mxh = m.cross(h);
    -(mxh + m.cross(mxh) * alpha)
}

/// Reusable Heun integrator; owns every scratch buffer so the hot loop does
/// not allocate.
#[derive(Clone, Debug)]
pub struct LlgIntegrator<T> {
    field: Vec<Vec3<T>>,
    k1: Vec<Vec3<T>>,
    predicted: Vec<Vec3<T>>,
    noise: Vec<Vec3<T>>,
}

impl<T: Scalar> LlgIntegrator<T> {
    pub fn new(sites: usize) -> Self {
        Self {
            field: vec![Vec3::zero(); sites],
            k1: vec![Vec3::zero(); sites],
            predicted: vec![Vec3::zero(); sites],
            noise: vec![Vec3::zero(); sites],
        }
    }

    /// One Heun step of length `params.dt`.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        lattice: &mut SpinLattice<T>,
        params: &MaterialParams<T>,
        h_oe: T,
        rng: &mut R,
    ) -> Result<()> {
        self.step_dt(lattice, params, h_oe, params.dt, rng)
    }

    /// One Heun step of length `dt` (which may be shorter than `params.dt`).
    pub fn step_dt<R: Rng + ?Sized>(
        &mut self,
        lattice: &mut SpinLattice<T>,
        params: &MaterialParams<T>,
        h_oe: T,
        dt: T,
        rng: &mut R,
    ) -> Result<()> {
        let n = lattice.len();
        if self.field.len() != n {
            *self = Self::new(n);
        }
        let bound = dt * params.field_bound(h_oe);
        if !(bound < T::lit(STABILITY_BOUND)) {
            return Err(Error::StabilityViolation(format!(
                "dt * max|H_eff| = {bound} at h = {h_oe} Oe exceeds {STABILITY_BOUND}"
            )));
        }
        let alpha = params.damping_alpha;
        let thermal = params.temperature > T::zero();
        if thermal {
            let sigma = (T::lit(2.0) * alpha * params.temperature / dt).sqrt();
            for xi in self.noise.iter_mut() {
                let (a, b, c): (f64, f64, f64) =
                    (rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
                *xi = Vec3::new(T::lit(a), T::lit(b), T::lit(c)) * sigma;
            }
        }

        // Predictor.
        effective_field_into(lattice, lattice.spins(), params, h_oe, &mut self.field);
        for i in 0..n {
            let m = lattice.spins()[i];
            let mut h = self.field[i];
            if thermal {
                h += self.noise[i];
            }
            let k1 = torque(m, h, alpha);
            self.k1[i] = k1;
            self.predicted[i] = (m + k1 * dt).normalized();
        }

        // Corrector; the new state is written over `predicted` once its field is known.
        effective_field_into(lattice, &self.predicted, params, h_oe, &mut self.field);
        let half_dt = dt * T::lit(0.5);
        let mut worst = T::one();
        for i in 0..n {
            let m = lattice.spins()[i];
            let mut h = self.field[i];
            if thermal {
                h += self.noise[i];
            }
            let k2 = torque(self.predicted[i], h, alpha);
            let next = (m + (self.k1[i] + k2) * half_dt).normalized();
            worst = worst.min(m.dot(next));
            self.predicted[i] = next;
        }
        if !(worst >= T::zero()) {
            return Err(Error::StabilityViolation(format!(
                "a spin rotated by more than pi/2 in one step (cos = {worst})"
            )));
        }
        lattice.spins_mut().copy_from_slice(&self.predicted);
        Ok(())
    }
}

/// Functional single step: returns the advanced lattice and leaves the input untouched.
pub fn llg_step<T: Scalar, R: Rng + ?Sized>(
    lattice: &SpinLattice<T>,
    params: &MaterialParams<T>,
    h_oe: T,
    rng: &mut R,
) -> Result<SpinLattice<T>> {
    let mut next = lattice.clone();
    LlgIntegrator::new(lattice.len()).step(&mut next, params, h_oe, rng)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use crate::texture::{seed_texture, total_energy, Boundary, SkyrmionSeed, Texture};

    fn params() -> MaterialParams<f64> {
        MaterialParams {
            dmi_d: 0.5,
            anisotropy_k: 0.1,
            field_scale: 0.01,
            damping_alpha: 0.3,
            temperature: 0.0,
            dt: 0.01,
            ..Default::default()
        }
    }

    #[test]
    fn aligned_uniform_state_is_fixed_point() {
        // Open edges with D > 0 tilt the boundary spins, so the fixed point is
        // the periodic film.
        let lat = seed_texture::<f64>(&Texture::UniformUp, 16, 16).unwrap().with_boundary(Boundary::Periodic);
        let mut rng = StreamKey::default().rng();
        let p = params();
        let mut cur = lat.clone();
        for _ in 0..50 {
            let next = llg_step(&cur, &p, 20.0, &mut rng).unwrap();
            for (a, b) in next.spins().iter().zip(cur.spins()) {
                assert!((a.x - b.x).abs() < 1e-10 && (a.y - b.y).abs() < 1e-10 && (a.z - b.z).abs() < 1e-10);
            }
            cur = next;
        }
    }

    #[test]
    fn zero_temperature_energy_is_non_increasing() {
        let p = params();
        let mut lat = seed_texture::<f64>(&Texture::Random { seed: 4 }, 24, 24).unwrap();
        let mut integ = LlgIntegrator::new(lat.len());
        let mut rng = StreamKey::default().rng();
        let mut e = total_energy(&lat, &p, 5.0);
        for _ in 0..300 {
            integ.step(&mut lat, &p, 5.0, &mut rng).unwrap();
            let e2 = total_energy(&lat, &p, 5.0);
            assert!(e2 <= e + 1e-9, "{e2} > {e}");
            e = e2;
        }
    }

    #[test]
    fn norms_stay_unit_with_noise() {
        let p = MaterialParams { temperature: 0.2, ..params() };
        let mut lat = seed_texture::<f64>(&Texture::Skyrmion(SkyrmionSeed::new(12.0, 12.0, 5.0)), 24, 24)
            .unwrap()
            .with_boundary(Boundary::Periodic);
        let mut integ = LlgIntegrator::new(lat.len());
        let mut rng = StreamKey::new(3, 0, 0).rng();
        for _ in 0..200 {
            integ.step(&mut lat, &p, -4.0, &mut rng).unwrap();
        }
        assert!(lat.max_norm_error() < 1e-9);
    }

    #[test]
    fn same_stream_same_trajectory() {
        let p = MaterialParams { temperature: 0.1, ..params() };
        let start = seed_texture::<f64>(&Texture::Labyrinth { seed: 2 }, 16, 16).unwrap();
        let run = || {
            let mut lat = start.clone();
            let mut integ = LlgIntegrator::new(lat.len());
            let mut rng = StreamKey::new(11, 2, 0).rng();
            for _ in 0..40 {
                integ.step(&mut lat, &p, 3.0, &mut rng).unwrap();
            }
            lat
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn oversized_step_is_rejected() {
        let p = params();
        let lat = seed_texture::<f64>(&Texture::UniformUp, 8, 8).unwrap();
        let mut rng = StreamKey::default().rng();
        let huge_field = 0.2 / (p.dt * p.field_scale);
        assert!(matches!(llg_step(&lat, &p, huge_field, &mut rng), Err(Error::StabilityViolation(_))));
    }

    /// Closed form for one spin in a static field `h ẑ` under the torque above:
    /// `tan(θ/2) = tan(θ0/2) e^{-α h t}`, `φ = φ0 + h t`.
    fn macrospin(theta0: f64, phi0: f64, alpha: f64, h: f64, t: f64) -> Vec3<f64> {
        let theta = 2.0 * ((theta0 / 2.0).tan() * (-alpha * h * t).exp()).atan();
        let phi = phi0 + h * t;
        Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    #[test]
    fn tilted_uniform_state_follows_macrospin_solution() {
        let p = MaterialParams { dmi_d: 0.0, anisotropy_k: 0.0, field_scale: 0.02, damping_alpha: 0.2, ..params() };
        let h_oe = 40.0;
        let h = p.field_scale * h_oe;
        let (theta0, phi0) = (1.1f64, 0.3f64);
        let m0 = Vec3::new(theta0.sin() * phi0.cos(), theta0.sin() * phi0.sin(), theta0.cos());
        let mut lat = SpinLattice::uniform(10, 10, 1.0, m0).unwrap();
        let mut integ = LlgIntegrator::new(lat.len());
        let mut rng = StreamKey::default().rng();
        for step in 1..=100 {
            integ.step(&mut lat, &p, h_oe, &mut rng).unwrap();
            let expect = macrospin(theta0, phi0, p.damping_alpha, h, step as f64 * p.dt);
            for s in lat.spins() {
                assert!((*s - expect).norm() < 1e-4, "step {step}: {s:?} vs {expect:?}");
            }
        }
    }
}
