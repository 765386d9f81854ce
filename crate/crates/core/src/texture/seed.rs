use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{SpinLattice, Vec3};
use crate::error::{Error, Result};
use crate::rng::aux_rng;
use crate::scalar::Scalar;

/// In-plane sign of seeded Néel skyrmions: `-1` points the in-plane
/// components towards the core, the low-energy chirality for `dmi_d > 0`.
pub const SKYRMION_CHIRALITY: f64 = -1.0;

/// Skyrmion position and radius, in cell units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkyrmionSeed {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl SkyrmionSeed {
    pub fn new(cx: f64, cy: f64, radius: f64) -> Self {
        Self { cx, cy, radius }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Texture {
    UniformUp,
    UniformDown,
    Skyrmion(SkyrmionSeed),
    /// Several non-overlapping skyrmions.
    Skyrmions(Vec<SkyrmionSeed>),
    /// Independent isotropic random spins.
    Random { seed: u64 },
    /// Worm-like up/down domains from a random superposition of plane waves.
    Labyrinth { seed: u64 },
}

/// Builds the requested texture on an `nx × ny` grid with unit cell size and
/// open boundaries; callers adjust both with the lattice builders.
pub fn seed_texture<T: Scalar>(kind: &Texture, nx: usize, ny: usize) -> Result<SpinLattice<T>> {
    let up = Vec3::<T>::up();
    match kind {
        Texture::UniformUp => SpinLattice::uniform(nx, ny, T::one(), up),
        Texture::UniformDown => SpinLattice::uniform(nx, ny, T::one(), -up),
        Texture::Skyrmion(s) => skyrmions(&[*s], nx, ny),
        Texture::Skyrmions(list) => skyrmions(list, nx, ny),
        Texture::Random { seed } => {
            let mut rng = aux_rng(*seed, 0x7e47);
            let spins = (0..nx * ny)
                .map(|_| {
                    let (a, b, c): (f64, f64, f64) =
                        (rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
                    Vec3::new(T::lit(a), T::lit(b), T::lit(c))
                })
                .collect();
            SpinLattice::from_spins(nx, ny, T::one(), spins)
        }
        Texture::Labyrinth { seed } => {
            let mut rng = aux_rng(*seed, 0x1ab);
            let wavelength = 10.0;
            let waves: Vec<(f64, f64, f64)> = (0..6)
                .map(|_| {
                    let angle = rng.random::<f64>() * std::f64::consts::PI;
                    let phase = rng.random::<f64>() * std::f64::consts::TAU;
                    (angle.cos(), angle.sin(), phase)
                })
                .collect();
            let k = std::f64::consts::TAU / wavelength;
            let mut spins = Vec::with_capacity(nx * ny);
            for y in 0..ny {
                for x in 0..nx {
                    let s: f64 = waves
                        .iter()
                        .map(|&(c, s, p)| (k * (x as f64 * c + y as f64 * s) + p).cos())
                        .sum();
                    let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                    spins.push(Vec3::new(T::lit(0.1 * a), T::lit(0.1 * b), T::lit((2.0 * s).tanh())));
                }
            }
            SpinLattice::from_spins(nx, ny, T::one(), spins)
        }
    }
}

fn skyrmions<T: Scalar>(seeds: &[SkyrmionSeed], nx: usize, ny: usize) -> Result<SpinLattice<T>> {
    for (i, s) in seeds.iter().enumerate() {
        if !(s.radius >= 2.0) {
            return Err(Error::Geometry(format!("skyrmion radius {} is below 2 cells", s.radius)));
        }
        let fits = s.cx - s.radius >= 0.0
            && s.cy - s.radius >= 0.0
            && s.cx + s.radius <= (nx - 1) as f64
            && s.cy + s.radius <= (ny - 1) as f64;
        if !fits {
            return Err(Error::Geometry(format!(
                "skyrmion at ({}, {}) with radius {} does not fit a {nx}x{ny} grid",
                s.cx, s.cy, s.radius
            )));
        }
        for o in &seeds[..i] {
            if (s.cx - o.cx).hypot(s.cy - o.cy) < s.radius + o.radius {
                return Err(Error::Geometry("seeded skyrmions overlap".into()));
            }
        }
    }
    let mut lattice = SpinLattice::uniform(nx, ny, T::one(), Vec3::up())?;
    for s in seeds {
        let (x0, x1) = ((s.cx - s.radius).floor().max(0.0) as usize, (s.cx + s.radius).ceil() as usize);
        let (y0, y1) = ((s.cy - s.radius).floor().max(0.0) as usize, (s.cy + s.radius).ceil() as usize);
        for y in y0..=y1.min(ny - 1) {
            for x in x0..=x1.min(nx - 1) {
                let (dx, dy) = (x as f64 - s.cx, y as f64 - s.cy);
                let r = dx.hypot(dy);
                if r >= s.radius {
                    continue;
                }
                let theta = std::f64::consts::PI * (1.0 - r / s.radius).clamp(0.0, 1.0);
                let phi = dy.atan2(dx);
                let inplane = SKYRMION_CHIRALITY * theta.sin();
                let m = if r == 0.0 {
                    Vec3::new(T::zero(), T::zero(), -T::one())
                } else {
                    Vec3::new(T::lit(inplane * phi.cos()), T::lit(inplane * phi.sin()), T::lit(theta.cos()))
                };
                lattice.set_spin(x, y, m);
            }
        }
    }
    Ok(lattice)
}
