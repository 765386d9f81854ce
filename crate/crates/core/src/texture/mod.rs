//! Spin-lattice state, thin-film energetics and the stochastic LLG integrator.
//!
//! The film is a square lattice of unit spins with nearest-neighbour exchange
//! `J`, interfacial (Néel) DMI `D`, uniaxial out-of-plane anisotropy `K` and
//! an out-of-plane Zeeman field. Everything is dimensionless with `J = 1`;
//! external fields enter in Oe and are mapped through `field_scale`.

mod energy;
mod llg;
mod seed;
mod snapshot;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use energy::{effective_field, effective_field_into, energy_terms, total_energy, EnergyTerms};
pub use llg::{llg_step, LlgIntegrator, STABILITY_BOUND};
pub use seed::{seed_texture, SkyrmionSeed, Texture, SKYRMION_CHIRALITY};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SNAPSHOT_FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest accepted grid extent.
pub const MIN_EXTENT: usize = 8;

/// Maximum tolerated deviation of `|m|` from one.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn up() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    /// Unit vector along `self`; the zero vector is returned unchanged.
    #[inline]
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n == T::zero() {
            self
        } else {
            self * n.recip()
        }
    }

    /// Rotation about the z axis by `angle`.
    pub fn rotate_z(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, c: T) -> Self {
        Self::new(self.x * c, self.y * c, self.z * c)
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    /// Finite film; the default, matching a Hall bar.
    #[default]
    Open,
}

/// Square grid of unit spins, row-major with `index = y * nx + x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinLattice<T> {
    nx: usize,
    ny: usize,
    cell_size: T,
    boundary: Boundary,
    spins: Vec<Vec3<T>>,
}

impl<T: Scalar> SpinLattice<T> {
    /// Uniform lattice with every spin equal to `m` (normalised).
    pub fn uniform(nx: usize, ny: usize, cell_size: T, m: Vec3<T>) -> Result<Self> {
        Self::from_spins(nx, ny, cell_size, vec![m.normalized(); nx * ny])
    }

    /// Takes ownership of `spins`, normalising each one.
    pub fn from_spins(nx: usize, ny: usize, cell_size: T, mut spins: Vec<Vec3<T>>) -> Result<Self> {
        if nx < MIN_EXTENT || ny < MIN_EXTENT {
            return Err(Error::InvalidLattice(format!(
                "grid {nx}x{ny} is below the minimum {MIN_EXTENT}x{MIN_EXTENT}"
            )));
        }
        if spins.len() != nx * ny {
            return Err(Error::InvalidLattice(format!("{} spins for a {nx}x{ny} grid", spins.len())));
        }
        if !(cell_size > T::zero()) || !cell_size.is_finite() {
            return Err(Error::InvalidLattice(format!("cell size {cell_size} must be positive")));
        }
        for (i, s) in spins.iter_mut().enumerate() {
            let n = s.norm();
            if !(n > T::zero()) || !n.is_finite() {
                return Err(Error::InvalidLattice(format!("spin {i} has norm {n}")));
            }
            *s = *s * n.recip();
        }
        Ok(Self { nx, ny, cell_size, boundary: Boundary::Open, spins })
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_cell_size(mut self, cell_size: T) -> Self {
        assert!(cell_size > T::zero(), "cell size must be positive");
        self.cell_size = cell_size;
        self
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn cell_size(&self) -> T {
        self.cell_size
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spins(&self) -> &[Vec3<T>] {
        &self.spins
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.nx + x
    }

    #[inline]
    pub fn spin(&self, x: usize, y: usize) -> Vec3<T> {
        self.spins[self.index(x, y)]
    }

    /// Sets one spin (normalised on the way in).
    pub fn set_spin(&mut self, x: usize, y: usize, m: Vec3<T>) {
        let i = self.index(x, y);
        self.spins[i] = m.normalized();
    }

    /// Mutable access for integrators; callers must restore unit norms.
    pub(crate) fn spins_mut(&mut self) -> &mut [Vec3<T>] {
        &mut self.spins
    }

    /// Film area in µm².
    pub fn area(&self) -> T {
        T::from_usize_lossy(self.nx * self.ny) * self.cell_size * self.cell_size
    }

    pub fn mean_mz(&self) -> T {
        self.spins.iter().map(|s| s.z).sum::<T>() / T::from_usize_lossy(self.len())
    }

    /// Largest `| |m| - 1 |` over the lattice.
    pub fn max_norm_error(&self) -> T {
        self.spins.iter().fold(T::zero(), |m, s| m.max((s.norm() - T::one()).abs()))
    }

    /// Global spin flip `m -> -m`.
    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        out.spins.iter_mut().for_each(|s| *s = -*s);
        out
    }

    /// Rigid rotation of every spin about z.
    pub fn rotated_z(&self, angle: T) -> Self {
        let mut out = self.clone();
        out.spins.iter_mut().for_each(|s| *s = s.rotate_z(angle));
        out
    }

    /// Cyclic translation of the texture by `(dx, dy)` cells.
    pub fn translated(&self, dx: usize, dy: usize) -> Self {
        let mut out = self.clone();
        for y in 0..self.ny {
            for x in 0..self.nx {
                let j = out.index((x + dx) % self.nx, (y + dy) % self.ny);
                out.spins[j] = self.spin(x, y);
            }
        }
        out
    }

    /// Neighbour index in direction `(dx, dy)` (one of the four axis steps),
    /// honouring the boundary condition.
    #[inline]
    pub fn neighbor(&self, x: usize, y: usize, dx: isize, dy: isize) -> Option<usize> {
        let wrap = |c: usize, d: isize, n: usize| -> Option<usize> {
            let v = c as isize + d;
            if v >= 0 && (v as usize) < n {
                Some(v as usize)
            } else if self.boundary == Boundary::Periodic {
                Some(v.rem_euclid(n as isize) as usize)
            } else {
                None
            }
        };
        Some(self.index(wrap(x, dx, self.nx)?, wrap(y, dy, self.ny)?))
    }
}

/// Material and integration parameters of the lattice model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams<T> {
    /// Exchange constant; the energy unit.
    pub exchange_j: T,
    pub dmi_d: T,
    pub anisotropy_k: T,
    /// Dimensionless Zeeman strength per Oe.
    pub field_scale: T,
    pub damping_alpha: T,
    /// Thermal noise strength (dimensionless, `k_B T / J`).
    pub temperature: T,
    pub dt: T,
}

impl<T: Scalar> Default for MaterialParams<T> {
    fn default() -> Self {
        Self {
            exchange_j: T::one(),
            dmi_d: T::lit(0.6),
            anisotropy_k: T::lit(0.15),
            field_scale: T::lit(0.01),
            damping_alpha: T::lit(0.3),
            temperature: T::zero(),
            dt: T::lit(0.01),
        }
    }
}

impl<T: Scalar> MaterialParams<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(what.to_string()));
        let all = [
            self.exchange_j,
            self.dmi_d,
            self.anisotropy_k,
            self.field_scale,
            self.damping_alpha,
            self.temperature,
            self.dt,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite material parameter");
        }
        if !(self.damping_alpha > T::zero()) {
            return bad("damping_alpha must be > 0");
        }
        if !(self.dt > T::zero()) {
            return bad("dt must be > 0");
        }
        if self.dmi_d < T::zero() || self.anisotropy_k < T::zero() {
            return bad("dmi_d and anisotropy_k must be >= 0");
        }
        if self.temperature < T::zero() {
            return bad("temperature must be >= 0");
        }
        if self.dt * self.field_bound(T::zero()) >= T::lit(STABILITY_BOUND) {
            return Err(Error::InvalidParams(format!(
                "dt * max|H_eff| = {} exceeds the stability bound {STABILITY_BOUND}",
                self.dt * self.field_bound(T::zero())
            )));
        }
        Ok(())
    }

    /// Upper bound on `|H_eff|` at any site for an applied field of `h_oe`.
    ///
    /// Four neighbours contribute at most `J` (exchange) and `D` (DMI) each,
    /// anisotropy at most `2K`, Zeeman `field_scale * |h_oe|`.
    pub fn field_bound(&self, h_oe: T) -> T {
        let four = T::lit(4.0);
        four * self.exchange_j.abs() + four * self.dmi_d + T::lit(2.0) * self.anisotropy_k + (self.field_scale * h_oe).abs()
    }

    /// Largest time step that keeps `dt * field_bound(h_oe)` under the
    /// stability bound with a 10 % margin.
    pub fn max_stable_dt(&self, h_oe: T) -> T {
        T::lit(0.9 * STABILITY_BOUND) / self.field_bound(h_oe)
    }
}
