//! Lattice Hamiltonian
//!
//! ```text
//! E = -J Σ_<ij> m_i·m_j - D Σ_<ij> (ẑ × ê_ij)·(m_i × m_j) - K Σ_i (m_i^z)² - h Σ_i m_i^z
//! ```
//!
//! with each nearest-neighbour bond counted once, `ê_ij` the unit step from
//! `i` to `j` and `h = field_scale · h_oe`. The effective field is the exact
//! negative gradient `-∂E/∂m_i`.

use super::{MaterialParams, SpinLattice, Vec3};
use crate::scalar::Scalar;

/// Energy split by interaction.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyTerms<T> {
    pub exchange: T,
    pub dmi: T,
    pub anisotropy: T,
    pub zeeman: T,
}

impl<T: Scalar> EnergyTerms<T> {
    pub fn total(&self) -> T {
        self.exchange + self.dmi + self.anisotropy + self.zeeman
    }
}

pub fn energy_terms<T: Scalar>(lattice: &SpinLattice<T>, params: &MaterialParams<T>, h_oe: T) -> EnergyTerms<T> {
    let s = lattice.spins();
    let h = params.field_scale * h_oe;
    let (mut exchange, mut dmi, mut anisotropy, mut zeeman) = (T::zero(), T::zero(), T::zero(), T::zero());
    for y in 0..lattice.ny() {
        for x in 0..lattice.nx() {
            let i = lattice.index(x, y);
            let m = s[i];
            if let Some(j) = lattice.neighbor(x, y, 1, 0) {
                let n = s[j];
                exchange -= m.dot(n);
                // (ẑ × x̂) = ŷ
                dmi -= m.z * n.x - m.x * n.z;
            }
            if let Some(j) = lattice.neighbor(x, y, 0, 1) {
                let n = s[j];
                exchange -= m.dot(n);
                // (ẑ × ŷ) = -x̂
                dmi += m.y * n.z - m.z * n.y;
            }
            anisotropy -= m.z * m.z;
            zeeman -= m.z;
        }
    }
    EnergyTerms {
        exchange: params.exchange_j * exchange,
        dmi: params.dmi_d * dmi,
        anisotropy: params.anisotropy_k * anisotropy,
        zeeman: h * zeeman,
    }
}

pub fn total_energy<T: Scalar>(lattice: &SpinLattice<T>, params: &MaterialParams<T>, h_oe: T) -> T {
    energy_terms(lattice, params, h_oe).total()
}

pub fn effective_field<T: Scalar>(lattice: &SpinLattice<T>, params: &MaterialParams<T>, h_oe: T) -> Vec<Vec3<T>> {
    let mut out = vec![Vec3::zero(); lattice.len()];
    effective_field_into(lattice, lattice.spins(), params, h_oe, &mut out);
    out
}

/// Effective field of `spins` laid out on `geometry`'s grid, written to `out`.
///
/// `spins` need not be the lattice's own spins, which lets integrators
/// evaluate trial states without cloning the lattice.
pub fn effective_field_into<T: Scalar>(
    geometry: &SpinLattice<T>,
    spins: &[Vec3<T>],
    params: &MaterialParams<T>,
    h_oe: T,
    out: &mut [Vec3<T>],
) {
    let (nx, ny) = (geometry.nx(), geometry.ny());
    assert_eq!(spins.len(), nx * ny);
    assert_eq!(out.len(), nx * ny);
    let j = params.exchange_j;
    let d = params.dmi_d;
    let two_k = params.anisotropy_k + params.anisotropy_k;
    let h = params.field_scale * h_oe;
    let zero = Vec3::zero();
    let periodic = geometry.boundary() == super::Boundary::Periodic;

    #[inline(always)]
    fn site<T: Scalar>(m: Vec3<T>, r: Vec3<T>, l: Vec3<T>, u: Vec3<T>, dn: Vec3<T>, j: T, d: T, two_k: T, h: T) -> Vec3<T> {
        let ex = (r + l) + (u + dn);
        // Σ_j m_j × (ẑ × ê_ij) over the four neighbours.
        let dm = Vec3::new(l.z - r.z, dn.z - u.z, (r.x - l.x) + (u.y - dn.y));
        Vec3::new(j * ex.x + d * dm.x, j * ex.y + d * dm.y, j * ex.z + d * dm.z + two_k * m.z + h)
    }

    for y in 0..ny {
        let row = y * nx;
        let up_row = if y + 1 < ny { Some(row + nx) } else if periodic { Some(0) } else { None };
        let down_row = if y > 0 { Some(row - nx) } else if periodic { Some((ny - 1) * nx) } else { None };
        let cur = &spins[row..row + nx];
        let up = up_row.map(|k| &spins[k..k + nx]);
        let dn = down_row.map(|k| &spins[k..k + nx]);
        let dst = &mut out[row..row + nx];
        match (up, dn) {
            (Some(up), Some(dn)) => {
                for x in 1..nx - 1 {
                    dst[x] = site(cur[x], cur[x + 1], cur[x - 1], up[x], dn[x], j, d, two_k, h);
                }
            }
            _ => {
                for x in 1..nx - 1 {
                    let u = up.map_or(zero, |s| s[x]);
                    let w = dn.map_or(zero, |s| s[x]);
                    dst[x] = site(cur[x], cur[x + 1], cur[x - 1], u, w, j, d, two_k, h);
                }
            }
        }
        for x in [0, nx - 1] {
            let r = if x + 1 < nx { cur[x + 1] } else if periodic { cur[0] } else { zero };
            let l = if x > 0 { cur[x - 1] } else if periodic { cur[nx - 1] } else { zero };
            let u = up.map_or(zero, |s| s[x]);
            let w = dn.map_or(zero, |s| s[x]);
            dst[x] = site(cur[x], r, l, u, w, j, d, two_k, h);
        }
    }
}
