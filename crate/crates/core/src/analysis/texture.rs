//! Texture diagnostics: topological charge, skyrmion counting and density.

use serde::{Deserialize, Serialize};

use crate::texture::{Boundary, SpinLattice, Vec3};
use crate::scalar::Scalar;

/// Particle-size threshold separating skyrmions from domains, µm².
pub const SKYRMION_MAX_AREA_UM2: f64 = 36.0;

/// Default binarisation level on `m_z`.
pub const DEFAULT_MZ_THRESHOLD: f64 = 0.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureReport {
    pub skyrmion_count: usize,
    pub mean_mz: f64,
    pub topological_charge: f64,
    /// Area of every reversed component, µm², in label order.
    pub particle_sizes: Vec<f64>,
}

/// Signed solid angle subtended by three unit vectors.
#[inline]
fn solid_angle<T: Scalar>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> T {
    let num = a.dot(b.cross(c));
    let den = T::one() + a.dot(b) + b.dot(c) + c.dot(a);
    T::lit(2.0) * num.atan2(den)
}

/// Lattice topological charge: each plaquette is split into two
/// counter-clockwise triangles and their signed spherical areas are summed,
/// divided by 4π. Open films only use interior plaquettes.
pub fn topological_charge<T: Scalar>(lattice: &SpinLattice<T>) -> T {
    let (nx, ny) = (lattice.nx(), lattice.ny());
    let periodic = lattice.boundary() == Boundary::Periodic;
    let (px, py) = if periodic { (nx, ny) } else { (nx - 1, ny - 1) };
    let s = lattice.spins();
    let mut total = T::zero();
    for y in 0..py {
        let y1 = (y + 1) % ny;
        for x in 0..px {
            let x1 = (x + 1) % nx;
            let m00 = s[y * nx + x];
            let m10 = s[y * nx + x1];
            let m11 = s[y1 * nx + x1];
            let m01 = s[y1 * nx + x];
            total += solid_angle(m00, m10, m11) + solid_angle(m00, m11, m01);
        }
    }
    total / (T::lit(4.0) * T::PI())
}

/// Labels 4-connected components of `mask` (row-major `nx × ny`), wrapping
/// across edges when `periodic`. Returns per-cell labels (`usize::MAX` for
/// cells outside the mask) and the cell count of each component.
pub fn label_components(mask: &[bool], nx: usize, ny: usize, periodic: bool) -> (Vec<usize>, Vec<usize>) {
    let mut labels = vec![usize::MAX; mask.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != usize::MAX {
            continue;
        }
        let label = sizes.len();
        let mut size = 0;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % nx, i / nx);
            let mut visit = |j: usize| {
                if mask[j] && labels[j] == usize::MAX {
                    labels[j] = label;
                    stack.push(j);
                }
            };
            if x + 1 < nx {
                visit(i + 1);
            } else if periodic {
                visit(i + 1 - nx);
            }
            if x > 0 {
                visit(i - 1);
            } else if periodic {
                visit(i + nx - 1);
            }
            if y + 1 < ny {
                visit(i + nx);
            } else if periodic {
                visit(x);
            }
            if y > 0 {
                visit(i - nx);
            } else if periodic {
                visit((ny - 1) * nx + x);
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Binarises on `m_z < mz_threshold`, labels 4-connected reversed regions and
/// counts those with area strictly below `max_size_um2` as skyrmions.
pub fn count_skyrmions<T: Scalar>(lattice: &SpinLattice<T>, mz_threshold: f64, max_size_um2: f64) -> TextureReport {
    let mask: Vec<bool> = lattice.spins().iter().map(|s| s.z.as_f64() < mz_threshold).collect();
    let periodic = lattice.boundary() == Boundary::Periodic;
    let (_, sizes) = label_components(&mask, lattice.nx(), lattice.ny(), periodic);
    let cell_area = lattice.cell_size().as_f64().powi(2);
    let particle_sizes: Vec<f64> = sizes.iter().map(|&n| n as f64 * cell_area).collect();
    TextureReport {
        skyrmion_count: particle_sizes.iter().filter(|&&a| a < max_size_um2).count(),
        mean_mz: lattice.mean_mz().as_f64(),
        topological_charge: topological_charge(lattice).as_f64(),
        particle_sizes,
    }
}

/// Time-averaged skyrmion count per µm² of Hall bar.
pub fn mean_skyrmion_density(counts: &[usize], hall_bar_area_um2: f64) -> f64 {
    assert!(!counts.is_empty(), "at least one snapshot is required");
    assert!(hall_bar_area_um2 > 0.0, "Hall-bar area must be positive");
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    mean / hall_bar_area_um2
}
