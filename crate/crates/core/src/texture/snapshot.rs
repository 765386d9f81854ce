//! Texture snapshot files.
//!
//! ```text
//! # skyrc-texture 1 {"nx":64,"ny":64,"cell_size":0.625,"boundary":"open","params":{...}}
//! x,y,mx,my,mz
//! 0,0,0,0,1
//! ...
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Boundary, MaterialParams, SpinLattice, Vec3};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# skyrc-texture";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub nx: usize,
    pub ny: usize,
    pub cell_size: f64,
    pub boundary: Boundary,
    #[serde(default)]
    pub params: Option<MaterialParams<f64>>,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub lattice: SpinLattice<f64>,
}

pub fn write_snapshot<T: Scalar>(
    path: &Path,
    lattice: &SpinLattice<T>,
    params: Option<&MaterialParams<T>>,
) -> Result<()> {
    let header = SnapshotHeader {
        nx: lattice.nx(),
        ny: lattice.ny(),
        cell_size: lattice.cell_size().as_f64(),
        boundary: lattice.boundary(),
        params: params.map(|p| MaterialParams {
            exchange_j: p.exchange_j.as_f64(),
            dmi_d: p.dmi_d.as_f64(),
            anisotropy_k: p.anisotropy_k.as_f64(),
            field_scale: p.field_scale.as_f64(),
            damping_alpha: p.damping_alpha.as_f64(),
            temperature: p.temperature.as_f64(),
            dt: p.dt.as_f64(),
        }),
    };
    let io = |e| Error::io(path, e);
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    let json = serde_json::to_string(&header).expect("header serialises");
    writeln!(w, "{MAGIC} {SNAPSHOT_FORMAT_VERSION} {json}").map_err(io)?;
    writeln!(w, "x,y,mx,my,mz").map_err(io)?;
    for y in 0..lattice.ny() {
        for x in 0..lattice.nx() {
            let m = lattice.spin(x, y);
            writeln!(w, "{x},{y},{},{},{}", m.x.as_f64(), m.y.as_f64(), m.z.as_f64()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let mut next_line = || -> Result<Option<String>> { lines.next().transpose().map_err(|e| Error::io(path, e)) };

    let first = next_line()?.ok_or_else(|| Error::format(path, "empty file"))?;
    let rest = first.strip_prefix(MAGIC).ok_or_else(|| Error::format(path, "missing texture header"))?;
    let (version, json) = rest
        .trim_start()
        .split_once(' ')
        .ok_or_else(|| Error::format(path, "malformed header line"))?;
    if version.parse::<u32>().ok() != Some(SNAPSHOT_FORMAT_VERSION) {
        return Err(Error::format(path, format!("unsupported snapshot version {version}")));
    }
    let header: SnapshotHeader =
        serde_json::from_str(json).map_err(|e| Error::format(path, format!("header: {e}")))?;
    if next_line()?.as_deref().map(str::trim) != Some("x,y,mx,my,mz") {
        return Err(Error::format(path, "missing column header"));
    }

    let mut spins = vec![None; header.nx * header.ny];
    while let Some(line) = next_line()? {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let parse_err = || Error::format(path, format!("bad row: {line}"));
        if f.len() != 5 {
            return Err(parse_err());
        }
        let x: usize = f[0].trim().parse().map_err(|_| parse_err())?;
        let y: usize = f[1].trim().parse().map_err(|_| parse_err())?;
        let v: Vec<f64> = f[2..].iter().map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| parse_err())?;
        if x >= header.nx || y >= header.ny {
            return Err(parse_err());
        }
        spins[y * header.nx + x] = Some(Vec3::new(v[0], v[1], v[2]));
    }
    let spins: Vec<Vec3<f64>> = spins
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| Error::format(path, "missing spin rows"))?;
    let lattice =
        SpinLattice::from_spins(header.nx, header.ny, header.cell_size, spins)?.with_boundary(header.boundary);
    Ok(Snapshot { header, lattice })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::texture::{seed_texture, SkyrmionSeed, Texture};

    #[test]
    fn snapshot_round_trip() {
        let dir = std::env::temp_dir().join(format!("skyrc-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let lat = seed_texture::<f64>(&Texture::Skyrmion(SkyrmionSeed::new(8.0, 8.0, 4.0)), 16, 16)
            .unwrap()
            .with_cell_size(0.625)
            .with_boundary(Boundary::Periodic);
        write_snapshot(&path, &lat, Some(&MaterialParams::default())).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.header.nx, 16);
        assert_eq!(back.header.boundary, Boundary::Periodic);
        assert!(back.header.params.is_some());
        for (a, b) in back.lattice.spins().iter().zip(lat.spins()) {
            assert!((*a - *b).norm() < 1e-12);
        }
        std::fs::write(&path, "x,y,mx,my,mz\n").unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Format { .. })));
        std::fs::remove_dir_all(&dir).ok();
    }
}
