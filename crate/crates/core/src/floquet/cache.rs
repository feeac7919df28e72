//! Binary cache of [`FloquetSolution`] values.
//!
//! Layout (little-endian): magic `LZSFLQ01`, `u32` dimension `D`, `u32`
//! sample count `N_t`, `f64` ω, then `D` quasienergies, the monodromy and
//! the `N_t` mode samples as column-major `(re, im)` pairs.

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{FloquetSolution, DEGENERACY_TOL};
use crate::linalg::{CMatrix, C64};

const MAGIC: &[u8; 8] = b"LZSFLQ01";

/// Hex SHA-256 of arbitrary key material, e.g. serialized parameters and
/// numerical settings.
pub fn cache_key(material: &[u8]) -> String {
    let digest = Sha256::digest(material);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.flq"))
}

fn write_matrix(w: &mut impl Write, m: &CMatrix) -> io::Result<()> {
    for z in m.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_matrix(r: &mut impl Read, d: usize) -> io::Result<CMatrix> {
    let mut v = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        v.push(C64::new(re, im));
    }
    Ok(CMatrix::from_column_slice(d, d, &v))
}

pub fn write_solution(w: &mut impl Write, sol: &FloquetSolution) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(sol.dim() as u32).to_le_bytes())?;
    w.write_all(&(sol.n_t() as u32).to_le_bytes())?;
    w.write_all(&sol.omega.to_le_bytes())?;
    for e in &sol.quasienergies {
        w.write_all(&e.to_le_bytes())?;
    }
    write_matrix(w, &sol.monodromy)?;
    for s in &sol.mode_samples {
        write_matrix(w, s)?;
    }
    Ok(())
}

pub fn read_solution(r: &mut impl Read) -> io::Result<FloquetSolution> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not a Floquet cache file"));
    }
    let d = read_u32(r)? as usize;
    let n_t = read_u32(r)? as usize;
    let omega = read_f64(r)?;
    let quasienergies = (0..d).map(|_| read_f64(r)).collect::<io::Result<Vec<_>>>()?;
    let monodromy = read_matrix(r, d)?;
    let mode_samples = (0..n_t).map(|_| read_matrix(r, d)).collect::<io::Result<Vec<_>>>()?;
    let tol = DEGENERACY_TOL * omega;
    let mut degenerate_pairs = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            if super::quasienergy_distance(quasienergies[a], quasienergies[b], omega) < tol {
                degenerate_pairs.push((a, b));
            }
        }
    }
    Ok(FloquetSolution { quasienergies, monodromy, mode_samples, omega, degenerate_pairs })
}

pub fn save(path: &Path, sol: &FloquetSolution) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    write_solution(&mut f, sol)?;
    f.flush()
}

pub fn load(path: &Path) -> io::Result<FloquetSolution> {
    let mut f = io::BufReader::new(std::fs::File::open(path)?);
    read_solution(&mut f)
}
