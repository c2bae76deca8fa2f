//! Noise dumps and solution exports.
//!
//! Noise dump: `L: f64, N: u64, seed: u64`, then N coefficients as
//! `(re, im)` f64 pairs in FFT order, all little-endian.
//!
//! Record dump: `L: f64, N: u64, frames: u64`, then per frame `t: f64` and
//! N coefficient pairs in the same layout.

use std::io::{self, Read, Write};

use fpam_core::noise::NoiseRealization;
use fpam_core::solver::EvolutionRecord;
use fpam_core::{GridSpec, SpectralFunction};
use num_complex::Complex64;

use crate::report::fmt_f64;

fn invalid_data(e: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn write_coeffs(w: &mut impl Write, f: &SpectralFunction) -> io::Result<()> {
    for c in f.coeffs() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_coeffs(r: &mut impl Read, spec: GridSpec) -> io::Result<SpectralFunction> {
    let coeffs = (0..spec.points())
        .map(|_| Ok(Complex64::new(read_f64(r)?, read_f64(r)?)))
        .collect::<io::Result<Vec<_>>>()?;
    SpectralFunction::new(spec, coeffs).map_err(invalid_data)
}

fn read_spec(r: &mut impl Read) -> io::Result<GridSpec> {
    let l = read_f64(r)?;
    let n = read_u64(r)?;
    let n = usize::try_from(n).map_err(invalid_data)?;
    GridSpec::new(l, n).map_err(invalid_data)
}

pub fn write_noise(w: &mut impl Write, noise: &NoiseRealization) -> io::Result<()> {
    let spec = noise.spec();
    w.write_all(&spec.period().to_le_bytes())?;
    w.write_all(&(spec.points() as u64).to_le_bytes())?;
    w.write_all(&noise.seed().to_le_bytes())?;
    write_coeffs(w, noise.xi())
}

pub fn read_noise(r: &mut impl Read) -> io::Result<NoiseRealization> {
    let spec = read_spec(r)?;
    let seed = read_u64(r)?;
    Ok(NoiseRealization::from_parts(seed, read_coeffs(r, spec)?))
}

pub fn write_record_binary(w: &mut impl Write, record: &EvolutionRecord) -> io::Result<()> {
    let spec = match record.fields().first() {
        Some(f) => f.spec(),
        None => return Err(invalid_data("empty record")),
    };
    w.write_all(&spec.period().to_le_bytes())?;
    w.write_all(&(spec.points() as u64).to_le_bytes())?;
    w.write_all(&(record.len() as u64).to_le_bytes())?;
    for (t, f) in record.iter() {
        w.write_all(&t.to_le_bytes())?;
        write_coeffs(w, &f.to_spectral())?;
    }
    Ok(())
}

pub fn read_record_binary(r: &mut impl Read) -> io::Result<EvolutionRecord> {
    let spec = read_spec(r)?;
    let frames = read_u64(r)?;
    let mut times = Vec::new();
    let mut fields = Vec::new();
    for _ in 0..frames {
        times.push(read_f64(r)?);
        fields.push(read_coeffs(r, spec)?.to_physical());
    }
    EvolutionRecord::new(times, fields).map_err(invalid_data)
}

/// Long-format CSV with columns `t, x, value`.
pub fn write_record_csv(w: impl Write, record: &EvolutionRecord) -> io::Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["t", "x", "value"])?;
    for (t, f) in record.iter() {
        let spec = f.spec();
        for (j, v) in f.values().iter().enumerate() {
            out.write_record([fmt_f64(t), fmt_f64(spec.node(j)), fmt_f64(*v)])?;
        }
    }
    out.flush()
}
