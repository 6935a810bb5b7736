//! Binary model and dataset files.
//!
//! Both start with an 8-byte magic and a `u32` version; every number after
//! that is little-endian (`u64` counts, `f64` reals).
//!
//! Model: layer count, layer sizes, `delta`, dropout rate, seed, `K_DL`,
//! surface size, active count, active indices, then per layer the weights in
//! row-major order followed by the biases.
//!
//! Dataset: `M_bar`, `K_DL`, `N_cb`, `S`, noise power, `delta`, surface size,
//! active indices, then `S` records of scenario id, status byte (0 ok,
//! 1 all-zero), raw max rate, `2 M_bar K_DL` descriptor reals and `N_cb`
//! targets.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};

use super::dataset::{Dataset, DatasetSample, TargetStatus};
use super::mlp::MlpModel;
use super::predict::BeamPredictor;
use crate::surface::ActiveSet;
use crate::{Error, Result};

const MODEL_MAGIC: &[u8; 8] = b"LISBMLP\0";
const DATASET_MAGIC: &[u8; 8] = b"LISBDSET";
const VERSION: u32 = 1;
// Guards allocations against corrupt counts.
const MAX_COUNT: u64 = 1 << 32;

fn write_active<W: Write>(w: &mut W, active: &ActiveSet) -> Result<()> {
    w.write_u64::<LE>(active.total_elements() as u64)?;
    w.write_u64::<LE>(active.len() as u64)?;
    for &i in active.indices() {
        w.write_u64::<LE>(i as u64)?;
    }
    Ok(())
}

fn read_count<R: Read>(r: &mut R, what: &str) -> Result<usize> {
    let n = r.read_u64::<LE>()?;
    if n > MAX_COUNT {
        return Err(Error::Format(format!("implausible {what} {n}")));
    }
    Ok(n as usize)
}

fn read_active<R: Read>(r: &mut R) -> Result<ActiveSet> {
    let total = read_count(r, "surface size")?;
    let n = read_count(r, "active count")?;
    let indices = (0..n).map(|_| read_count(r, "active index")).collect::<Result<Vec<_>>>()?;
    ActiveSet::new(indices, total)
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 8]) -> Result<()> {
    let mut got = [0u8; 8];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(Error::Format(format!("bad magic {:?}, expected {:?}", got, magic)));
    }
    let version = r.read_u32::<LE>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    r.read_f64_into::<LE>(&mut out)?;
    Ok(out)
}

pub fn write_predictor<W: Write>(w: &mut W, p: &BeamPredictor) -> Result<()> {
    let m = &p.model;
    w.write_all(MODEL_MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    w.write_u64::<LE>(m.layer_sizes().len() as u64)?;
    for &s in m.layer_sizes() {
        w.write_u64::<LE>(s as u64)?;
    }
    w.write_f64::<LE>(p.delta)?;
    w.write_f64::<LE>(m.dropout_rate())?;
    w.write_u64::<LE>(p.seed)?;
    w.write_u64::<LE>(p.k_dl as u64)?;
    write_active(w, &p.active)?;
    for (wt, b) in m.weights().iter().zip(m.biases()) {
        for x in wt.transpose().iter() {
            w.write_f64::<LE>(*x)?;
        }
        for x in b.iter() {
            w.write_f64::<LE>(*x)?;
        }
    }
    Ok(())
}

pub fn read_predictor<R: Read>(r: &mut R) -> Result<BeamPredictor> {
    read_header(r, MODEL_MAGIC)?;
    let n_layers = read_count(r, "layer count")?;
    let sizes = (0..n_layers).map(|_| read_count(r, "layer size")).collect::<Result<Vec<_>>>()?;
    if sizes.len() < 2 {
        return Err(Error::Format("model needs at least two layer sizes".into()));
    }
    let delta = r.read_f64::<LE>()?;
    let dropout = r.read_f64::<LE>()?;
    let seed = r.read_u64::<LE>()?;
    let k_dl = read_count(r, "K_DL")?;
    let active = read_active(r)?;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        weights.push(DMatrix::from_row_slice(fan_out, fan_in, &read_f64s(r, fan_in * fan_out)?));
        biases.push(DVector::from_vec(read_f64s(r, fan_out)?));
    }
    let model = MlpModel::from_parameters(weights, biases, dropout)?;
    if model.input_len() != 2 * active.len() * k_dl {
        return Err(Error::Format(format!(
            "input size {} does not match 2 x {} sensors x {k_dl} subcarriers",
            model.input_len(),
            active.len()
        )));
    }
    Ok(BeamPredictor {
        model,
        delta,
        active,
        k_dl,
        seed,
    })
}

pub fn save_predictor(path: &Path, p: &BeamPredictor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_predictor(&mut w, p)?;
    w.flush()?;
    Ok(())
}

pub fn load_predictor(path: &Path) -> Result<BeamPredictor> {
    read_predictor(&mut BufReader::new(File::open(path)?))
}

pub fn write_dataset<W: Write>(w: &mut W, d: &Dataset) -> Result<()> {
    w.write_all(DATASET_MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    w.write_u64::<LE>(d.active.len() as u64)?;
    w.write_u64::<LE>(d.k_dl as u64)?;
    w.write_u64::<LE>(d.num_codewords as u64)?;
    w.write_u64::<LE>(d.samples.len() as u64)?;
    w.write_f64::<LE>(d.noise_power)?;
    w.write_f64::<LE>(d.delta)?;
    w.write_u64::<LE>(d.active.total_elements() as u64)?;
    for &i in d.active.indices() {
        w.write_u64::<LE>(i as u64)?;
    }
    for s in &d.samples {
        w.write_u64::<LE>(s.scenario_id)?;
        w.write_u8(match s.status {
            TargetStatus::Ok => 0,
            TargetStatus::AllZero => 1,
        })?;
        w.write_f64::<LE>(s.raw_max_rate)?;
        for x in s.descriptor.iter().chain(&s.targets) {
            w.write_f64::<LE>(*x)?;
        }
    }
    Ok(())
}

pub fn read_dataset<R: Read>(r: &mut R) -> Result<Dataset> {
    read_header(r, DATASET_MAGIC)?;
    let m_bar = read_count(r, "active count")?;
    let k_dl = read_count(r, "K_DL")?;
    let num_codewords = read_count(r, "codebook size")?;
    let count = read_count(r, "sample count")?;
    let noise_power = r.read_f64::<LE>()?;
    let delta = r.read_f64::<LE>()?;
    let total = read_count(r, "surface size")?;
    let indices = (0..m_bar).map(|_| read_count(r, "active index")).collect::<Result<Vec<_>>>()?;
    let active = ActiveSet::new(indices, total)?;
    let input_len = 2 * m_bar * k_dl;
    let samples = (0..count)
        .map(|_| {
            let scenario_id = r.read_u64::<LE>()?;
            let status = match r.read_u8()? {
                0 => TargetStatus::Ok,
                1 => TargetStatus::AllZero,
                s => return Err(Error::Format(format!("bad sample status {s}"))),
            };
            Ok(DatasetSample {
                scenario_id,
                status,
                raw_max_rate: r.read_f64::<LE>()?,
                descriptor: read_f64s(r, input_len)?,
                targets: read_f64s(r, num_codewords)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        active,
        k_dl,
        num_codewords,
        noise_power,
        delta,
        samples,
    })
}

pub fn save_dataset(path: &Path, d: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(&mut w, d)?;
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(&mut BufReader::new(File::open(path)?))
}
