//! File formats: binary spike files, spike CSV ingest and trajectory CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{Series, SpikeStream, Trajectory, DEFAULT_BIN_MS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SPIKE_MAGIC: &[u8; 4] = b"SNNS";
pub const SPIKE_VERSION: u16 = 1;

/// Little-endian header followed by a time-major `u8` payload.
pub fn write_spikes(w: &mut impl Write, spikes: &SpikeStream) -> Result<()> {
    let channels =
        u32::try_from(spikes.channels()).map_err(|_| Error::Format("too many channels".into()))?;
    let steps =
        u32::try_from(spikes.len()).map_err(|_| Error::Format("too many timesteps".into()))?;
    w.write_all(SPIKE_MAGIC)?;
    w.write_all(&SPIKE_VERSION.to_le_bytes())?;
    w.write_all(&channels.to_le_bytes())?;
    w.write_all(&steps.to_le_bytes())?;
    w.write_all(&(spikes.bin_ms() as f32).to_le_bytes())?;
    w.write_all(spikes.counts().as_slice())?;
    Ok(())
}

pub fn read_spikes(r: &mut impl Read) -> Result<SpikeStream> {
    let mut header = [0u8; 18];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("spike file truncated in header".into()))?;
    if &header[..4] != SPIKE_MAGIC {
        return Err(Error::Format("not a spike file (bad magic)".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != SPIKE_VERSION {
        return Err(Error::Format(format!(
            "unsupported spike file version {version}"
        )));
    }
    let channels = u32::from_le_bytes(header[6..10].try_into().expect("4 bytes")) as usize;
    let steps = u32::from_le_bytes(header[10..14].try_into().expect("4 bytes")) as usize;
    let bin_ms = f32::from_le_bytes(header[14..18].try_into().expect("4 bytes"));
    if !(bin_ms > 0.0 && bin_ms.is_finite()) {
        return Err(Error::Format(format!(
            "bin width must be positive, got {bin_ms}"
        )));
    }
    let expected = channels
        .checked_mul(steps)
        .ok_or_else(|| Error::Format("payload size overflows".into()))?;
    let mut payload = Vec::with_capacity(expected);
    r.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header promises {channels} x {steps} = {expected}",
            payload.len()
        )));
    }
    SpikeStream::from_time_major(channels, payload, bin_ms as f64)
}

pub fn save_spikes(path: impl AsRef<Path>, spikes: &SpikeStream) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_spikes(&mut w, spikes)?;
    w.flush()?;
    Ok(())
}

pub fn load_spikes(path: impl AsRef<Path>) -> Result<SpikeStream> {
    read_spikes(&mut BufReader::new(File::open(path)?))
}

/// Headerless CSV, one row per bin, one column per channel. Counts above
/// 255 saturate with a warning.
pub fn ingest_csv_reader(r: impl Read, bin_ms: f64) -> Result<SpikeStream> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut data = Vec::new();
    let mut channels = None;
    let mut saturated = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        match channels {
            None => channels = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Ingest {
                    row,
                    col: record.len().min(c),
                    msg: format!("row has {} columns, expected {c}", record.len()),
                })
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let value: i64 = cell.parse().map_err(|_| Error::Ingest {
                row,
                col,
                msg: format!("{cell:?} is not an integer"),
            })?;
            if value < 0 {
                return Err(Error::Ingest {
                    row,
                    col,
                    msg: format!("negative spike count {value}"),
                });
            }
            if value > u8::MAX as i64 {
                saturated += 1;
            }
            data.push(value.min(u8::MAX as i64) as u8);
        }
    }
    if saturated > 0 {
        log::warn!("{saturated} spike counts exceeded 255 and were saturated");
    }
    let channels = channels.ok_or(Error::Empty("spike CSV"))?;
    SpikeStream::new(Series::new(channels, data)?, bin_ms)
}

pub fn ingest_csv(path: impl AsRef<Path>, bin_ms: f64) -> Result<SpikeStream> {
    ingest_csv_reader(BufReader::new(File::open(path)?), bin_ms)
}

/// Load either format, chosen by extension (`.csv` or anything else).
pub fn load_spike_input(path: impl AsRef<Path>, bin_ms: f64) -> Result<SpikeStream> {
    let path = path.as_ref();
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        ingest_csv(path, bin_ms)
    } else {
        load_spikes(path)
    }
}

pub fn write_trajectory_csv<T: Scalar>(w: impl Write, traj: &Trajectory<T>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t_ms", "vx", "vy"])?;
    for (i, s) in traj.samples.iter().enumerate() {
        out.write_record([
            traj.time_ms(i).to_string(),
            s[0].as_f64().to_string(),
            s[1].as_f64().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_trajectory<T: Scalar>(path: impl AsRef<Path>, traj: &Trajectory<T>) -> Result<()> {
    write_trajectory_csv(BufWriter::new(File::create(path)?), traj)
}

/// Reads `t_ms,vx,vy`. Timestamps must increase with a constant stride; a
/// file with fewer than two rows gets the default bin width.
pub fn read_trajectory_csv(r: impl Read) -> Result<Trajectory<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t_ms", "vx", "vy"] {
        return Err(Error::Format(format!(
            "trajectory header must be t_ms,vx,vy, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut cells = [0.0f64; 3];
        for (col, cell) in cells.iter_mut().enumerate() {
            let text = record.get(col).ok_or_else(|| Error::Ingest {
                row,
                col,
                msg: "missing column".into(),
            })?;
            *cell = text.parse().map_err(|_| Error::Ingest {
                row,
                col,
                msg: format!("{text:?} is not a number"),
            })?;
        }
        times.push(cells[0]);
        samples.push([cells[1], cells[2]]);
    }
    let start_ms = times.first().copied().unwrap_or(0.0);
    let step_ms = if times.len() >= 2 {
        times[1] - times[0]
    } else {
        DEFAULT_BIN_MS
    };
    if step_ms <= 0.0 {
        return Err(Error::Format("t_ms must be strictly increasing".into()));
    }
    for (i, &t) in times.iter().enumerate() {
        let expected = start_ms + i as f64 * step_ms;
        if (t - expected).abs() > 1e-6 * step_ms.max(1.0) {
            return Err(Error::Format(format!(
                "row {i}: t_ms {t} breaks the constant stride of {step_ms} ms"
            )));
        }
    }
    Ok(Trajectory::new(start_ms, step_ms, samples))
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory<f64>> {
    read_trajectory_csv(BufReader::new(File::open(path)?))
}
