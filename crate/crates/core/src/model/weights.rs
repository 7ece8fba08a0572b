//! `SNNW` weight files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic  "SNNW"
//! u16    version (1)
//! repeated until EOF, in parameter order:
//!   u16    name length, then UTF-8 name
//!   u8     dtype: 0 = f32, 1 = fixed point
//!   [u8;3] (dtype 1 only) sign, integer and fraction bits
//!   u32    element count
//!   payload: f32 values, or two's-complement raw mantissas stored in
//!            1, 2 or 4 bytes (the smallest that holds the format width)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fxp::{FixedPointFormat, NumberFormat};
use crate::model::config::NetworkConfig;
use crate::model::network::{parameter_specs, NetworkModel};
use crate::scalar::Scalar;

pub const WEIGHT_MAGIC: &[u8; 4] = b"SNNW";
pub const WEIGHT_VERSION: u16 = 1;

const DTYPE_F32: u8 = 0;
const DTYPE_FIXED: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum RecordData {
    F32(Vec<f32>),
    Fixed {
        format: FixedPointFormat,
        raw: Vec<i64>,
    },
}

impl RecordData {
    pub fn len(&self) -> usize {
        match self {
            RecordData::F32(v) => v.len(),
            RecordData::Fixed { raw, .. } => raw.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            RecordData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            RecordData::Fixed { format, raw } => raw.iter().map(|&r| format.value_of(r)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightRecord {
    pub name: String,
    pub data: RecordData,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightFile {
    pub records: Vec<WeightRecord>,
}

fn raw_bytes(format: FixedPointFormat) -> usize {
    match format.width() {
        0..=8 => 1,
        9..=16 => 2,
        _ => 4,
    }
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

impl WeightFile {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(WEIGHT_MAGIC)?;
        w.write_all(&WEIGHT_VERSION.to_le_bytes())?;
        for rec in &self.records {
            let name = rec.name.as_bytes();
            let name_len = u16::try_from(name.len())
                .map_err(|_| Error::Format(format!("parameter name too long: {}", rec.name)))?;
            w.write_all(&name_len.to_le_bytes())?;
            w.write_all(name)?;
            let count = u32::try_from(rec.data.len())
                .map_err(|_| Error::Format(format!("{} has too many elements", rec.name)))?;
            match &rec.data {
                RecordData::F32(values) => {
                    w.write_all(&[DTYPE_F32])?;
                    w.write_all(&count.to_le_bytes())?;
                    for v in values {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
                RecordData::Fixed { format, raw } => {
                    w.write_all(&[
                        DTYPE_FIXED,
                        1,
                        format.integer_bits() as u8,
                        format.fraction_bits() as u8,
                    ])?;
                    w.write_all(&count.to_le_bytes())?;
                    let n = raw_bytes(*format);
                    for &r in raw {
                        if r < format.min_raw() || r > format.max_raw() {
                            return Err(Error::Format(format!(
                                "{}: raw value {r} does not fit {format}",
                                rec.name
                            )));
                        }
                        w.write_all(&r.to_le_bytes()[..n])?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let magic: [u8; 4] = read_exact(&mut r)?;
        if &magic != WEIGHT_MAGIC {
            return Err(Error::Format(format!(
                "bad magic {magic:?}, expected \"SNNW\""
            )));
        }
        let version = u16::from_le_bytes(read_exact(&mut r)?);
        if version != WEIGHT_VERSION {
            return Err(Error::Format(format!(
                "unsupported weight file version {version}"
            )));
        }
        let mut records = Vec::new();
        loop {
            let mut len_buf = [0u8; 2];
            match r.read(&mut len_buf[..1])? {
                0 => break,
                _ => len_buf[1] = read_exact::<_, 1>(&mut r)?[0],
            }
            let name_len = u16::from_le_bytes(len_buf) as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)
                .map_err(|_| Error::Format("truncated parameter name".into()))?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
            let [dtype] = read_exact(&mut r)?;
            let data = match dtype {
                DTYPE_F32 => {
                    let count = u32::from_le_bytes(read_exact(&mut r)?) as usize;
                    let mut values = Vec::with_capacity(count);
                    for _ in 0..count {
                        values.push(f32::from_le_bytes(read_exact(&mut r)?));
                    }
                    RecordData::F32(values)
                }
                DTYPE_FIXED => {
                    let [sign, int, frac] = read_exact(&mut r)?;
                    if sign != 1 {
                        return Err(Error::Format(format!(
                            "{name}: unsigned formats are not supported"
                        )));
                    }
                    let format = FixedPointFormat::new(int as u32, frac as u32)?;
                    let count = u32::from_le_bytes(read_exact(&mut r)?) as usize;
                    let n = raw_bytes(format);
                    let mut raw = Vec::with_capacity(count);
                    for _ in 0..count {
                        let mut buf = [0u8; 8];
                        r.read_exact(&mut buf[..n])
                            .map_err(|_| Error::Format(format!("{name}: truncated payload")))?;
                        // sign-extend from n bytes
                        let shift = 64 - 8 * n as u32;
                        let v = (i64::from_le_bytes(buf) << shift) >> shift;
                        if v < format.min_raw() || v > format.max_raw() {
                            return Err(Error::Format(format!(
                                "{name}: raw {v} out of range for {format}"
                            )));
                        }
                        raw.push(v);
                    }
                    RecordData::Fixed { format, raw }
                }
                other => return Err(Error::Format(format!("{name}: unknown dtype tag {other}"))),
            };
            records.push(WeightRecord { name, data });
        }
        Ok(Self { records })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    /// True when every record is stored as f32.
    pub fn is_float(&self) -> bool {
        self.records
            .iter()
            .all(|r| matches!(r.data, RecordData::F32(_)))
    }
}

impl<T: Scalar> NetworkModel<T> {
    /// Records in the model's weight format.
    pub fn to_weight_file(&self) -> WeightFile {
        let fmt = self.config().weight_format;
        let records = self
            .parameters()
            .into_iter()
            .map(|(spec, values)| {
                let data = match fmt {
                    NumberFormat::Float => {
                        RecordData::F32(values.iter().map(|v| v.as_f64() as f32).collect())
                    }
                    NumberFormat::Fixed(format) => RecordData::Fixed {
                        format,
                        raw: values
                            .iter()
                            .map(|v| format.quantize_raw(v.as_f64()).0)
                            .collect(),
                    },
                };
                WeightRecord {
                    name: spec.name,
                    data,
                }
            })
            .collect();
        WeightFile { records }
    }

    /// Load records that match `config` by name, order and size. A
    /// fixed-point config requires fixed-point records in that format.
    pub fn from_weight_file(config: NetworkConfig, file: &WeightFile) -> Result<Self> {
        let specs = parameter_specs(&config);
        if file.records.len() != specs.len() {
            return Err(Error::Format(format!(
                "weight file has {} records, config expects {}",
                file.records.len(),
                specs.len()
            )));
        }
        let mut values = Vec::with_capacity(specs.len());
        for (spec, rec) in specs.iter().zip(&file.records) {
            if rec.name != spec.name {
                return Err(Error::Format(format!(
                    "expected parameter {:?}, found {:?}",
                    spec.name, rec.name
                )));
            }
            if rec.data.len() != spec.len {
                return Err(Error::Shape {
                    what: spec.name.clone(),
                    expected: spec.len,
                    actual: rec.data.len(),
                });
            }
            if let NumberFormat::Fixed(want) = config.weight_format {
                match &rec.data {
                    RecordData::Fixed { format, .. } if *format == want => {}
                    RecordData::Fixed { format, .. } => {
                        return Err(Error::Format(format!(
                            "{}: stored as {format}, config declares {want}",
                            spec.name
                        )))
                    }
                    RecordData::F32(_) => {
                        return Err(Error::Format(format!(
                        "{}: stored as float but config declares {want}; quantize the file first",
                        spec.name
                    )))
                    }
                }
            }
            values.push(rec.data.values().into_iter().map(T::of).collect());
        }
        Self::from_parameters(config, values)
    }

    pub fn load(config: NetworkConfig, weights: impl AsRef<Path>) -> Result<Self> {
        Self::from_weight_file(config, &WeightFile::load(weights)?)
    }
}
