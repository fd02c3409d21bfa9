//! Dataset container: a binary file with a fixed-width record per sample
//! plus a CSV export for inspection.
//!
//! Layout: magic `LMDS`, format version, record count, sampling seed and
//! discretization name, followed by one 120-float record per sample
//! (9 parameters, 2 orientation eigenvalues, the two phase stiffnesses and
//! the label as 6x6 row-major blocks, and a label-valid flag).

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Matrix6;

use super::sampling::{SampleParams, StiffnessSample};
use crate::error::{Error, Result};
use crate::mech::{OrientationPoint, Stiffness};

const MAGIC: &[u8; 4] = b"LMDS";
const FORMAT_VERSION: u32 = 1;
const FLOATS_PER_RECORD: usize = 9 + 2 + 3 * 36 + 1;

#[derive(Clone, Debug)]
pub struct Dataset {
    pub seed: u64,
    pub discretization: String,
    pub samples: Vec<StiffnessSample>,
}

fn push_matrix(out: &mut Vec<f64>, m: &Matrix6<f64>) {
    for r in 0..6 {
        for c in 0..6 {
            out.push(m[(r, c)]);
        }
    }
}

fn read_matrix(x: &[f64]) -> Matrix6<f64> {
    Matrix6::from_fn(|r, c| x[6 * r + c])
}

impl Dataset {
    pub fn new(seed: u64, discretization: &str, samples: Vec<StiffnessSample>) -> Self {
        Self { seed, discretization: discretization.to_string(), samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labeled_count(&self) -> usize {
        self.samples.iter().filter(|s| s.label.is_some()).count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(44 + self.samples.len() * FLOATS_PER_RECORD * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.samples.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        let mut name = [0u8; 16];
        let bytes = self.discretization.as_bytes();
        name[..bytes.len().min(16)].copy_from_slice(&bytes[..bytes.len().min(16)]);
        out.extend_from_slice(&name);

        let mut record = Vec::with_capacity(FLOATS_PER_RECORD);
        for s in &self.samples {
            record.clear();
            record.extend_from_slice(&s.params.to_array());
            record.push(s.orientation.lambda_1());
            record.push(s.orientation.lambda_2());
            push_matrix(&mut record, s.stiffness_1.matrix());
            push_matrix(&mut record, s.stiffness_2.matrix());
            match &s.label {
                Some(l) => {
                    push_matrix(&mut record, l.matrix());
                    record.push(1.0);
                }
                None => {
                    push_matrix(&mut record, &Matrix6::zeros());
                    record.push(0.0);
                }
            }
            for x in &record {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = std::io::Cursor::new(bytes);
        let mut magic = [0u8; 4];
        cursor.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Decode("not a dataset file (bad magic)".into()));
        }
        let mut u32buf = [0u8; 4];
        cursor.read_exact(&mut u32buf).map_err(truncated)?;
        let version = u32::from_le_bytes(u32buf);
        if version != FORMAT_VERSION {
            return Err(Error::Decode(format!(
                "unsupported dataset format version {version}"
            )));
        }
        let mut u64buf = [0u8; 8];
        cursor.read_exact(&mut u64buf).map_err(truncated)?;
        let count = u64::from_le_bytes(u64buf) as usize;
        cursor.read_exact(&mut u64buf).map_err(truncated)?;
        let seed = u64::from_le_bytes(u64buf);
        let mut name = [0u8; 16];
        cursor.read_exact(&mut name).map_err(truncated)?;
        let end = name.iter().position(|&b| b == 0).unwrap_or(16);
        let discretization = String::from_utf8_lossy(&name[..end]).into_owned();

        let mut samples = Vec::with_capacity(count);
        let mut floats = vec![0.0f64; FLOATS_PER_RECORD];
        let mut f64buf = [0u8; 8];
        for _ in 0..count {
            for x in floats.iter_mut() {
                cursor.read_exact(&mut f64buf).map_err(truncated)?;
                *x = f64::from_le_bytes(f64buf);
            }
            let params =
                SampleParams::from_array(floats[0..9].try_into().expect("record layout"));
            let orientation = OrientationPoint::new(floats[9], floats[10])
                .map_err(|e| Error::Decode(format!("bad orientation in record: {e}")))?;
            let c1 = Stiffness::new(read_matrix(&floats[11..47]));
            let c2 = Stiffness::new(read_matrix(&floats[47..83]));
            let label = if floats[119] != 0.0 {
                Some(Stiffness::new(read_matrix(&floats[83..119])))
            } else {
                None
            };
            samples.push(StiffnessSample {
                params,
                stiffness_1: c1,
                stiffness_2: c2,
                orientation,
                label,
            });
        }
        Ok(Self { seed, discretization, samples })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Human-readable export: one row per sample with the parameters, the
    /// orientation and (when labeled) the label entries.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "index,k1,g1,k2,g2,a,beta,theta,psi,phi,lambda1,lambda2,labeled")?;
        for r in 0..6 {
            for c in 0..6 {
                write!(w, ",cbar_{}{}", r + 1, c + 1)?;
            }
        }
        writeln!(w)?;
        for (i, s) in self.samples.iter().enumerate() {
            let p = s.params.to_array();
            write!(w, "{i}")?;
            for x in p {
                write!(w, ",{x:.17e}")?;
            }
            write!(
                w,
                ",{:.17e},{:.17e},{}",
                s.orientation.lambda_1(),
                s.orientation.lambda_2(),
                s.label.is_some() as u8
            )?;
            let zero = Stiffness::zero();
            let label = s.label.as_ref().unwrap_or(&zero);
            for r in 0..6 {
                for c in 0..6 {
                    write!(w, ",{:.17e}", label.matrix()[(r, c)])?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn truncated(_: std::io::Error) -> Error {
    Error::Decode("dataset file truncated".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::sampling::sample_stiffness_pairs;
    use crate::training::triangle::TriangleDiscretization;

    #[test]
    fn binary_round_trip_preserves_everything() {
        let d4 = TriangleDiscretization::d4();
        let mut samples = sample_stiffness_pairs(7, 9, &d4).unwrap();
        samples[2].label = Some(samples[2].stiffness_1);
        let ds = Dataset::new(9, "d4", samples);
        let back = Dataset::from_bytes(&ds.to_bytes()).unwrap();
        assert_eq!(back.seed, 9);
        assert_eq!(back.discretization, "d4");
        assert_eq!(back.len(), 7);
        assert_eq!(back.labeled_count(), 1);
        for (a, b) in ds.samples.iter().zip(back.samples.iter()) {
            assert_eq!(a.params, b.params);
            assert_eq!(a.stiffness_1, b.stiffness_1);
            assert_eq!(a.stiffness_2, b.stiffness_2);
            assert_eq!(a.label.is_some(), b.label.is_some());
        }
    }

    #[test]
    fn truncation_is_detected() {
        let d4 = TriangleDiscretization::d4();
        let ds = Dataset::new(1, "d4", sample_stiffness_pairs(3, 1, &d4).unwrap());
        let bytes = ds.to_bytes();
        assert!(Dataset::from_bytes(&bytes[..bytes.len() - 10]).is_err());
        assert!(Dataset::from_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn csv_export_has_one_row_per_sample() {
        let d4 = TriangleDiscretization::d4();
        let ds = Dataset::new(1, "d4", sample_stiffness_pairs(5, 1, &d4).unwrap());
        let mut out = Vec::new();
        ds.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("index,k1,g1"));
    }
}
