//! JSON records for designed precoders.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::design::{AnalogPrecoder, LinkDesign};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::multiuser::MuPrecoderSet;
use crate::shifter::{PatternAssignment, QuantizerSpec};

pub const PRECODER_SCHEMA_VERSION: u32 = 1;

/// Row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMat> for MatrixRecord {
    fn from(m: &CMat) -> Self {
        let mut re = Vec::with_capacity(m.len());
        let mut im = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            re,
            im,
        }
    }
}

impl MatrixRecord {
    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Serialization(format!(
                "matrix record {}x{} holds {} re / {} im values",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            Complex64::new(self.re[k], self.im[k])
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogRecord {
    pub matrix: MatrixRecord,
    /// `H`/`L` text grid, one line per antenna.
    pub pattern: String,
    pub high_bits: u32,
    pub low_bits: u32,
}

impl From<&AnalogPrecoder> for AnalogRecord {
    fn from(a: &AnalogPrecoder) -> Self {
        Self {
            matrix: (&a.matrix).into(),
            pattern: a.pattern.to_text_grid(),
            high_bits: a.high.bits(),
            low_bits: a.low.bits(),
        }
    }
}

impl AnalogRecord {
    pub fn to_precoder(&self) -> Result<AnalogPrecoder> {
        let matrix = self.matrix.to_matrix()?;
        let pattern: PatternAssignment = self.pattern.parse()?;
        if pattern.rows() != matrix.nrows() || pattern.cols() != matrix.ncols() {
            return Err(Error::Serialization("pattern shape differs from matrix shape".into()));
        }
        Ok(AnalogPrecoder {
            matrix,
            pattern,
            high: QuantizerSpec::new(self.high_bits)?,
            low: QuantizerSpec::new(self.low_bits)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub schema_version: u32,
    pub architecture: String,
    pub analog: Option<AnalogRecord>,
    pub f_rf: MatrixRecord,
    pub f_bb: MatrixRecord,
    pub combiner: MatrixRecord,
}

impl From<&LinkDesign> for LinkRecord {
    fn from(d: &LinkDesign) -> Self {
        Self {
            schema_version: PRECODER_SCHEMA_VERSION,
            architecture: d.architecture.label().to_string(),
            analog: d.analog.as_ref().map(Into::into),
            f_rf: (&d.f_rf).into(),
            f_bb: (&d.f_bb).into(),
            combiner: (&d.combiner).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRecord {
    pub schema_version: u32,
    pub analog: Option<AnalogRecord>,
    pub f_rf: MatrixRecord,
    pub digital: Vec<MatrixRecord>,
    pub combiners: Vec<MatrixRecord>,
    pub gammas: Vec<f64>,
}

impl From<&MuPrecoderSet> for MuRecord {
    fn from(p: &MuPrecoderSet) -> Self {
        Self {
            schema_version: PRECODER_SCHEMA_VERSION,
            analog: p.analog.as_ref().map(Into::into),
            f_rf: (&p.f_rf).into(),
            digital: p.digital.iter().map(Into::into).collect(),
            combiners: p.combiners.iter().map(Into::into).collect(),
            gammas: p.gammas.clone(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shifter::Resolution;

    #[test]
    fn matrix_round_trip() {
        let m = CMat::from_fn(2, 3, |i, j| Complex64::new(i as f64 + 0.25, -(j as f64) * 1.5));
        let r: MatrixRecord = (&m).into();
        let back = from_json::<MatrixRecord>(&to_json(&r).unwrap()).unwrap().to_matrix().unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn analog_round_trip() {
        let a = AnalogPrecoder {
            matrix: CMat::from_element(2, 1, Complex64::new(0.5f64.sqrt(), 0.0)),
            pattern: PatternAssignment::from_fn(2, 1, |i, _| if i == 0 { Resolution::High } else { Resolution::Low }),
            high: QuantizerSpec::new(3).unwrap(),
            low: QuantizerSpec::new(1).unwrap(),
        };
        let r: AnalogRecord = (&a).into();
        assert_eq!(r.pattern, "H\nL\n");
        assert_eq!(r.to_precoder().unwrap(), a);
    }

    #[test]
    fn short_matrix_record_rejected() {
        let r = MatrixRecord {
            rows: 2,
            cols: 2,
            re: vec![0.0; 3],
            im: vec![0.0; 4],
        };
        assert!(r.to_matrix().is_err());
    }
}
