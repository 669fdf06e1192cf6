//! Unit-tagged quantities and the conversions between them.
//!
//! Scenario files may express powers in dBm or watts and thresholds in dB or
//! as plain linear ratios.  Everything internal works in linear units
//! (watts / ratios); the tagged enums exist only at the serialization
//! boundary so a scenario can never be misread by a factor of 10^3.

use serde::{Deserialize, Serialize};

/// Convert a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert a dB value to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// A transmit or noise power with an explicit unit tag.
///
/// Serialized form: `{"dbm": -50.0}` or `{"w": 0.001}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Power {
    Dbm(f64),
    W(f64),
}

impl Power {
    /// The value in watts, whatever the tag.
    pub fn watts(self) -> f64 {
        match self {
            Power::Dbm(v) => dbm_to_watts(v),
            Power::W(v) => v,
        }
    }
}

/// A detection or harvesting threshold with an explicit unit tag.
///
/// Serialized form: `{"db": -10.0}` or `{"linear": 0.1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Threshold {
    Db(f64),
    Linear(f64),
}

impl Threshold {
    /// The value as a linear ratio, whatever the tag.
    pub fn linear(self) -> f64 {
        match self {
            Threshold::Db(v) => db_to_linear(v),
            Threshold::Linear(v) => v,
        }
    }
}

/// Round to `decimals` fractional digits with ties going away from zero
/// (so 0.625 at two decimals becomes 0.63, not 0.62).
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round() / scale
}

/// Serde adapter for extended nonnegative reals: finite values are plain
/// JSON numbers, infinities become the strings `"inf"` / `"-inf"` (JSON has
/// no infinity literal).  Use with `#[serde(with = "...::json_real")]`.
pub mod json_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
            },
        }
    }
}

/// Like [`json_real`], for vectors of extended reals.
/// Plain-decimal formatting at a fixed number of significant digits;
/// non-finite values spell out as `inf`/`-inf`/`nan`.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{:.*}", decimals, v)
}

pub mod json_real_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(serde::Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::json_real")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &x in v {
            seq.serialize_element(&Wrap(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

// ----------------------------------------------------------------------------
