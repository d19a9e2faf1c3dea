//! Deterministic JSON emission helpers.
//!
//! Artifact files are written by hand so that numbers carry 17 significant
//! digits (exact `f64` round-trip) and the byte layout is stable across runs.
//! Parsing goes through `serde_json`.

use crate::{Error, Result};
use std::fmt::Write;

/// Append a float as a JSON number with 17 significant digits.
pub(crate) fn push_f64(buf: &mut String, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite("serialized number"));
    }
    write!(buf, "{v:.16e}").expect("writing to String cannot fail");
    Ok(())
}

/// Append a JSON string literal with full escaping.
pub(crate) fn push_str(buf: &mut String, s: &str) {
    buf.push_str(&serde_json::to_string(s).expect("string serialization cannot fail"));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digit_round_trip() {
        let values = [
            0.25,
            -0.0,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            1.2345678901234567e300,
            -9.87e-250,
        ];
        for &v in &values {
            let mut buf = String::new();
            push_f64(&mut buf, v).unwrap();
            let back: f64 = serde_json::from_str(&buf).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "round-trip of {v:?} via {buf}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut buf = String::new();
        assert!(push_f64(&mut buf, f64::NAN).is_err());
        assert!(push_f64(&mut buf, f64::INFINITY).is_err());
    }

    #[test]
    fn escapes_strings() {
        let mut buf = String::new();
        push_str(&mut buf, "a\"b\\c\n");
        assert_eq!(buf, r#""a\"b\\c\n""#);
    }
}
