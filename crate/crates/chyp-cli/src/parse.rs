use std::f64::consts::PI;

use anyhow::{anyhow, bail, Context, Result};
use chyp::{Mat3, C64};

/// An angle in radians, or an exact multiple of π written `pi`, `3pi/2`,
/// `-pi/4` or `2*pi/3`.
pub fn angle(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase().replace(['*', ' '], "");
    let Some(pos) = t.find("pi") else {
        return t.parse::<f64>().with_context(|| format!("invalid angle {s:?}"));
    };
    let coeff = match &t[..pos] {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().with_context(|| format!("invalid angle {s:?}"))?,
    };
    let rest = &t[pos + 2..];
    let den = match rest {
        "" => 1.0,
        r => r
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .ok_or_else(|| anyhow!("invalid angle {s:?}"))?,
    };
    if den == 0.0 {
        bail!("invalid angle {s:?}: zero denominator");
    }
    Ok(coeff * PI / den)
}

pub fn complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.replace('j', "i");
    t.parse::<C64>()
        .map_err(|_| anyhow!("invalid complex number {s:?}"))
}

/// Nine entries in row-major order.
pub fn matrix(entries: &[String]) -> Result<Mat3> {
    if entries.len() != 9 {
        bail!("expected 9 matrix entries, got {}", entries.len());
    }
    let v = entries
        .iter()
        .map(|e| complex(e))
        .collect::<Result<Vec<_>>>()?;
    Ok(Mat3::from_row_slice(&v))
}

pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(angle("1.5").unwrap(), 1.5);
        assert_eq!(angle("pi").unwrap(), PI);
        assert_eq!(angle("3pi/2").unwrap(), 3.0 * PI / 2.0);
        assert_eq!(angle("-pi/4").unwrap(), -PI / 4.0);
        assert_eq!(angle("2*pi/3").unwrap(), 2.0 * PI / 3.0);
        assert!(angle("pi/0").is_err());
        assert!(angle("x").is_err());
    }

    #[test]
    fn complex_numbers() {
        assert_eq!(complex("2").unwrap(), C64::new(2.0, 0.0));
        assert_eq!(complex("1-2i").unwrap(), C64::new(1.0, -2.0));
        assert_eq!(complex("-0.5i").unwrap(), C64::new(0.0, -0.5));
        assert_eq!(format_complex(C64::new(1.0, -2.0)), "1-2i");
        assert!(complex("abc").is_err());
    }
}
