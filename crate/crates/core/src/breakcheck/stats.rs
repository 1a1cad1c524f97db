//! Ordinary least squares, the Chow test and Pearson correlation.

use serde::{Deserialize, Serialize};

use super::special::f_sf;
use super::BreakError;

/// Regressors per segment: intercept and time index.
pub const CHOW_K: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub intercept: f64,
    pub slope: f64,
    pub ssr: f64,
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit, BreakError> {
    if x.len() != y.len() {
        return Err(BreakError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(BreakError::TooFewPoints { needed: 3, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 || !sxx.is_finite() {
        return Err(BreakError::DegenerateX);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    Ok(OlsFit { intercept, slope, ssr })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakTestResult {
    /// `+inf` when both segments fit exactly but the pooled line does not.
    #[serde(with = "finite_or_inf")]
    pub f_statistic: f64,
    pub p_value: f64,
    pub breakpoint_index: usize,
    pub k: usize,
    pub n1: usize,
    pub n2: usize,
}

impl BreakTestResult {
    pub fn p_display(&self) -> String {
        format_p_value(self.p_value)
    }
}

/// Chow test for a break before `breakpoint_index`: the first segment is
/// `[0, breakpoint_index)`, the second the rest.
pub fn chow_test(x: &[f64], y: &[f64], breakpoint_index: usize) -> Result<BreakTestResult, BreakError> {
    if x.len() != y.len() {
        return Err(BreakError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    let n1 = breakpoint_index.min(n);
    let n2 = n - n1;
    for (segment, got) in [(1, n1), (2, n2)] {
        if got <= CHOW_K {
            return Err(BreakError::SegmentTooShort {
                segment,
                got,
                required: CHOW_K + 1,
            });
        }
    }
    let pooled = ols_fit(x, y)?;
    let first = ols_fit(&x[..n1], &y[..n1])?;
    let second = ols_fit(&x[n1..], &y[n1..])?;
    let ssr_seg = first.ssr + second.ssr;
    let scale: f64 = y.iter().map(|v| v * v).sum();
    let tol = 1e-12 * scale;
    let (f, p) = if pooled.ssr <= tol {
        (0.0, 1.0)
    } else if ssr_seg <= tol {
        (f64::INFINITY, 0.0)
    } else {
        let df2 = (n - 2 * CHOW_K) as f64;
        let num = (pooled.ssr - ssr_seg).max(0.0) / CHOW_K as f64;
        let f = num / (ssr_seg / df2);
        (f, f_sf(f, CHOW_K as f64, df2).clamp(0.0, 1.0))
    };
    Ok(BreakTestResult {
        f_statistic: f,
        p_value: p,
        breakpoint_index,
        k: CHOW_K,
        n1,
        n2,
    })
}

/// Four significant digits; anything below `1e-12` prints as `<1e-12`.
pub fn format_p_value(p: f64) -> String {
    if p < 1e-12 {
        return "<1e-12".to_string();
    }
    if p >= 1.0 {
        return "1.000".to_string();
    }
    let exp = p.log10().floor() as i32;
    if exp < -4 {
        format!("{p:.3e}")
    } else {
        let decimals = (3 - exp).max(0) as usize;
        format!("{p:.decimals$}")
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, BreakError> {
    if a.len() != b.len() {
        return Err(BreakError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(BreakError::TooFewPoints { needed: 2, got: a.len() });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(BreakError::CorrelationUndefined);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// JSON has no infinity; an infinite F is written as the string "inf".
mod finite_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {t:?}"))),
        }
    }
}
