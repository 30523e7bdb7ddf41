//! Softmax, LayerNorm and GELU assembled from scalar lookup tables.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lut::Lut;
use crate::targets::{mean_var, LAYERNORM_EPS};

/// Vectors longer than this push the softmax denominator past the fitted
/// range of the reciprocal table.
pub const SOFTMAX_MAX_LEN: usize = 1024;

/// `1/√x` from a table fitted on `[1, K]`. Inputs below 1 are multiplied by
/// `S = 2^k` (exact) before the lookup and the result by `√S` after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledRsqrt {
    pub lut: Lut,
    pub upper: f64,
    pub scale_log2: u32,
    pub sqrt_scale: f64,
}

impl ScaledRsqrt {
    pub fn new(lut: Lut, upper: f64, scale_log2: u32) -> Result<Self> {
        if !(upper > 1.0) {
            return Err(Error::Precondition(format!("upper bound K must exceed 1, got {upper}")));
        }
        if scale_log2 == 0 || scale_log2 > 60 {
            return Err(Error::Precondition(format!("scale exponent must be in 1..=60, got {scale_log2}")));
        }
        let sqrt_scale = if scale_log2.is_multiple_of(2) {
            2f64.powi((scale_log2 / 2) as i32)
        } else {
            f64::from(2f64.powi(scale_log2 as i32).sqrt() as f32)
        };
        Ok(Self {
            lut,
            upper,
            scale_log2,
            sqrt_scale,
        })
    }

    /// Defaults: K = 1024, S = 2¹⁰.
    pub fn with_defaults(lut: Lut) -> Self {
        Self::new(lut, 1024.0, 10).expect("valid defaults")
    }

    pub fn scale(&self) -> f64 {
        2f64.powi(self.scale_log2 as i32)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        scaled_rsqrt(self, x)
    }
}

/// Returns the approximation and how many times the input was rescaled.
pub fn scaled_rsqrt_counted(sr: &ScaledRsqrt, x: f64) -> Result<(f64, u32)> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("rsqrt: input must be positive and finite, got {x}"));
    }
    let s = sr.scale();
    let (mut arg, mut gain, mut steps) = (x, 1.0, 0);
    // one step covers [1/S, 1); tinier inputs repeat it
    while arg < 1.0 {
        arg *= s;
        gain *= sr.sqrt_scale;
        steps += 1;
    }
    Ok((sr.lut.eval(arg) * gain, steps))
}

pub fn scaled_rsqrt(sr: &ScaledRsqrt, x: f64) -> Result<f64> {
    scaled_rsqrt_counted(sr, x).map(|(y, _)| y)
}

/// GELU through its table; outside the fitted range the end segments
/// extrapolate linearly.
pub fn lut_gelu(lut: &Lut, x: f64) -> f64 {
    lut.eval(x)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxDiagnostics {
    /// Σ exp before rescaling.
    pub denominator: f64,
    /// Power of two the denominator was multiplied by before the reciprocal
    /// lookup (0 when already in range).
    pub denominator_shift: i32,
    /// Exp-table outputs that were negative and clamped to 0.
    pub clamped_exp: usize,
    /// Set when the vector is longer than [`SOFTMAX_MAX_LEN`].
    pub range_warning: bool,
}

/// Softmax with one exp lookup per element and a single reciprocal lookup of
/// the shared denominator.
pub fn lut_softmax(v: &[f64], exp_lut: &Lut, div_lut: &Lut) -> Result<(Vec<f64>, SoftmaxDiagnostics)> {
    if v.is_empty() {
        return domain("softmax: empty vector");
    }
    if v.iter().any(|x| !x.is_finite()) {
        return domain("softmax: non-finite input");
    }
    let mut diag = SoftmaxDiagnostics {
        range_warning: v.len() > SOFTMAX_MAX_LEN,
        ..Default::default()
    };
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let u: Vec<f64> = v
        .iter()
        .map(|&x| {
            let e = exp_lut.eval(x - max);
            if e < 0.0 {
                diag.clamped_exp += 1;
                0.0
            } else {
                e
            }
        })
        .collect();
    let denom: f64 = u.iter().sum();
    diag.denominator = denom;
    if !(denom > 0.0) {
        return domain("softmax: exp table produced no positive mass");
    }
    // 1/D = 2^k · 1/(2^k·D) with 2^k·D in [1, 1024]
    let mut shift = 0i32;
    let mut scaled = denom;
    while scaled < 1.0 {
        scaled *= 2.0;
        shift += 1;
    }
    while scaled > SOFTMAX_MAX_LEN as f64 {
        scaled *= 0.5;
        shift -= 1;
    }
    diag.denominator_shift = shift;
    let recip = div_lut.eval(scaled) * 2f64.powi(shift);
    let out = u.into_iter().map(|e| (e * recip).clamp(0.0, 1.0)).collect();
    Ok((out, diag))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerNormDiagnostics {
    pub variance: f64,
    /// Number of power-of-two input rescalings applied before the 1/√ lookup.
    pub rsqrt_scalings: u32,
}

/// `(xᵢ - μ) · rsqrt(σ² + ε)` with μ and σ² computed exactly and the
/// reciprocal square root taken from the scaled table.
pub fn lut_layernorm(v: &[f64], sr: &ScaledRsqrt) -> Result<(Vec<f64>, LayerNormDiagnostics)> {
    if v.len() < 2 {
        return domain("layernorm: need at least two elements");
    }
    if v.iter().any(|x| !x.is_finite()) {
        return domain("layernorm: non-finite input");
    }
    let (mean, var) = mean_var(v);
    let (r, steps) = scaled_rsqrt_counted(sr, var + LAYERNORM_EPS)?;
    let out = v.iter().map(|x| (x - mean) * r).collect();
    Ok((
        out,
        LayerNormDiagnostics {
            variance: var,
            rsqrt_scalings: steps,
        },
    ))
}
