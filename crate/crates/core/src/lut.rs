//! Piecewise-linear lookup tables: evaluation, exact conversion from a
//! one-hidden-layer ReLU net, the equally-spaced baseline fitter, and
//! lowering to binary16 parameters or 32-bit fixed point.
//!
//! A table with breakpoints `d₁ < … < d_{N-1}` and segment parameters
//! `(sᵢ, tᵢ)` evaluates `s₁x + t₁` for `x < d₁`, `sᵢx + tᵢ` for
//! `d_{i-1} ≤ x < dᵢ`, and `s_N x + t_N` for `x ≥ d_{N-1}`.

use half::f16;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{FinalizedNet, DEGENERATE_WEIGHT};
use crate::targets::Interval;

/// Breakpoints closer than this are merged.
pub const BREAKPOINT_MERGE_TOL: f64 = 1e-9;

/// Samples per segment used by [`fit_linear_lut`].
pub const LINEAR_FIT_SAMPLES: usize = 1024;

/// Integer slopes use 15 fractional bits: the largest |slope| maps to 32767.
pub const SLOPE_LEVELS: f64 = 32767.0;

const F16_MAX: f64 = 65504.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Binary32,
    Binary16Params,
    Int32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    pub s_in: f64,
    pub s_slope: f64,
    /// Always exactly `s_slope * s_in`.
    pub s_out: f64,
    pub int_breakpoints: Vec<i32>,
    pub int_slopes: Vec<i32>,
    pub int_intercepts: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lut {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    precision: Precision,
    quant: Option<QuantParams>,
    /// Non-fatal events recorded while lowering (e.g. binary16 saturation).
    warnings: Vec<String>,
}

impl Lut {
    /// A binary32 table. Breakpoints must be strictly increasing.
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, intercepts: Vec<f64>) -> Result<Self> {
        let lut = Self {
            breakpoints,
            slopes,
            intercepts,
            precision: Precision::Binary32,
            quant: None,
            warnings: Vec::new(),
        };
        lut.validate()?;
        Ok(lut)
    }

    /// Reassembles a table of any precision, e.g. after loading it from disk.
    pub fn from_parts(
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        intercepts: Vec<f64>,
        precision: Precision,
        quant: Option<QuantParams>,
        warnings: Vec<String>,
    ) -> Result<Self> {
        let lut = Self {
            breakpoints,
            slopes,
            intercepts,
            precision,
            quant,
            warnings,
        };
        lut.validate()?;
        Ok(lut)
    }

    /// Checks the structural invariants; used after deserialization too.
    pub fn validate(&self) -> Result<()> {
        let pre = |msg: String| Err(Error::Precondition(msg));
        if self.slopes.len() != self.breakpoints.len() + 1 || self.intercepts.len() != self.slopes.len() {
            return pre(format!(
                "segment count mismatch: {} breakpoints, {} slopes, {} intercepts",
                self.breakpoints.len(),
                self.slopes.len(),
                self.intercepts.len()
            ));
        }
        if self
            .breakpoints
            .iter()
            .chain(&self.slopes)
            .chain(&self.intercepts)
            .any(|v| !v.is_finite())
        {
            return pre("non-finite table entry".into());
        }
        if self.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return pre("breakpoints are not strictly increasing".into());
        }
        match (&self.quant, self.precision) {
            (Some(q), Precision::Int32) => {
                let n = self.slopes.len();
                if q.int_breakpoints.len() != n - 1 || q.int_slopes.len() != n || q.int_intercepts.len() != n {
                    return pre("quantized field lengths do not match the table".into());
                }
                if q.int_breakpoints.windows(2).any(|w| w[0] > w[1]) {
                    return pre("integer breakpoints are not sorted".into());
                }
                if !(q.s_in > 0.0 && q.s_slope > 0.0 && q.s_out == q.s_slope * q.s_in) {
                    return pre("inconsistent scale factors".into());
                }
            }
            (None, Precision::Int32) => return pre("int32 table without quantization parameters".into()),
            (Some(_), _) => return pre("quantization parameters on a float table".into()),
            (None, _) => {}
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn quant(&self) -> Option<&QuantParams> {
        self.quant.as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Number of entries N (segments).
    pub fn entries(&self) -> usize {
        self.slopes.len()
    }

    /// Index of the segment containing `x` (left-closed, right-open).
    pub fn segment(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&d| d <= x)
    }

    /// Evaluates the table on the datapath its precision implies: binary32
    /// multiply-add for float tables, integer arithmetic for `Int32` (input
    /// quantized with `s_in`, result rescaled by `s_out`).
    pub fn eval(&self, x: f64) -> f64 {
        match self.precision {
            Precision::Binary32 | Precision::Binary16Params => {
                let i = self.segment(x);
                let y = (self.slopes[i] as f32) * (x as f32) + self.intercepts[i] as f32;
                f64::from(y)
            }
            Precision::Int32 => {
                let q = self.quant.as_ref().expect("validated int32 table");
                let code = (x / q.s_in).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32;
                let (out, s_out) = eval_int32(self, code).expect("validated int32 table");
                f64::from(out) * s_out
            }
        }
    }

    /// Evaluates the stored parameters in binary64.
    pub fn eval_exact(&self, x: f64) -> f64 {
        let i = self.segment(x);
        self.slopes[i] * x + self.intercepts[i]
    }
}

/// Binary32 evaluation of a float table. See [`Lut::eval`].
pub fn eval_lut(lut: &Lut, x: f64) -> f64 {
    lut.eval(x)
}

/// Largest relative deviation tolerated between a net and its table.
pub const EQUIVALENCE_TOL: f64 = 1e-5;

/// Max over `grid` of `|lut(x) − fin(x)| / max(1, |fin(x)|)`, with the
/// table evaluated in binary64 like the network. Rounding of a binary32
/// datapath is a property of the precision, not of the conversion; see
/// [`datapath_deviation`].
pub fn equivalence_deviation(fin: &FinalizedNet, lut: &Lut, grid: &[f64]) -> f64 {
    max_relative(fin, grid, |x| lut.eval_exact(x))
}

/// Same measure as [`equivalence_deviation`] but through [`Lut::eval`].
pub fn datapath_deviation(fin: &FinalizedNet, lut: &Lut, grid: &[f64]) -> f64 {
    max_relative(fin, grid, |x| lut.eval(x))
}

fn max_relative(fin: &FinalizedNet, grid: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    grid.iter()
        .map(|&x| {
            let y = fin.forward(x);
            (f(x) - y).abs() / y.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Converts a finalized network into the table it is equal to.
///
/// Neurons are ordered by their breakpoint `-bⱼ/nⱼ`. On a segment, a neuron
/// left of it is active iff `nⱼ > 0`, one right of it iff `nⱼ < 0`, so the
/// segment's slope and intercept are the sums of `mⱼnⱼ` and `mⱼbⱼ` over
/// those active neurons.
pub fn nn_to_lut(fin: &FinalizedNet) -> Result<Lut> {
    let net = &fin.net;
    if let Some(i) = net.n.iter().position(|n| n.abs() < DEGENERATE_WEIGHT) {
        return Err(Error::Precondition(format!(
            "neuron {i} has |n| = {:e}; finalize the net before conversion",
            net.n[i].abs()
        )));
    }
    let mut order: Vec<usize> = (0..net.hidden()).collect();
    let bp: Vec<f64> = net.breakpoints();
    order.sort_by(|&a, &b| bp[a].total_cmp(&bp[b]));

    // groups of neurons sharing a merged breakpoint
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &j in &order {
        match groups.last_mut() {
            Some(g) if bp[j] - bp[*g.last().unwrap()] <= BREAKPOINT_MERGE_TOL => g.push(j),
            _ => groups.push(vec![j]),
        }
    }
    let breakpoints: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|&j| bp[j]).sum::<f64>() / g.len() as f64)
        .collect();

    let mut slopes = Vec::with_capacity(groups.len() + 1);
    let mut intercepts = Vec::with_capacity(groups.len() + 1);
    for seg in 0..=groups.len() {
        let (mut s, mut t) = (0.0, fin.folded_constant);
        for (gi, g) in groups.iter().enumerate() {
            let left = gi < seg;
            for &j in g {
                if (left && net.n[j] > 0.0) || (!left && net.n[j] < 0.0) {
                    s += net.m[j] * net.n[j];
                    t += net.m[j] * net.b[j];
                }
            }
        }
        slopes.push(s);
        intercepts.push(t);
    }
    Lut::new(breakpoints, slopes, intercepts)
}

/// Equally spaced baseline: `entries - 1` interior breakpoints, each segment
/// an ordinary least-squares line through uniform samples of `f`. The two end
/// segments extrapolate their in-range fits.
pub fn fit_linear_lut(
    f: impl Fn(f64) -> Result<f64>,
    range: Interval,
    entries: usize,
) -> Result<Lut> {
    if entries < 2 {
        return Err(Error::Precondition(format!("need at least 2 entries, got {entries}")));
    }
    let width = range.width() / entries as f64;
    let edge = |k: usize| {
        if k == entries {
            range.hi
        } else {
            range.lo + width * k as f64
        }
    };
    let breakpoints: Vec<f64> = (1..entries).map(edge).collect();
    let mut slopes = Vec::with_capacity(entries);
    let mut intercepts = Vec::with_capacity(entries);
    for k in 0..entries {
        let seg = Interval::new(edge(k), edge(k + 1))?;
        let xs = seg.linspace(LINEAR_FIT_SAMPLES);
        let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
        let (s, t) = least_squares_line(&xs, &ys);
        slopes.push(s);
        intercepts.push(t);
    }
    Lut::new(breakpoints, slopes, intercepts)
}

fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let s = sxy / sxx;
    (s, my - s * mx)
}

/// Rounds `v` to the nearest binary16 value (ties to even), saturating at
/// ±65504. Returns the value and whether it saturated.
pub fn round_to_f16(v: f64) -> (f64, bool) {
    let h = f16::from_f64(v);
    if h.is_infinite() || v.abs() > F16_MAX {
        (F16_MAX.copysign(v), true)
    } else {
        (h.to_f64(), false)
    }
}

/// Rounds breakpoints and parameters to binary16; arithmetic stays binary32.
pub fn to_fp16(lut: &Lut) -> Result<Lut> {
    if lut.precision != Precision::Binary32 {
        return Err(Error::Precondition(format!(
            "to_fp16 expects a binary32 table, got {:?}",
            lut.precision
        )));
    }
    let mut warnings = lut.warnings.clone();
    let mut round_all = |name: &str, vals: &[f64]| -> Vec<f64> {
        vals.iter()
            .enumerate()
            .map(|(i, &v)| {
                let (r, sat) = round_to_f16(v);
                if sat {
                    warnings.push(format!("{name}[{i}] = {v:e} saturated to {r}"));
                }
                r
            })
            .collect()
    };
    let d = round_all("breakpoints", &lut.breakpoints);
    let mut s = round_all("slopes", &lut.slopes);
    let mut t = round_all("intercepts", &lut.intercepts);

    // rounding is monotone, so it can only create ties; drop the empty
    // segment between tied breakpoints
    let mut breakpoints: Vec<f64> = Vec::with_capacity(d.len());
    let mut keep = vec![true; s.len()];
    for (i, &v) in d.iter().enumerate() {
        if breakpoints.last() == Some(&v) {
            keep[i] = false;
            warnings.push(format!("breakpoints[{i}] merged after rounding to {v}"));
        } else {
            breakpoints.push(v);
        }
    }
    let mut it = keep.iter();
    s.retain(|_| *it.next().unwrap());
    let mut it = keep.iter();
    t.retain(|_| *it.next().unwrap());

    let mut out = Lut::new(breakpoints, s, t)?;
    out.precision = Precision::Binary16Params;
    out.warnings = warnings;
    Ok(out)
}

fn to_i32(v: f64, field: &'static str, index: usize) -> Result<i32> {
    if v.is_finite() && v >= i32::MIN as f64 && v <= i32::MAX as f64 {
        Ok(v as i32)
    } else {
        Err(Error::Quantization {
            field,
            detail: format!("entry {index} quantizes to {v:e}, outside the 32-bit signed range"),
        })
    }
}

/// Number of significant bits in the binary64 mantissa of `v`.
fn significant_bits(v: f64) -> u32 {
    let mant = v.to_bits() & ((1u64 << 52) - 1);
    if mant == 0 {
        1
    } else {
        53 - mant.trailing_zeros()
    }
}

/// Rounds `v > 0` up to at most `bits` significant bits.
fn round_up_to_bits(v: f64, bits: u32) -> f64 {
    if bits >= 53 {
        return v;
    }
    let drop = 53 - bits;
    let raw = v.to_bits();
    let mask = (1u64 << drop) - 1;
    if raw & mask == 0 {
        v
    } else {
        f64::from_bits((raw | mask) + 1)
    }
}

/// Quantizes a binary32 table to 32-bit fixed point with input scale `s_in`.
///
/// Slopes share one scale `s_slope = max|s| / 32767`; intercepts and outputs
/// use `s_out = s_slope · s_in` so that `int_slope · q + int_intercept` is
/// directly an output code. Integer breakpoints are `⌈d / s_in⌉`, which keeps
/// `q ≥ ib ⇔ q·s_in ≥ d`.
pub fn to_int32(lut: &Lut, s_in: f64) -> Result<Lut> {
    if lut.precision != Precision::Binary32 {
        return Err(Error::Precondition(format!(
            "to_int32 expects a binary32 table, got {:?}",
            lut.precision
        )));
    }
    if !(s_in > 0.0 && s_in.is_finite()) {
        return Err(Error::Precondition(format!("input scale must be positive, got {s_in}")));
    }
    let max_slope = lut.slopes.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    if max_slope == 0.0 {
        return Err(Error::Quantization {
            field: "slopes",
            detail: "all slopes are zero, so the slope scale would be 0; use a constant table".into(),
        });
    }
    // keep s_slope · s_in exact in binary64
    let s_slope = round_up_to_bits(max_slope / SLOPE_LEVELS, 54 - significant_bits(s_in));
    let s_out = s_slope * s_in;
    if s_out == 0.0 || s_slope.mul_add(s_in, -s_out) != 0.0 {
        return Err(Error::Quantization {
            field: "s_out",
            detail: format!("s_slope·s_in = {s_slope:e}·{s_in:e} is not representable"),
        });
    }
    let int_breakpoints = lut
        .breakpoints
        .iter()
        .enumerate()
        .map(|(i, d)| to_i32((d / s_in).ceil(), "breakpoints", i))
        .collect::<Result<Vec<_>>>()?;
    let int_slopes = lut
        .slopes
        .iter()
        .enumerate()
        .map(|(i, s)| to_i32((s / s_slope).round(), "slopes", i))
        .collect::<Result<Vec<_>>>()?;
    let int_intercepts = lut
        .intercepts
        .iter()
        .enumerate()
        .map(|(i, t)| to_i32((t / s_out).round(), "intercepts", i))
        .collect::<Result<Vec<_>>>()?;
    let mut out = lut.clone();
    out.precision = Precision::Int32;
    out.quant = Some(QuantParams {
        s_in,
        s_slope,
        s_out,
        int_breakpoints,
        int_slopes,
        int_intercepts,
    });
    Ok(out)
}

/// Integer evaluation: returns the output code and its scale `s_out`.
/// The product is formed in 64 bits and the result saturates to `i32`.
pub fn eval_int32(lut: &Lut, q: i32) -> Result<(i32, f64)> {
    let qp = match (&lut.quant, lut.precision) {
        (Some(qp), Precision::Int32) => qp,
        _ => {
            return Err(Error::Precondition(format!(
                "eval_int32 expects an int32 table, got {:?}",
                lut.precision
            )))
        }
    };
    let i = qp.int_breakpoints.partition_point(|&d| d <= q);
    let acc = i64::from(qp.int_slopes[i]) * i64::from(q) + i64::from(qp.int_intercepts[i]);
    let out = acc.clamp(i64::from(i32::MIN), i64::from(i32::MAX)) as i32;
    Ok((out, qp.s_out))
}

/// True when no input code in `range` drives an output code of the int32
/// table `q` into saturation. Outputs are linear per segment, so checking
/// the ends of each segment's code interval is enough.
pub fn int32_fits(q: &Lut, range: Interval) -> bool {
    let Some(p) = q.quant() else {
        return false;
    };
    let code = |x: f64| (x / p.s_in).round();
    let (lo, hi) = (code(range.lo), code(range.hi));
    if lo < f64::from(i32::MIN) || hi > f64::from(i32::MAX) {
        return false;
    }
    let (lo, hi) = (lo as i64, hi as i64);
    let fits = |i: usize, c: i64| {
        let acc = i64::from(p.int_slopes[i]) * c + i64::from(p.int_intercepts[i]);
        acc >= i64::from(i32::MIN) && acc <= i64::from(i32::MAX)
    };
    (0..p.int_slopes.len()).all(|i| {
        let a = if i == 0 { lo } else { lo.max(i64::from(p.int_breakpoints[i - 1])) };
        let b = p.int_breakpoints.get(i).map_or(hi, |&d| hi.min(i64::from(d) - 1));
        a > b || (fits(i, a) && fits(i, b))
    })
}

/// Finest power-of-two input scale whose int32 table represents every
/// output over `range` without saturating.
pub fn int32_scale_for(lut: &Lut, range: Interval) -> Result<f64> {
    let widest = range.lo.abs().max(range.hi.abs());
    let mut e = (widest / f64::from(i32::MAX)).log2().ceil().max(-60.0) as i32;
    while e <= 30 {
        let s_in = 2f64.powi(e);
        match to_int32(lut, s_in) {
            Ok(q) if int32_fits(&q, range) => return Ok(s_in),
            Ok(_) | Err(Error::Quantization { .. }) => e += 1,
            Err(err) => return Err(err),
        }
    }
    Err(Error::Quantization {
        field: "s_in",
        detail: format!("no power-of-two input scale up to 2^30 fits [{}, {}]", range.lo, range.hi),
    })
}
