//! Reference implementations of the scalar functions being approximated and
//! of the vector operators composed from them. Everything here runs in binary64.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Stabilizer added to the population variance in [`layernorm_ref`].
pub const LAYERNORM_EPS: f64 = 1e-12;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Gelu,
    Exp,
    Recip,
    Rsqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitPolicy {
    /// n, b, m all uniform in (-1, 1).
    RandomSigned,
    /// n, b uniform in (δ, 1).
    PositiveWPositiveB,
    /// n uniform in (-1, -δ), b uniform in (δ, 1).
    NegativeWPositiveB,
}

/// Closed real interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return domain(format!("invalid interval [{lo}, {hi}]"));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `points` evenly spaced samples including both endpoints.
    pub fn linspace(&self, points: usize) -> Vec<f64> {
        match points {
            0 => Vec::new(),
            1 => vec![self.lo],
            _ => {
                let step = self.width() / (points - 1) as f64;
                (0..points)
                    .map(|i| {
                        if i + 1 == points {
                            self.hi
                        } else {
                            self.lo + step * i as f64
                        }
                    })
                    .collect()
            }
        }
    }

    /// Interval with the same centre and `factor` times the width.
    pub fn widened(&self, factor: f64) -> Interval {
        let c = 0.5 * (self.lo + self.hi);
        let h = 0.5 * self.width() * factor;
        Interval { lo: c - h, hi: c + h }
    }
}

impl TargetKind {
    pub const ALL: [TargetKind; 4] = [Self::Gelu, Self::Exp, Self::Recip, Self::Rsqrt];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gelu => "gelu",
            Self::Exp => "exp",
            Self::Recip => "recip",
            Self::Rsqrt => "rsqrt",
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Self::Gelu => gelu_ref(x),
            Self::Exp => exp_ref(x),
            Self::Recip => recip_ref(x),
            Self::Rsqrt => rsqrt_ref(x),
        }
    }

    /// Checks that every point of `range` lies in the function's domain.
    pub fn check_range(&self, range: Interval) -> Result<()> {
        let ok = match self {
            Self::Gelu | Self::Exp => true,
            Self::Recip => range.lo > 0.0 || range.hi < 0.0,
            Self::Rsqrt => range.lo > 0.0,
        };
        if ok {
            Ok(())
        } else {
            domain(format!(
                "{} is undefined somewhere on [{}, {}]",
                self.name(),
                range.lo,
                range.hi
            ))
        }
    }
}

impl std::str::FromStr for TargetKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gelu" => Ok(Self::Gelu),
            "exp" => Ok(Self::Exp),
            "recip" | "div" | "divide" => Ok(Self::Recip),
            "rsqrt" | "1/sqrt" => Ok(Self::Rsqrt),
            other => Err(crate::error::Error::Usage(format!("unknown target '{other}'"))),
        }
    }
}

/// Which function is approximated, over what inputs, and how the network is
/// initialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub input_range: Interval,
    pub init_policy: InitPolicy,
}

impl TargetSpec {
    /// Default training setup for each target.
    pub fn default_for(kind: TargetKind) -> Self {
        let (lo, hi, init_policy) = match kind {
            TargetKind::Gelu => (-5.0, 5.0, InitPolicy::RandomSigned),
            TargetKind::Exp => (-256.0, 0.0, InitPolicy::PositiveWPositiveB),
            TargetKind::Recip => (1.0, 1024.0, InitPolicy::NegativeWPositiveB),
            TargetKind::Rsqrt => (0.1, 1024.0, InitPolicy::NegativeWPositiveB),
        };
        Self {
            kind,
            input_range: Interval { lo, hi },
            init_policy,
        }
    }

    pub fn with_range(self, range: Interval) -> Result<Self> {
        self.kind.check_range(range)?;
        Ok(Self {
            input_range: range,
            ..self
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.kind.eval(x)
    }
}

fn finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        domain(format!("{what}: non-finite input {x}"))
    }
}

/// Error function. Positive-term series below 3, continued fraction for
/// erfc above.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let r = if a < 3.0 {
        erf_series(a)
    } else {
        1.0 - erfc_cf(a)
    };
    r.copysign(x)
}

// erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (2n+1)!!
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= 2.0 * x2 / f64::from(2 * n + 1);
        sum += term;
        if term < sum * 1e-17 || n > 200 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

// erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), x ≥ 3
fn erfc_cf(x: f64) -> f64 {
    let mut f = x;
    for k in (1..=120).rev() {
        f = x + (k as f64 * 0.5) / f;
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

pub fn gelu_ref(x: f64) -> Result<f64> {
    finite(x, "gelu")?;
    Ok(0.5 * x * (1.0 + erf(x / std::f64::consts::SQRT_2)))
}

pub fn exp_ref(x: f64) -> Result<f64> {
    finite(x, "exp")?;
    Ok(x.exp())
}

pub fn recip_ref(x: f64) -> Result<f64> {
    finite(x, "recip")?;
    if x == 0.0 {
        return domain("recip: division by zero");
    }
    Ok(1.0 / x)
}

pub fn rsqrt_ref(x: f64) -> Result<f64> {
    finite(x, "rsqrt")?;
    if x <= 0.0 {
        return domain(format!("rsqrt: non-positive input {x}"));
    }
    Ok(1.0 / x.sqrt())
}

/// Max-subtracted softmax.
pub fn softmax_ref(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return domain("softmax: empty vector");
    }
    for &x in v {
        finite(x, "softmax")?;
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    Ok(e.into_iter().map(|x| x / sum).collect())
}

/// Mean and population variance.
pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let c = v.len() as f64;
    // offset by the first element so constant vectors give exactly μ = v₀
    let pivot = v.first().copied().unwrap_or(0.0);
    let mean = pivot + v.iter().map(|x| x - pivot).sum::<f64>() / c;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / c;
    (mean, var)
}

/// Standardization `(x - μ) / √(σ² + ε)` without gain or bias.
pub fn layernorm_ref(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return domain("layernorm: need at least two elements");
    }
    for &x in v {
        finite(x, "layernorm")?;
    }
    let (mean, var) = mean_var(v);
    let inv = 1.0 / (var + LAYERNORM_EPS).sqrt();
    Ok(v.iter().map(|x| (x - mean) * inv).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Composite Simpson quadrature of 2/√π ∫₀ˣ e^{-t²} dt, accumulated panel by panel.
    fn erf_by_quadrature(step: f64, panels: usize) -> Vec<(f64, f64)> {
        let f = |t: f64| FRAC_2_SQRT_PI * (-t * t).exp();
        let mut acc = 0.0;
        let mut out = vec![(0.0, 0.0)];
        for k in 0..panels {
            let a = k as f64 * step;
            let b = a + step;
            acc += step / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
            out.push((b, acc));
        }
        out
    }

    #[test]
    fn erf_matches_quadrature_oracle() {
        let mut worst: f64 = 0.0;
        for (x, want) in erf_by_quadrature(1e-3, 6000) {
            worst = worst.max((erf(x) - want).abs()).max((erf(-x) + want).abs());
        }
        assert!(worst <= 1e-12, "worst {worst:e}");
        // 1 - erf(5/√2) is tiny, so gelu(5) sits within 1e-5 of 5
        let tail = 1.0 - erf(5.0 / std::f64::consts::SQRT_2);
        assert!(tail > 0.0 && tail < 1e-6);
    }

    #[test]
    fn gelu_examples() {
        assert_eq!(gelu_ref(0.0).unwrap(), 0.0);
        assert!((gelu_ref(5.0).unwrap() - 5.0).abs() < 1e-5);
        assert!(gelu_ref(-5.0).unwrap().abs() < 1e-5);
        assert!(gelu_ref(f64::NAN).is_err());
        assert!(gelu_ref(f64::INFINITY).is_err());
    }

    #[test]
    fn gelu_reflection_relation() {
        // x·Φ(x) − (−x)·Φ(−x) = x·(Φ(x) + Φ(−x)) = x
        for i in 0..=60_000 {
            let x = -6.0 + i as f64 * 2e-4;
            let s = gelu_ref(x).unwrap() - gelu_ref(-x).unwrap();
            assert!((s - x).abs() <= 1e-10, "x={x}");
        }
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(exp_ref(0.0).unwrap(), 1.0);
        assert_eq!(recip_ref(1024.0).unwrap(), 0.0009765625);
        assert_eq!(rsqrt_ref(0.25).unwrap(), 2.0);
        assert!(recip_ref(0.0).is_err());
        assert!(rsqrt_ref(0.0).is_err());
        assert!(rsqrt_ref(-1.0).is_err());
        assert!(exp_ref(f64::NAN).is_err());
    }

    #[test]
    fn softmax_examples() {
        let u = softmax_ref(&[2.5, 2.5, 2.5]).unwrap();
        for p in u {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax_ref(&[0.0, 3f64.ln()]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        assert_eq!(softmax_ref(&[1000.0, 1000.0]).unwrap(), vec![0.5, 0.5]);
        assert!(softmax_ref(&[]).is_err());
    }

    #[test]
    fn layernorm_examples() {
        let y = layernorm_ref(&[1.0, 2.0, 3.0]).unwrap();
        let r = 1.5f64.sqrt();
        for (a, b) in y.iter().zip([-r, 0.0, r]) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(layernorm_ref(&[4.0; 4]).unwrap(), vec![0.0; 4]);
        assert_eq!(layernorm_ref(&[0.1; 3]).unwrap(), vec![0.0; 3]);
        assert!(layernorm_ref(&[1.0]).is_err());
    }

    #[test]
    fn default_specs_match_training_table() {
        use InitPolicy::*;
        let expect = [
            (TargetKind::Gelu, -5.0, 5.0, RandomSigned),
            (TargetKind::Exp, -256.0, 0.0, PositiveWPositiveB),
            (TargetKind::Recip, 1.0, 1024.0, NegativeWPositiveB),
            (TargetKind::Rsqrt, 0.1, 1024.0, NegativeWPositiveB),
        ];
        for (kind, lo, hi, policy) in expect {
            let s = TargetSpec::default_for(kind);
            assert_eq!((s.input_range.lo, s.input_range.hi, s.init_policy), (lo, hi, policy));
            assert!(s.kind.check_range(s.input_range).is_ok());
        }
        assert!(TargetKind::Recip.check_range(Interval::new(-1.0, 1.0).unwrap()).is_err());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, 2..40)
    }

    proptest! {
        #[test]
        fn softmax_is_probability_vector(v in vec_strategy()) {
            let p = softmax_ref(&v).unwrap();
            prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn softmax_shift_invariant(v in vec_strategy(), c in -100.0f64..100.0) {
            let a = softmax_ref(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let b = softmax_ref(&shifted).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn layernorm_standardizes(v in vec_strategy()) {
            let (_, var) = mean_var(&v);
            prop_assume!(var > 1e-3);
            let y = layernorm_ref(&v).unwrap();
            let (m, s2) = mean_var(&y);
            prop_assert!(m.abs() <= 1e-10);
            prop_assert!((s2 - 1.0).abs() <= 1e-10);
        }

        #[test]
        fn layernorm_affine_invariant(v in vec_strategy(), a in 0.1f64..10.0, b in -20.0f64..20.0) {
            let (_, var) = mean_var(&v);
            prop_assume!(var > 1e-3);
            let y = layernorm_ref(&v).unwrap();
            let w: Vec<f64> = v.iter().map(|x| a * x + b).collect();
            let z = layernorm_ref(&w).unwrap();
            for (p, q) in y.iter().zip(&z) {
                prop_assert!((p - q).abs() <= 1e-9);
            }
        }

        #[test]
        fn recip_of_squared_rsqrt(x in 0.1f64..1024.0) {
            let r = rsqrt_ref(x).unwrap();
            let back = recip_ref(r * r).unwrap();
            prop_assert!(((back - x) / x).abs() <= 1e-9);
        }
    }
}
