//! Analytic cycle model for one transformer encoder stack: element counts per
//! non-linear operator times per-element latency, plus MAC-array cycles for
//! the matrix products.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    NnLut,
    IBert,
}

/// Cycles per scalar element for each non-linear unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latencies {
    pub gelu: f64,
    pub exp: f64,
    pub div: f64,
    pub rsqrt: f64,
}

impl Latencies {
    pub const NN_LUT: Self = Self {
        gelu: 2.0,
        exp: 2.0,
        div: 2.0,
        rsqrt: 2.0,
    };

    /// Integer-only kernels. The division latency is not published; it
    /// defaults to the square-root unit's 5 cycles.
    pub const I_BERT: Self = Self {
        gelu: 3.0,
        exp: 4.0,
        div: 5.0,
        rsqrt: 5.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub nn_lut: Latencies,
    pub i_bert: Latencies,
    /// MAC engines working in parallel.
    pub engines: u32,
    /// Dot products per engine per cycle.
    pub dots_per_cycle: u32,
    /// Length of each dot product.
    pub dot_len: u32,
    /// Elements each non-linear unit processes in parallel.
    #[serde(default = "one")]
    pub nonlinear_lanes: u32,
    /// Constant cycles per layer for everything not modelled ("etc").
    pub etc_cycles_per_layer: f64,
}

fn one() -> u32 {
    1
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            nn_lut: Latencies::NN_LUT,
            i_bert: Latencies::I_BERT,
            engines: 2,
            dots_per_cycle: 64,
            dot_len: 16,
            nonlinear_lanes: 1,
            etc_cycles_per_layer: 0.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        for l in [self.nn_lut, self.i_bert] {
            if [l.gelu, l.exp, l.div, l.rsqrt].iter().any(|&c| !(c >= 1.0 && c.is_finite())) {
                return Err(Error::Precondition("latencies must be finite and ≥ 1 cycle".into()));
            }
        }
        if self.nonlinear_lanes == 0 {
            return Err(Error::Precondition("non-linear units need at least one lane".into()));
        }
        if self.engines == 0 || self.dots_per_cycle == 0 || self.dot_len == 0 {
            return Err(Error::Precondition("MAC throughput must be positive".into()));
        }
        if !(self.etc_cycles_per_layer >= 0.0 && self.etc_cycles_per_layer.is_finite()) {
            return Err(Error::Precondition("etc overhead must be finite and ≥ 0".into()));
        }
        Ok(())
    }

    pub fn latencies(&self, backend: Backend) -> Latencies {
        match backend {
            Backend::NnLut => self.nn_lut,
            Backend::IBert => self.i_bert,
        }
    }

    pub fn macs_per_cycle(&self) -> f64 {
        f64::from(self.engines) * f64::from(self.dots_per_cycle) * f64::from(self.dot_len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub hidden: u64,
    pub ffn: u64,
    pub heads: u64,
    pub layers: u64,
    pub seq_len: u64,
}

impl WorkloadSpec {
    /// Base-size encoder dimensions (768 hidden, 3072 FFN, 12 heads, 12 layers).
    pub fn roberta_base(seq_len: u64) -> Self {
        Self {
            hidden: 768,
            ffn: 3072,
            heads: 12,
            layers: 12,
            seq_len,
        }
    }

    pub fn with_seq_len(self, seq_len: u64) -> Self {
        Self { seq_len, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.hidden, self.ffn, self.heads, self.layers, self.seq_len].contains(&0) {
            return Err(Error::Precondition("workload dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Whole-stack element counts (all layers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub gelu: u64,
    pub exp: u64,
    pub div: u64,
    pub rsqrt: u64,
    pub macs: u64,
    pub layers: u64,
}

pub fn op_counts(w: &WorkloadSpec) -> OpCounts {
    let (h, f, sl) = (w.hidden, w.ffn, w.seq_len);
    let proj = 4 * sl * h * h; // Q, K, V and output projections
    let attn = 2 * sl * sl * h; // scores and context, summed over heads
    let ffn = 2 * sl * h * f;
    // mean and variance accumulation of both LayerNorms, one MAC per element each
    let ln_stats = 2 * 2 * sl * h;
    OpCounts {
        gelu: sl * f * w.layers,
        exp: w.heads * sl * sl * w.layers,
        div: w.heads * sl * w.layers,
        rsqrt: 2 * sl * w.layers,
        macs: (proj + attn + ffn + ln_stats) * w.layers,
        layers: w.layers,
    }
}

/// Cycles or percentages per category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub gelu: f64,
    pub layernorm: f64,
    pub softmax: f64,
    pub matmul: f64,
    pub etc: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.gelu + self.layernorm + self.softmax + self.matmul + self.etc
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            gelu: self.gelu * k,
            layernorm: self.layernorm * k,
            softmax: self.softmax * k,
            matmul: self.matmul * k,
            etc: self.etc * k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackendCycles {
    pub backend: Backend,
    pub cycles: Breakdown,
    pub percent: Breakdown,
    pub total: f64,
}

pub fn cycles(counts: &OpCounts, params: &CostParams, backend: Backend) -> BackendCycles {
    let lat = params.latencies(backend);
    let lanes = f64::from(params.nonlinear_lanes);
    let c = Breakdown {
        gelu: counts.gelu as f64 * lat.gelu / lanes,
        layernorm: counts.rsqrt as f64 * lat.rsqrt / lanes,
        softmax: (counts.exp as f64 * lat.exp + counts.div as f64 * lat.div) / lanes,
        matmul: counts.macs as f64 / params.macs_per_cycle(),
        etc: params.etc_cycles_per_layer * counts.layers as f64,
    };
    let total = c.total();
    BackendCycles {
        backend,
        cycles: c,
        percent: c.scaled(100.0 / total),
        total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub workload: WorkloadSpec,
    pub i_bert: BackendCycles,
    pub nn_lut: BackendCycles,
    /// Total I-BERT cycles over total NN-LUT cycles.
    pub speedup: f64,
}

pub fn cycle_report(w: &WorkloadSpec, params: &CostParams) -> Result<CycleReport> {
    w.validate()?;
    params.validate()?;
    let counts = op_counts(w);
    let i_bert = cycles(&counts, params, Backend::IBert);
    let nn_lut = cycles(&counts, params, Backend::NnLut);
    Ok(CycleReport {
        workload: *w,
        speedup: i_bert.total / nn_lut.total,
        i_bert,
        nn_lut,
    })
}

pub fn sweep(base: &WorkloadSpec, seq_lens: &[u64], params: &CostParams) -> Result<Vec<CycleReport>> {
    seq_lens
        .iter()
        .map(|&sl| cycle_report(&base.with_seq_len(sl), params))
        .collect()
}

/// Matrix-product cycles are the same on both backends, so the end-to-end
/// speedup equals the ratio of their matrix-product shares.
pub fn speedup_from_matmul_share(nn_lut_pct: f64, i_bert_pct: f64) -> f64 {
    nn_lut_pct / i_bert_pct
}

/// Published relative-cycle breakdown (percent) for the base-size encoder.
#[allow(clippy::approx_constant)]
pub mod published {
    pub const SEQ_LENS: [u64; 8] = [16, 32, 64, 128, 256, 384, 512, 1024];

    pub const I_BERT_GELU: [f64; 8] = [6.55, 6.58, 6.45, 6.22, 5.80, 5.43, 5.11, 4.12];
    pub const I_BERT_LAYERNORM: [f64; 8] = [9.82, 9.86, 9.68, 9.33, 8.70, 8.14, 7.66, 6.19];
    pub const I_BERT_SOFTMAX: [f64; 8] = [1.36, 1.37, 2.69, 5.18, 9.66, 13.57, 17.02, 27.49];
    pub const I_BERT_MATMUL: [f64; 8] = [81.17, 81.64, 80.65, 78.76, 75.36, 72.40, 69.79, 61.86];
    pub const I_BERT_ETC: [f64; 8] = [1.09, 0.55, 0.54, 0.52, 0.48, 0.45, 0.43, 0.34];

    pub const NN_LUT_GELU: [f64; 8] = [4.71, 4.73, 4.68, 4.57, 4.37, 4.19, 4.02, 3.46];
    pub const NN_LUT_LAYERNORM: [f64; 8] = [5.89, 5.92, 5.85, 5.71, 5.46, 5.24, 5.03, 4.33];
    pub const NN_LUT_SOFTMAX: [f64; 8] = [0.59, 0.59, 1.17, 2.29, 4.37, 6.28, 8.04, 13.85];
    pub const NN_LUT_MATMUL: [f64; 8] = [87.63, 88.17, 87.72, 86.86, 85.25, 83.77, 82.41, 77.92];
    pub const NN_LUT_ETC: [f64; 8] = [1.18, 0.59, 0.58, 0.57, 0.55, 0.52, 0.50, 0.43];

    pub const SPEEDUP: [f64; 8] = [1.08, 1.08, 1.09, 1.10, 1.13, 1.16, 1.18, 1.26];
}

/// Percentages per backend and the speedup row, one column per report.
pub fn render_table(reports: &[CycleReport]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<10}{:<11}", "backend", "category");
    for r in reports {
        let _ = write!(out, "{:>9}", format!("SL={}", r.workload.seq_len));
    }
    out.push('\n');
    type Pick = fn(&Breakdown) -> f64;
    let rows: [(&str, Pick); 5] = [
        ("GELU", |b| b.gelu),
        ("LayerNorm", |b| b.layernorm),
        ("Softmax", |b| b.softmax),
        ("MatMul", |b| b.matmul),
        ("etc", |b| b.etc),
    ];
    for (label, side) in [
        ("I-BERT", (|r: &CycleReport| r.i_bert) as fn(&CycleReport) -> BackendCycles),
        ("NN-LUT", |r: &CycleReport| r.nn_lut),
    ] {
        for (i, (cat, pick)) in rows.iter().enumerate() {
            let _ = write!(out, "{:<10}{:<11}", if i == 0 { label } else { "" }, cat);
            for r in reports {
                let _ = write!(out, "{:>9.2}", pick(&side(r).percent));
            }
            out.push('\n');
        }
    }
    let _ = write!(out, "{:<21}", "speedup");
    for r in reports {
        let _ = write!(out, "{:>9.2}", r.speedup);
    }
    out.push('\n');
    out
}
