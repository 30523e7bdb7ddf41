//! Command-line front end. Every subcommand reads and writes artifacts from
//! [`crate::artifact`]; [`run`] returns an exit code instead of exiting so
//! the commands can be driven from tests.
//!
//! Exit codes: 0 success, 1 usage, 2 contract or equivalence failure,
//! 3 numeric divergence. `NNLUT_SEED` overrides `--seed`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::artifact::{
    Artifact, CompositeDoc, CompositeOp, LutDoc, LutRef, NetDoc, Provenance, ReportDoc,
};
use crate::composite::{lut_gelu, lut_layernorm, lut_softmax, ScaledRsqrt};
use crate::cost::{self, CostParams, WorkloadSpec};
use crate::error::{Error, Result};
use crate::lut::{
    equivalence_deviation, fit_linear_lut, int32_fits, int32_scale_for, nn_to_lut, to_fp16, to_int32, Precision,
    EQUIVALENCE_TOL,
};
use crate::metrics::{compare, l1_error_curve};
use crate::net::{calibrate, finalize_net, fit_target, TrainConfig};
use crate::targets::{gelu_ref, layernorm_ref, softmax_ref, Interval, TargetKind, TargetSpec};

pub const SEED_ENV: &str = "NNLUT_SEED";

/// Grid points used by the conversion equivalence check.
const EQUIVALENCE_POINTS: usize = 100_000;

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const CONTRACT: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) => exit::USAGE,
        Error::Divergence { .. } => exit::DIVERGENCE,
        _ => exit::CONTRACT,
    }
}

#[derive(Debug, Parser)]
#[command(name = "nnlut", version, about = "Train ReLU approximators and turn them into lookup tables")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Fp32,
    Fp16,
    Int32,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OpArg {
    Softmax,
    Layernorm,
    Gelu,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Train a network for one target function.
    Train {
        #[arg(long)]
        target: TargetKind,
        /// Table entries; the network gets entries - 1 neurons.
        #[arg(long, default_value_t = 16)]
        entries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        range: Option<Vec<f64>>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Mini-batch size; 0 trains full-batch.
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        dataset_size: Option<usize>,
    },
    /// Fit the equally spaced baseline table.
    Baseline {
        #[arg(long)]
        target: TargetKind,
        #[arg(long, default_value_t = 16)]
        entries: usize,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        range: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a network into a lookup table, optionally lowered.
    Convert {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "fp32")]
        precision: PrecisionArg,
        /// Input scale for int32 tables.
        #[arg(long)]
        s_in: Option<f64>,
    },
    /// Error curve of a table against its reference function.
    Eval {
        #[arg(long)]
        lut: PathBuf,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        range: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        points: usize,
        #[arg(long)]
        csv: PathBuf,
        /// JSON report artifact.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Second table to compare against on the same grid.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Apply a composite operator to vectors read from a file.
    Compose {
        #[arg(long, value_enum)]
        op: OpArg,
        #[arg(long, num_args = 1.., required = true)]
        luts: Vec<PathBuf>,
        /// One vector per line, comma-separated.
        #[arg(long)]
        input: PathBuf,
        /// CSV of outputs and elementwise error.
        #[arg(long)]
        out: PathBuf,
        /// Also write the operator bundle manifest here.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = 1024.0)]
        rsqrt_upper: f64,
        #[arg(long, default_value_t = 10)]
        scale_log2: u32,
    },
    /// Re-fit a network on recorded inputs.
    Calibrate {
        #[arg(long)]
        net: PathBuf,
        /// Real numbers separated by commas or whitespace.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cycle breakdown and speedup per sequence length.
    Cost {
        /// JSON with hidden, ffn, heads, layers.
        #[arg(long)]
        model_dims: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        sl: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        /// JSON cost parameters; defaults when absent.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn seed_override(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}='{v}' is not a non-negative integer"))),
        Err(_) => Ok(flag),
    }
}

fn interval(v: &[f64]) -> Result<Interval> {
    match v {
        [lo, hi] => Interval::new(*lo, *hi).map_err(|e| usage(e.to_string())),
        _ => Err(usage("--range takes exactly two numbers")),
    }
}

/// Parses real numbers separated by commas and/or whitespace.
pub fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("'{t}' is not a finite number")))
        })
        .collect()
}

/// One comma-separated vector per non-empty line.
pub fn parse_vectors(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            line.split(',')
                .map(|t| {
                    let t = t.trim();
                    t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                        Error::Parse(format!("line {}: '{t}' is not a finite number", i + 1))
                    })
                })
                .collect()
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

struct Ctx<'a> {
    argv: &'a [String],
    log: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn provenance(&self, seed: Option<u64>, parents: Vec<String>) -> Provenance {
        Provenance::new(self.argv.to_vec(), seed, parents)
    }

    fn say(&mut self, msg: impl AsRef<str>) {
        let _ = writeln!(self.log, "{}", msg.as_ref());
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `log`. Returns the exit code.
pub fn run<I, T>(args: I, log: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(log, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut ctx = Ctx { argv: &argv, log };
    match dispatch(cli.cmd, &mut ctx) {
        Ok(()) => exit::OK,
        Err(e) => {
            ctx.say(format!("error: {e}"));
            if let Error::Divergence { last_state, .. } = &e {
                ctx.say(format!("last finite state: {} neurons", last_state.hidden()));
            }
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> ! {
    let code = run(std::env::args_os(), &mut std::io::stderr());
    std::process::exit(code)
}

fn dispatch(cmd: Cmd, ctx: &mut Ctx) -> Result<()> {
    match cmd {
        Cmd::Train {
            target,
            entries,
            seed,
            out,
            range,
            epochs,
            batch_size,
            dataset_size,
        } => {
            if entries < 2 {
                return Err(usage(format!("--entries must be at least 2, got {entries}")));
            }
            let mut spec = TargetSpec::default_for(target);
            if let Some(r) = range {
                spec = spec.with_range(interval(&r)?)?;
            }
            let defaults = TrainConfig::default();
            let cfg = TrainConfig {
                hidden: entries - 1,
                seed: seed_override(seed)?,
                epochs: epochs.unwrap_or(defaults.epochs),
                batch_size: match batch_size {
                    Some(0) => None,
                    Some(b) => Some(b),
                    None => defaults.batch_size,
                },
                dataset_size: dataset_size.unwrap_or(defaults.dataset_size),
                ..defaults
            };
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            let (net, trace) = fit_target(&spec, &cfg)?;
            let fin = finalize_net(&net);
            let art = Artifact::new(
                NetDoc::new(spec, &fin, trace.final_loss()),
                ctx.provenance(Some(cfg.seed), vec![]),
                vec![format!(
                    "range [{}, {}], {} epochs, initial loss {:e}",
                    spec.input_range.lo,
                    spec.input_range.hi,
                    cfg.epochs,
                    trace.initial_loss()
                )],
            )?;
            art.write(&out)?;
            ctx.say(format!(
                "trained {} with {} neurons: final mean loss {:e} -> {} ({})",
                target.name(),
                fin.net.hidden(),
                trace.final_loss(),
                out.display(),
                art.hash()
            ));
            Ok(())
        }
        Cmd::Baseline {
            target,
            entries,
            range,
            out,
        } => {
            if entries < 2 {
                return Err(usage(format!("--entries must be at least 2, got {entries}")));
            }
            let range = match range {
                Some(r) => interval(&r)?,
                None => TargetSpec::default_for(target).input_range,
            };
            let lut = fit_linear_lut(|x| target.eval(x), range, entries)?;
            let art = Artifact::new(
                LutDoc::new(Some(target), &lut),
                ctx.provenance(None, vec![]),
                vec![format!("equally spaced baseline on [{}, {}]", range.lo, range.hi)],
            )?;
            art.write(&out)?;
            ctx.say(format!("baseline {} -> {} ({})", target.name(), out.display(), art.hash()));
            Ok(())
        }
        Cmd::Convert {
            net,
            out,
            precision,
            s_in,
        } => {
            if matches!(precision, PrecisionArg::Int32) && s_in.is_none() {
                return Err(usage("--precision int32 requires --s-in"));
            }
            let net_art = Artifact::<NetDoc>::read(&net)?;
            let fin = net_art.payload.finalized();
            let spec = net_art.payload.spec;
            let lut = nn_to_lut(&fin)?;
            let grid = spec.input_range.widened(3.0).linspace(EQUIVALENCE_POINTS);
            let dev = equivalence_deviation(&fin, &lut, &grid);
            if !(dev <= EQUIVALENCE_TOL) {
                return Err(Error::Equivalence(dev));
            }
            let mut notes = vec![format!("equivalence max relative deviation {dev:e}")];
            let lowered = match precision {
                PrecisionArg::Fp32 => lut,
                PrecisionArg::Fp16 => to_fp16(&lut)?,
                PrecisionArg::Int32 => to_int32(&lut, s_in.expect("checked above"))?,
            };
            notes.extend(lowered.warnings().iter().cloned());
            if lowered.precision() == Precision::Int32 && !int32_fits(&lowered, spec.input_range) {
                let hint = int32_scale_for(&nn_to_lut(&fin)?, spec.input_range)
                    .map_or_else(|_| "none fits".to_string(), |s| format!("finest that fits: {s:e}"));
                let msg = format!("int32 outputs saturate on the training range; use a coarser --s-in ({hint})");
                ctx.say(format!("warning: {msg}"));
                notes.push(msg);
            }
            let art = Artifact::new(
                LutDoc::new(Some(spec.kind), &lowered),
                ctx.provenance(None, vec![net_art.hash().to_string()]),
                notes,
            )?;
            art.write(&out)?;
            ctx.say(format!(
                "{} entries, {:?}, deviation {dev:e} -> {} ({})",
                lowered.entries(),
                lowered.precision(),
                out.display(),
                art.hash()
            ));
            for w in lowered.warnings() {
                ctx.say(format!("warning: {w}"));
            }
            Ok(())
        }
        Cmd::Eval {
            lut,
            range,
            points,
            csv,
            out,
            against,
        } => {
            if points < 2 {
                return Err(usage(format!("--points must be at least 2, got {points}")));
            }
            let range = interval(&range)?;
            let art = Artifact::<LutDoc>::read(&lut)?;
            let kind = art
                .payload
                .function
                .ok_or_else(|| usage("table does not record which function it approximates"))?;
            kind.check_range(range)?;
            let table = art.payload.to_lut()?;
            let report = l1_error_curve(|x| table.eval(x), |x| kind.eval(x), range, points, art.hash())?;
            report.write_csv(fs::File::create(&csv)?)?;
            let mut body = serde_json::json!({ "summary": report.summary() });
            let mut parents = vec![art.hash().to_string()];
            ctx.say(format!(
                "{} on [{}, {}]: mean L1 {:e}, max {:e}",
                kind.name(),
                range.lo,
                range.hi,
                report.mean_l1,
                report.max_abs
            ));
            if let Some(other) = against {
                let other_art = Artifact::<LutDoc>::read(&other)?;
                let other_lut = other_art.payload.to_lut()?;
                let other_report = l1_error_curve(
                    |x| other_lut.eval(x),
                    |x| kind.eval(x),
                    range,
                    points,
                    other_art.hash(),
                )?;
                let cmp = compare(&report, &other_report)?;
                ctx.say(format!(
                    "vs {}: mean L1 {:e}, ratio {:.4}, wins {}/{}",
                    other.display(),
                    other_report.mean_l1,
                    cmp.aggregate_ratio,
                    cmp.a_wins,
                    points
                ));
                body["against"] = serde_json::json!({
                    "summary": other_report.summary(),
                    "aggregate_ratio": cmp.aggregate_ratio,
                    "a_wins": cmp.a_wins,
                    "b_wins": cmp.b_wins,
                    "ties": cmp.ties,
                });
                parents.push(other_art.hash().to_string());
            }
            if let Some(out) = out {
                let rep = Artifact::new(
                    ReportDoc {
                        what: "error_curve".into(),
                        body,
                    },
                    ctx.provenance(None, parents),
                    vec![],
                )?;
                rep.write(&out)?;
            }
            Ok(())
        }
        Cmd::Compose {
            op,
            luts,
            input,
            out,
            manifest,
            rsqrt_upper,
            scale_log2,
        } => compose(ctx, op, &luts, &input, &out, manifest.as_deref(), rsqrt_upper, scale_log2),
        Cmd::Calibrate {
            net,
            samples,
            epochs,
            seed,
            out,
        } => {
            let net_art = Artifact::<NetDoc>::read(&net)?;
            let xs = parse_reals(&read_text(&samples)?)?;
            if xs.is_empty() {
                return Err(usage(format!("{} contains no samples", samples.display())));
            }
            let kind = net_art.payload.spec.kind;
            let cfg = TrainConfig {
                epochs,
                seed: seed_override(seed)?,
                ..TrainConfig::calibration()
            };
            let start = net_art.payload.finalized().to_trainable();
            let (net_cal, trace) = calibrate(&start, &xs, |x| kind.eval(x), &cfg)?;
            let fin = finalize_net(&net_cal);
            let payload = if epochs == 0 {
                net_art.payload.clone()
            } else {
                NetDoc::new(net_art.payload.spec, &fin, trace.final_loss())
            };
            let art = Artifact::new(
                payload,
                ctx.provenance(Some(cfg.seed), vec![net_art.hash().to_string()]),
                vec![format!(
                    "calibrated on {} samples: mean L1 {:e} -> {:e}",
                    xs.len(),
                    trace.initial_loss(),
                    trace.final_loss()
                )],
            )?;
            art.write(&out)?;
            ctx.say(format!(
                "mean L1 on samples: before {:e}, after {:e} -> {} ({})",
                trace.initial_loss(),
                trace.final_loss(),
                out.display(),
                art.hash()
            ));
            Ok(())
        }
        Cmd::Cost {
            model_dims,
            sl,
            out,
            params,
        } => {
            #[derive(Deserialize)]
            struct Dims {
                hidden: u64,
                ffn: u64,
                heads: u64,
                layers: u64,
            }
            let d: Dims = serde_json::from_str(&read_text(&model_dims)?)
                .map_err(|e| Error::Parse(format!("{}: {e}", model_dims.display())))?;
            let params: CostParams = match params {
                Some(p) => serde_json::from_str(&read_text(&p)?)
                    .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?,
                None => CostParams::default(),
            };
            let base = WorkloadSpec {
                hidden: d.hidden,
                ffn: d.ffn,
                heads: d.heads,
                layers: d.layers,
                seq_len: 1,
            };
            let reports = cost::sweep(&base, &sl, &params)?;
            let table = cost::render_table(&reports);
            let art = Artifact::new(
                ReportDoc {
                    what: "cycle_breakdown".into(),
                    body: serde_json::to_value(&reports)?,
                },
                ctx.provenance(None, vec![]),
                vec![],
            )?;
            art.write(&out)?;
            ctx.say(table);
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn compose(
    ctx: &mut Ctx,
    op: OpArg,
    lut_paths: &[PathBuf],
    input: &Path,
    out: &Path,
    manifest: Option<&Path>,
    rsqrt_upper: f64,
    scale_log2: u32,
) -> Result<()> {
    let mut tables = Vec::new();
    for p in lut_paths {
        let art = Artifact::<LutDoc>::read(p)?;
        let kind = art.payload.function.ok_or_else(|| {
            usage(format!("{} does not record which function it approximates", p.display()))
        })?;
        tables.push((kind, art, p));
    }
    let find = |k: TargetKind| tables.iter().find(|t| t.0 == k);
    let (needed, composite_op): (&[(TargetKind, &str)], CompositeOp) = match op {
        OpArg::Softmax => (&[(TargetKind::Exp, "exp"), (TargetKind::Recip, "div")], CompositeOp::Softmax),
        OpArg::Layernorm => (&[(TargetKind::Rsqrt, "rsqrt")], CompositeOp::Layernorm),
        OpArg::Gelu => (&[(TargetKind::Gelu, "gelu")], CompositeOp::Gelu),
    };
    let missing: Vec<&str> = needed.iter().filter(|(k, _)| find(*k).is_none()).map(|n| n.1).collect();
    if !missing.is_empty() {
        return Err(usage(format!("missing required table(s): {}", missing.join(", "))));
    }
    let get = |k: TargetKind| -> Result<crate::lut::Lut> { find(k).expect("checked").1.payload.to_lut() };
    let vectors = parse_vectors(&read_text(input)?)?;

    let mut w = csv::Writer::from_writer(fs::File::create(out)?);
    w.write_record(["vector", "index", "input", "output", "reference", "abs_err"])?;
    let mut max_err = 0f64;
    let mut diag_note = String::new();
    match op {
        OpArg::Softmax => {
            let (e, d) = (get(TargetKind::Exp)?, get(TargetKind::Recip)?);
            let (mut shifted, mut clamped) = (0usize, 0usize);
            for (vi, v) in vectors.iter().enumerate() {
                let (y, diag) = lut_softmax(v, &e, &d)?;
                shifted += usize::from(diag.denominator_shift != 0);
                clamped += diag.clamped_exp;
                let r = softmax_ref(v)?;
                for i in 0..v.len() {
                    let err = (y[i] - r[i]).abs();
                    max_err = max_err.max(err);
                    w.serialize((vi, i, v[i], y[i], r[i], err))?;
                }
            }
            diag_note = format!("rescaled denominators: {shifted}, clamped exp outputs: {clamped}");
        }
        OpArg::Layernorm => {
            let sr = ScaledRsqrt::new(get(TargetKind::Rsqrt)?, rsqrt_upper, scale_log2)?;
            let mut scalings = 0u64;
            for (vi, v) in vectors.iter().enumerate() {
                let (y, diag) = lut_layernorm(v, &sr)?;
                scalings += u64::from(diag.rsqrt_scalings);
                let r = layernorm_ref(v)?;
                for i in 0..v.len() {
                    let err = (y[i] - r[i]).abs();
                    max_err = max_err.max(err);
                    w.serialize((vi, i, v[i], y[i], r[i], err))?;
                }
            }
            diag_note = format!("rsqrt scaling branch taken: {scalings}");
        }
        OpArg::Gelu => {
            let g = get(TargetKind::Gelu)?;
            for (vi, v) in vectors.iter().enumerate() {
                for (i, &x) in v.iter().enumerate() {
                    let (y, r) = (lut_gelu(&g, x), gelu_ref(x)?);
                    let err = (y - r).abs();
                    max_err = max_err.max(err);
                    w.serialize((vi, i, x, y, r, err))?;
                }
            }
        }
    }
    w.flush()?;
    ctx.say(format!("{} vectors, max elementwise error {max_err:e}", vectors.len()));
    if !diag_note.is_empty() {
        ctx.say(diag_note);
    }
    if let Some(path) = manifest {
        let luts = needed
            .iter()
            .map(|(k, role)| {
                let t = find(*k).expect("checked");
                LutRef {
                    role: role.to_string(),
                    hash: t.1.hash().to_string(),
                    path: t.2.display().to_string(),
                }
            })
            .collect::<Vec<_>>();
        let parents = luts.iter().map(|l| l.hash.clone()).collect();
        let layernorm = matches!(op, OpArg::Layernorm);
        let art = Artifact::new(
            CompositeDoc {
                op: composite_op,
                luts,
                rsqrt_upper: layernorm.then_some(rsqrt_upper),
                scale_log2: layernorm.then_some(scale_log2),
            },
            ctx.provenance(None, parents),
            vec![],
        )?;
        art.write(path)?;
    }
    Ok(())
}

impl clap::ValueEnum for TargetKind {
    fn value_variants<'a>() -> &'a [Self] {
        &TargetKind::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        let v = clap::builder::PossibleValue::new(self.name());
        Some(match self {
            TargetKind::Recip => v.aliases(["div", "divide"]),
            TargetKind::Rsqrt => v.alias("1/sqrt"),
            _ => v,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_reals_accepts_mixed_separators() {
        assert_eq!(parse_reals("1, 2.5\n-3e-1\t4").unwrap(), vec![1.0, 2.5, -0.3, 4.0]);
        assert!(parse_reals("").unwrap().is_empty());
        assert!(parse_reals("1, x").is_err());
        assert!(parse_reals("nan").is_err());
    }

    #[test]
    fn parse_vectors_reports_line_numbers() {
        assert_eq!(parse_vectors("1,2\n\n3").unwrap(), vec![vec![1.0, 2.0], vec![3.0]]);
        match parse_vectors("1,2\n3,,4") {
            Err(Error::Parse(msg)) => assert!(msg.starts_with("line 2"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exit_codes_by_error() {
        assert_eq!(exit_code(&Error::Usage("x".into())), 1);
        assert_eq!(exit_code(&Error::Equivalence(1.0)), 2);
        assert_eq!(exit_code(&Error::Precondition("x".into())), 2);
        let div = Error::Divergence {
            epoch: 1,
            last_loss: 0.0,
            last_state: Box::new(crate::net::ReluNet1H::new(vec![1.0], vec![0.0], vec![1.0]).unwrap()),
        };
        assert_eq!(exit_code(&div), 3);
    }

    #[test]
    fn clap_errors_are_usage() {
        let mut sink = Vec::new();
        assert_eq!(run(["nnlut", "bogus"], &mut sink), exit::USAGE);
        assert_eq!(run(["nnlut", "--help"], &mut sink), exit::OK);
        assert_eq!(run(["nnlut", "train", "--target", "tanh", "--out", "x"], &mut sink), exit::USAGE);
    }

    #[test]
    fn target_aliases_parse() {
        let cli = Cli::try_parse_from(["nnlut", "baseline", "--target", "div", "--out", "x"]).unwrap();
        assert!(matches!(cli.cmd, Cmd::Baseline { target: TargetKind::Recip, .. }));
    }
}
