//! Command-line surface: build models from dialog specs, decode logit
//! files or plain text, run batch benchmarks, export graphs as DOT.

pub mod bench;
pub mod wer;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use slu::{
    build_model, decode, parse_dialog_spec, text_to_logits, Alphabet, DecodeParams, GrammarMode,
    LogitMatrix, ModelBundle, TextEncodeParams,
};
use wfst::Wfst;

#[derive(Parser)]
#[command(
    name = "slu",
    version,
    about = "Grammar-driven intent and slot decoding for CTC label matrices and plain text"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Compile a dialog spec and alphabet into a model directory.
    Build {
        /// Dialog spec JSON (intents + lookups).
        #[arg(long)]
        spec: PathBuf,
        /// Alphabet JSON (labels in CTC order, designated blank).
        #[arg(long)]
        alphabet: PathBuf,
        /// Grammar mode: fixed | 2gram.
        #[arg(long, default_value = "fixed")]
        mode: GrammarMode,
        /// Output model directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a logit file (FLGT or JSON) against a model.
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        logits: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Decode plain text through the pseudo-logit frontend.
    DecodeText {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        text: String,
        /// Seed for the frontend's floor-probability jitter.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the generated matrix as an FLGT file.
        #[arg(long)]
        dump_logits: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Evaluate a JSON-lines case file: exact-match accuracy and WER.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        cases: PathBuf,
        /// Report JSON output path.
        #[arg(long)]
        out: PathBuf,
        /// Seed for encoding text cases.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Render a serialized graph as Graphviz DOT.
    Dot {
        #[arg(long)]
        fst: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
pub struct ParamArgs {
    /// Labels kept per frame (default from the model manifest).
    #[arg(long = "top-k")]
    pub top_k: Option<usize>,
    /// Rank for the global pruning threshold.
    #[arg(long = "mean-k")]
    pub mean_k: Option<usize>,
    /// Exponential probability scaling.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Linear input-vs-grammar weight scaling.
    #[arg(long = "acoustic-scale")]
    pub acoustic_scale: Option<f64>,
    /// Comma-separated intent subset to decode.
    #[arg(long = "intents", value_delimiter = ',')]
    pub intents: Option<Vec<String>>,
}

impl ParamArgs {
    fn resolve(&self, model: &ModelBundle) -> DecodeParams {
        let d = model.defaults;
        DecodeParams {
            top_k: self.top_k.unwrap_or(d.top_k),
            mean_k: self.mean_k.unwrap_or(d.mean_k),
            gamma: self.gamma.unwrap_or(d.gamma),
            acoustic_scale: self.acoustic_scale.unwrap_or(d.acoustic_scale),
            intent_filter: self
                .intents
                .as_ref()
                .map(|v| v.iter().cloned().collect::<BTreeSet<_>>()),
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Build {
            spec,
            alphabet,
            mode,
            out,
        } => {
            let spec_text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let parsed = parse_dialog_spec(&spec_text)?;
            let alphabet = Alphabet::load(&alphabet)?;
            let started = Instant::now();
            let model = build_model(&parsed, &alphabet, mode)?;
            let built_ms = started.elapsed().as_secs_f64() * 1e3;
            model.save(&out)?;
            println!(
                "built {} intent(s) in {:.1} ms ({} mode) -> {}",
                model.intents.len(),
                built_ms,
                mode,
                out.display()
            );
            Ok(())
        }
        Cmd::Decode {
            model,
            logits,
            params,
        } => {
            let model = load_model(&model)?;
            let matrix = LogitMatrix::load(&logits)
                .with_context(|| format!("reading {}", logits.display()))?;
            decode_and_print(&matrix, &model, &params)
        }
        Cmd::DecodeText {
            model,
            text,
            seed,
            dump_logits,
            params,
        } => {
            let model = load_model(&model)?;
            let symbols: Vec<String> =
                model.labels.symbols().skip(1).map(String::from).collect();
            let blank = model
                .labels
                .symbol(model.blank)
                .expect("blank id valid")
                .to_string();
            // piece vocabularies spell the space as the boundary marker
            let text = match (&model.label_kind, &model.boundary) {
                (slu::LabelKind::Pieces, Some(boundary)) => text
                    .to_lowercase()
                    .split_whitespace()
                    .collect::<Vec<_>>()
                    .join(boundary),
                _ => text,
            };
            let matrix = text_to_logits(
                &text,
                &symbols,
                &blank,
                &TextEncodeParams {
                    rng_seed: seed,
                    ..TextEncodeParams::default()
                },
            )?;
            if let Some(path) = dump_logits {
                matrix
                    .save_flgt(&path)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            decode_and_print(&matrix, &model, &params)
        }
        Cmd::Bench {
            model,
            cases,
            out,
            seed,
            params,
        } => {
            let model = load_model(&model)?;
            let cases_text = std::fs::read_to_string(&cases)
                .with_context(|| format!("reading {}", cases.display()))?;
            let parsed = bench::parse_cases(&cases_text);
            let base_dir = cases
                .parent()
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            let p = params.resolve(&model);
            let report = bench::run_bench(&model, &parsed, &p, seed, &base_dir);
            let mut report_json = serde_json::to_string_pretty(&report)?;
            report_json.push('\n');
            std::fs::write(&out, report_json)
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "accuracy {:.4} ({}/{} cases){}",
                report.accuracy,
                report.correct,
                report.cases,
                match report.wer {
                    Some(w) => format!(", wer {:.4} over {} case(s)", w, report.wer_cases),
                    None => String::new(),
                }
            );
            eprintln!(
                "decode {:.1} ms total, {:.2} ms/case, rtf n/a -> {}",
                report.timing.decode_ms_total,
                report.timing.decode_ms_mean,
                out.display()
            );
            Ok(())
        }
        Cmd::Dot { fst, out } => {
            let graph = Wfst::load(&fst)?;
            let dot = graph.to_dot();
            match out {
                Some(path) => std::fs::write(&path, dot)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{dot}"),
            }
            Ok(())
        }
    }
}

fn load_model(path: &PathBuf) -> anyhow::Result<ModelBundle> {
    let started = Instant::now();
    let model =
        ModelBundle::load(path).with_context(|| format!("loading model {}", path.display()))?;
    eprintln!(
        "model loaded in {:.1} ms ({} intents)",
        started.elapsed().as_secs_f64() * 1e3,
        model.intents.len()
    );
    Ok(model)
}

fn decode_and_print(
    matrix: &LogitMatrix,
    model: &ModelBundle,
    params: &ParamArgs,
) -> anyhow::Result<()> {
    let p = params.resolve(model);
    let started = Instant::now();
    let result = decode(matrix, model, &p)?;
    eprintln!("decoded in {:.2} ms", started.elapsed().as_secs_f64() * 1e3);
    println!("{}", serde_json::to_string(&result.to_json())?);
    Ok(())
}

/// Maps an error chain onto a machine-readable kind.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<slu::SluError>() {
            return match e {
                slu::SluError::Spec(_) => "spec",
                slu::SluError::Build(_) => "build",
                slu::SluError::Input(_) => "input",
                slu::SluError::Model(_) => "model",
                slu::SluError::Invariant(_) => "invariant",
                slu::SluError::Wfst(_) => "wfst",
                slu::SluError::Io(_) => "io",
                slu::SluError::Json(_) => "json",
            };
        }
        if cause.downcast_ref::<wfst::WfstError>().is_some() {
            return "wfst";
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "error"
}
