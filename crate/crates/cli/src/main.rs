//! `hugs`: compile networks, run hybrid inference, and report storage.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hugs::compile::{compile, CompileError, JunctionTree, DEFAULT_GIBBS_THRESHOLD};
use hugs::fixtures;
use hugs::gibbs::{SamplerConfig, RNG_NAME};
use hugs::model::{parse_evidence, parse_network, Evidence, Network};
use hugs::oracle::storage_report;
use hugs::propagate::{propagate, Calibrated, PropagateError, PropagationConfig};

#[derive(Parser)]
#[command(name = "hugs", version, about = "Hybrid exact and Gibbs-sampling inference on junction trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a network and print its junction tree.
    Compile {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Run one propagation and print the posterior marginals.
    Infer {
        #[command(flatten)]
        input: Input,
        /// Evidence file with one finding per line.
        #[arg(long, value_name = "FILE")]
        evidence: Option<PathBuf>,
        #[command(flatten)]
        sampling: Sampling,
        /// Write the message trace to FILE.
        #[arg(long, value_name = "FILE")]
        trace_messages: Option<PathBuf>,
        /// Write every Gibbs sweep to FILE as CSV.
        #[arg(long, value_name = "FILE")]
        trace_sweeps: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Report dense and hybrid storage per universe.
    Report {
        #[command(flatten)]
        input: Input,
        /// Sample records kept per GIBBS universe.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Input {
    /// Network file, or one of builtin:aunt-emily, builtin:aunt-emily-hybrid,
    /// builtin:copy, builtin:storage-876.
    network: String,
    /// Universes with more entries than this are sampled; `inf` disables sampling.
    #[arg(long, value_name = "ENTRIES|inf", value_parser = parse_threshold, default_value_t = Threshold(Some(DEFAULT_GIBBS_THRESHOLD)))]
    gibbs_threshold: Threshold,
}

#[derive(Args)]
struct Sampling {
    /// Recorded sweeps per GIBBS universe.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Burn-in sweeps as a fraction of the recorded sweeps.
    #[arg(long, default_value_t = 0.10)]
    burn_in: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Output {
    /// Write the result to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Clone, Copy)]
struct Threshold(Option<u64>);

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(t) => write!(f, "{t}"),
            None => f.write_str("inf"),
        }
    }
}

fn parse_threshold(s: &str) -> Result<Threshold, String> {
    if s == "inf" {
        return Ok(Threshold(None));
    }
    match s.parse::<u64>() {
        Ok(0) => Err("threshold must be at least 1".into()),
        Ok(t) => Ok(Threshold(Some(t))),
        Err(e) => Err(e.to_string()),
    }
}

/// Failure classes, mapped to exit codes 1, 2 and 3.
enum Failure {
    Inconsistent(anyhow::Error),
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Inconsistent(_) => 1,
            Failure::Input(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Inconsistent(e) | Failure::Input(e) | Failure::Internal(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<PropagateError> for Failure {
    fn from(e: PropagateError) -> Self {
        if e.is_inconsistent_evidence() {
            Failure::Inconsistent(e.into())
        } else if matches!(e, PropagateError::BadEvidence(_) | PropagateError::UnknownVariable(_)) {
            Failure::Input(e.into())
        } else {
            Failure::Internal(e.into())
        }
    }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::InvalidThreshold => Failure::Input(e.into()),
            _ => Failure::Internal(e.into()),
        }
    }
}

/// A loaded input: a network, a tree, or both.
struct Loaded {
    net: Option<Network>,
    tree: Option<JunctionTree>,
}

fn load(input: &Input) -> Result<Loaded, Failure> {
    let threshold = input.gibbs_threshold.0;
    if let Some(name) = input.network.strip_prefix("builtin:") {
        return match name {
            "aunt-emily" | "copy" => {
                let net = if name == "copy" { fixtures::copy_network(0.3) } else { fixtures::aunt_emily_network() };
                let tree = compile(&net, threshold)?;
                Ok(Loaded { net: Some(net), tree: Some(tree) })
            }
            "aunt-emily-hybrid" => {
                let net = fixtures::aunt_emily_network();
                let tree = fixtures::aunt_emily_tree(&net);
                Ok(Loaded { net: Some(net), tree: Some(tree) })
            }
            "storage-876" => Ok(Loaded { net: None, tree: Some(fixtures::synthetic_storage_tree()) }),
            _ => Err(anyhow!("unknown builtin `{name}`").into()),
        };
    }
    let net = read_network(Path::new(&input.network))?;
    let tree = compile(&net, threshold)?;
    Ok(Loaded { net: Some(net), tree: Some(tree) })
}

fn read_network(path: &Path) -> anyhow::Result<Network> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_network(&text).with_context(|| format!("{}", path.display()))
}

fn read_evidence(path: &Path, net: &Network) -> anyhow::Result<Evidence> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_evidence(&text, net).with_context(|| format!("{}", path.display()))
}

fn write_out(output: &Output, text: &str) -> Result<(), Failure> {
    match &output.output {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Input),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render_marginals(net: &Network, cal: &Calibrated, header: &str, format: Format) -> Result<String, Failure> {
    let mut s = String::from(header);
    if let Format::Csv = format {
        s.push_str("variable,state,probability\n");
    }
    for v in net.ids() {
        let m = cal.marginal(v)?;
        let var = net.variable(v);
        for (state, p) in var.states.iter().zip(m) {
            let _ = match format {
                Format::Text => writeln!(s, "{} {} {p:.9}", var.name, state),
                Format::Csv => writeln!(s, "{},{},{p:.9}", var.name, state),
            };
        }
    }
    Ok(s)
}

fn render_sweeps(cal: &Calibrated) -> String {
    let mut s = String::from("universe,sweep,recorded,config\n");
    for r in &cal.sweeps {
        let config: Vec<String> = r.config.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{},{},{},{}", r.universe, r.sweep, r.recorded, config.join(" "));
    }
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compile { input, output } => {
            let loaded = load(&input)?;
            let tree = loaded.tree.ok_or_else(|| Failure::Internal(anyhow!("no tree")))?;
            write_out(&output, &tree.dump())
        }
        Command::Infer { input, evidence, sampling, trace_messages, trace_sweeps, format, output } => {
            let loaded = load(&input)?;
            let net = loaded.net.ok_or_else(|| anyhow!("`{}` has no network to run inference on", input.network))?;
            let tree = loaded.tree.ok_or_else(|| Failure::Internal(anyhow!("no tree")))?;
            let ev = match &evidence {
                Some(path) => read_evidence(path, &net)?,
                None => Evidence::new(),
            };
            let sampler = SamplerConfig {
                burn_in_fraction: sampling.burn_in,
                ..SamplerConfig::new(sampling.samples, sampling.seed)
            };
            sampler.validate().map_err(|e| Failure::Input(e.into()))?;
            let cfg =
                PropagationConfig { sampler, trace_sweeps: trace_sweeps.is_some(), ..PropagationConfig::default() };
            let cal = propagate(&tree, &ev, &cfg)?;
            let (de, gibbs) = tree.mode_counts();
            let header = format!(
                "# seed {} rng {RNG_NAME} samples {} burn-in {} gibbs-threshold {}\n# universes {} (DE {de}, GIBBS {gibbs}) root {} findings {}\n",
                sampling.seed,
                sampling.samples,
                sampling.burn_in,
                input.gibbs_threshold,
                de + gibbs,
                cal.root,
                ev.len()
            );
            if let Some(path) = &trace_messages {
                let mut text = cal.trace_lines().join("\n");
                text.push('\n');
                std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            if let Some(path) = &trace_sweeps {
                std::fs::write(path, render_sweeps(&cal))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            write_out(&output, &render_marginals(&net, &cal, &header, format)?)
        }
        Command::Report { input, samples, format, output } => {
            let loaded = load(&Input { gibbs_threshold: Threshold(None), network: input.network.clone() })?;
            let tree = loaded.tree.ok_or_else(|| Failure::Internal(anyhow!("no tree")))?;
            let report = storage_report(&tree, input.gibbs_threshold.0, samples);
            let text = match format {
                Format::Text => report.render_text(),
                Format::Csv => report.render_csv(),
            };
            write_out(&output, &text)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
