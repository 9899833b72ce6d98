//! Command-line front end: designs, generators, bias/correlation
//! measurement, switching experiments, protocol simulation, and the
//! parameter calculator. Reports go to stdout as JSON, or CSV with --csv.

use clap::{Args, Parser, Subcommand, ValueEnum};
use derandlab::circuit::CircuitSpec;
use derandlab::design::{build_design_for, nw_params, verify_design, Design, NwProfile};
use derandlab::error::{Error, Result};
use derandlab::harness::{
    count_experiment, measure_bias, measure_correlation, pipeline_experiment, report_to_csv,
    report_to_json, BiasMode, PipelineConfig,
};
use derandlab::nof::{gip_correlation_scan, run_any_protocol, run_hg_protocol, NofPartition};
use derandlab::nwgen::{HardFunction, NwGenerator, OutputTest};
use derandlab::poly::SparseF2Poly;
use derandlab::restrictlab::{
    multi_switch_experiment, single_switch_experiment, trim_check, SwitchExperimentConfig,
    TrimConfig,
};
use derandlab::truthtable::TruthTable;
use num_bigint::BigUint;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "derandlab",
    version,
    about = "Restriction, protocol, and generator experiments over small circuit classes"
)]
struct Cli {
    /// Emit the flat CSV projection instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a bounded-intersection design, or verify one from a file.
    Design(DesignCmd),
    /// Expand one seed through a generator and print the output bits.
    Gen(GenCmd),
    /// Measure generator bias against an output test.
    Fool(FoolCmd),
    /// Exact agreement of a circuit with a hard function.
    Corr(CorrCmd),
    /// Estimate a sparse polynomial's acceptance fraction via a generator.
    Count(CountCmd),
    /// Run a switching or trim experiment from a JSON config.
    Switch(SwitchCmd),
    /// Simulate the forehead protocol, or scan inner-product correlation.
    Nof(NofCmd),
    /// Full restriction pipeline experiment from a JSON config.
    Pipeline(PipelineCmd),
    /// Generator parameter calculator.
    Params(ParamsCmd),
}

#[derive(Args)]
struct DesignCmd {
    #[command(subcommand)]
    action: Option<DesignAction>,
    /// Number of blocks.
    #[arg(long)]
    s: Option<usize>,
    /// Block size.
    #[arg(long)]
    r: Option<usize>,
    /// Pairwise intersection bound.
    #[arg(long)]
    l: Option<usize>,
    /// Write the design here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DesignAction {
    /// Re-check the intersection bound of a design file.
    Verify { file: PathBuf },
}

#[derive(Args)]
struct GenCmd {
    #[arg(long)]
    design: PathBuf,
    /// rw:m,k,r | gip:m,j | parity:r | table:FILE
    #[arg(long)]
    hard: String,
    /// Seed as hex, lowest bit first in the expansion.
    #[arg(long)]
    seed: String,
    /// Output length; defaults to the block count.
    #[arg(long)]
    outputs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetKind {
    Poly,
    Circuit,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum FoolMode {
    Exact,
    Monte,
}

#[derive(Args)]
struct FoolCmd {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    hard: String,
    /// Output test file; format given by --target-kind.
    #[arg(long)]
    target: PathBuf,
    #[arg(long, value_enum, default_value_t = TargetKind::Poly)]
    target_kind: TargetKind,
    #[arg(long)]
    outputs: Option<usize>,
    #[arg(long, value_enum, default_value_t = FoolMode::Exact)]
    mode: FoolMode,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CorrCmd {
    /// Circuit JSON file.
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    hard: String,
}

#[derive(Args)]
struct CountCmd {
    /// Sparse polynomial in text form.
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    hard: String,
    #[arg(long)]
    outputs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SwitchMode {
    Single,
    Multi,
    Trim,
}

#[derive(Args)]
struct SwitchCmd {
    #[arg(long, value_enum)]
    mode: SwitchMode,
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct NofCmd {
    #[command(subcommand)]
    action: Option<NofAction>,
    /// Circuit JSON file.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Partition file, one block of indices per line.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Input assignment as hex.
    #[arg(long)]
    input: Option<String>,
}

#[derive(Subcommand)]
enum NofAction {
    /// Exact correlation of circuits with the inner product function.
    Corr {
        /// m,j for the m-row, j-column layout.
        #[arg(long)]
        gip: String,
        /// Circuit JSON file to scan.
        #[arg(long)]
        against: PathBuf,
    },
}

#[derive(Args)]
struct PipelineCmd {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct ParamsCmd {
    /// viola | ls11_sym | ls11_thr | main | many_gates
    #[arg(long)]
    profile: String,
    #[arg(long)]
    s: u64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    c_d: f64,
    /// Cap the field size for desk-scale instantiation.
    #[arg(long)]
    r_cap: Option<u64>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let code = if matches!(e, Error::Cap(_)) { 2 } else { 1 };
        std::process::exit(code);
    }
}

fn usage_exit(msg: &str) -> ! {
    eprintln!("usage error: {msg}");
    std::process::exit(64);
}

fn emit<T: Serialize>(csv: bool, kind: &str, report: &T) -> Result<()> {
    if csv {
        print!("{}", report_to_csv(report)?);
    } else {
        println!("{}", report_to_json(kind, report)?);
    }
    Ok(())
}

fn load_design(path: &Path) -> Result<Design> {
    Design::from_text(&std::fs::read_to_string(path)?)
}

fn load_circuit(path: &Path) -> Result<CircuitSpec> {
    let circuit = CircuitSpec::from_json(&std::fs::read_to_string(path)?)?;
    circuit.validate()?;
    Ok(circuit)
}

fn parse_hard(spec: &str) -> Result<HardFunction> {
    if let Some(path) = spec.strip_prefix("table:") {
        let table: TruthTable = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(HardFunction::Table(table))
    } else {
        HardFunction::parse(spec)
    }
}

fn build_generator(design: &Path, hard: &str, outputs: Option<usize>) -> Result<NwGenerator> {
    let design = load_design(design)?;
    let hard = parse_hard(hard)?;
    let output_len = outputs.unwrap_or(design.num_blocks());
    NwGenerator::new(design, hard, output_len)
}

fn parse_seed_bits(hex: &str, m: usize) -> Result<Vec<bool>> {
    let cleaned = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
    let value = BigUint::parse_bytes(cleaned.as_bytes(), 16)
        .ok_or_else(|| Error::parse(format!("bad hex seed {hex:?}")))?;
    if value.bits() > m as u64 {
        return Err(Error::parse(format!(
            "seed has {} bits, generator takes {m}",
            value.bits()
        )));
    }
    Ok((0..m).map(|i| value.bit(i as u64)).collect())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design(cmd) => run_design(cli.csv, cmd),
        Command::Gen(cmd) => {
            let generator = build_generator(&cmd.design, &cmd.hard, cmd.outputs)?;
            let seed = parse_seed_bits(&cmd.seed, generator.seed_len())?;
            let out = generator.generate(&seed)?;
            let line: String = out.iter().map(|&b| if b { '1' } else { '0' }).collect();
            println!("{line}");
            Ok(())
        }
        Command::Fool(cmd) => {
            let generator = build_generator(&cmd.design, &cmd.hard, cmd.outputs)?;
            let text = std::fs::read_to_string(&cmd.target)?;
            let target: Box<dyn OutputTest> = match cmd.target_kind {
                TargetKind::Poly => Box::new(SparseF2Poly::from_text(&text)?),
                TargetKind::Circuit => {
                    let c = CircuitSpec::from_json(&text)?;
                    c.validate()?;
                    Box::new(c)
                }
                TargetKind::Table => Box::new(serde_json::from_str::<TruthTable>(&text)?),
            };
            let mode = match cmd.mode {
                FoolMode::Exact => BiasMode::Exact,
                FoolMode::Monte => BiasMode::MonteCarlo { samples: cmd.samples, seed: cmd.seed },
            };
            let report = measure_bias(target.as_ref(), &generator, mode)?;
            emit(cli.csv, "fool", &report)
        }
        Command::Corr(cmd) => {
            let circuit = load_circuit(&cmd.circuit)?;
            let hard = parse_hard(&cmd.hard)?;
            let report = measure_correlation(&circuit, &hard)?;
            emit(cli.csv, "corr", &report)
        }
        Command::Count(cmd) => {
            let generator = build_generator(&cmd.design, &cmd.hard, cmd.outputs)?;
            let poly = SparseF2Poly::from_text(&std::fs::read_to_string(&cmd.target)?)?;
            let report = count_experiment(&generator, &poly)?;
            emit(cli.csv, "count", &report)
        }
        Command::Switch(cmd) => {
            let text = std::fs::read_to_string(&cmd.config)?;
            match cmd.mode {
                SwitchMode::Single => {
                    let config: SwitchExperimentConfig = serde_json::from_str(&text)?;
                    emit(cli.csv, "switch-single", &single_switch_experiment(&config)?)
                }
                SwitchMode::Multi => {
                    let config: SwitchExperimentConfig = serde_json::from_str(&text)?;
                    emit(cli.csv, "switch-multi", &multi_switch_experiment(&config)?)
                }
                SwitchMode::Trim => {
                    let config: TrimConfig = serde_json::from_str(&text)?;
                    emit(cli.csv, "switch-trim", &trim_check(&config)?)
                }
            }
        }
        Command::Nof(cmd) => run_nof(cli.csv, cmd),
        Command::Pipeline(cmd) => {
            let config: PipelineConfig =
                serde_json::from_str(&std::fs::read_to_string(&cmd.config)?)?;
            let report = pipeline_experiment(&config)?;
            emit(cli.csv, "pipeline", &report)
        }
        Command::Params(cmd) => {
            let profile: NwProfile = cmd.profile.parse()?;
            let mut params = nw_params(profile, cmd.s, cmd.eps, cmd.tau, cmd.c_d)?;
            if let Some(cap) = cmd.r_cap {
                params = params.with_desk_cap(cap);
            }
            emit(cli.csv, "params", &params)
        }
    }
}

fn run_design(csv: bool, cmd: DesignCmd) -> Result<()> {
    if let Some(DesignAction::Verify { file }) = cmd.action {
        let design = load_design(&file)?;
        let report = verify_design(&design);
        emit(csv, "design-verify", &report)?;
        if !report.ok {
            return Err(Error::construction("design fails its intersection bound"));
        }
        return Ok(());
    }
    let (s, r, l) = match (cmd.s, cmd.r, cmd.l) {
        (Some(s), Some(r), Some(l)) => (s, r, l),
        _ => usage_exit("design needs --s, --r, and --l (or the verify subcommand)"),
    };
    let design = build_design_for(s, r, l)?;
    match cmd.out {
        Some(path) => std::fs::write(path, design.to_text())?,
        None => print!("{}", design.to_text()),
    }
    Ok(())
}

fn run_nof(csv: bool, cmd: NofCmd) -> Result<()> {
    if let Some(NofAction::Corr { gip, against }) = cmd.action {
        let parts: Vec<usize> = gip
            .split(',')
            .map(|w| {
                w.trim()
                    .parse()
                    .map_err(|_| Error::parse(format!("bad --gip value {gip:?}")))
            })
            .collect::<Result<_>>()?;
        let [m, j] = parts.as_slice() else {
            return Err(Error::parse(format!("--gip wants m,j, got {gip:?}")));
        };
        let circuit = load_circuit(&against)?;
        let report = gip_correlation_scan(*m, *j, std::slice::from_ref(&circuit))?;
        return emit(csv, "nof-corr", &report);
    }
    let (circuit, partition, input) = match (&cmd.circuit, &cmd.partition, &cmd.input) {
        (Some(c), Some(p), Some(x)) => (c, p, x),
        _ => usage_exit("nof needs --circuit, --partition, and --input (or the corr subcommand)"),
    };
    let circuit = load_circuit(circuit)?;
    let partition = NofPartition::from_text(&std::fs::read_to_string(partition)?)?;
    let cleaned = input.trim().trim_start_matches("0x").trim_start_matches("0X");
    let x = u64::from_str_radix(cleaned, 16)
        .map_err(|_| Error::parse(format!("bad hex input {input:?}")))?;
    let transcript = if matches!(circuit.top, derandlab::circuit::TopGate::Any { .. }) {
        run_any_protocol(&circuit, &partition, x)?
    } else {
        run_hg_protocol(&circuit, &partition, x)?
    };
    emit(csv, "nof-transcript", &transcript)
}
