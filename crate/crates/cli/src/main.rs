mod export;
mod syntax;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use edgecolor::abelian::{color_vizing_plus_one, degree_color_abelian, Branch};
use edgecolor::coloring::EdgeColoring;
use edgecolor::group::TorusInstance;
use edgecolor::io::{read_instance, read_json, to_json};
use edgecolor::oracle::{exact_chromatic_index, verify_coloring};
use edgecolor::witness::{build_grid_witness, verify_witness, SeparationWitness};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "edgecolor", version, about = "Edge colorings of Schreier graphs of abelian groups on tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an instance file from a group and torus periods.
    Gen {
        /// e.g. "Z^2: ±[1,0] ±[0,1]" or "(3)xZ: ±[0;1] [1;0] [2;0]".
        #[arg(long)]
        group: String,
        /// Comma-separated, one per free axis.
        #[arg(long, value_delimiter = ',')]
        periods: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a box separation witness.
    Witness {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Color an instance and write a run manifest next to the coloring.
    Color {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, conflicts_with = "n")]
        witness: Option<PathBuf>,
        /// Build a grid witness at this N instead of reading one.
        #[arg(long = "N")]
        n: Option<u32>,
        #[arg(long, value_enum, default_value_t = Pipeline::Auto)]
        pipeline: Pipeline,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Reserved; the engine is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a coloring; exit 1 if it is not proper.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        coloring: PathBuf,
    },
    /// Exact chromatic index of a small instance.
    Chromatic {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 64)]
        max_oracle_vertices: usize,
    },
    /// Render an instance with its coloring.
    Export {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Pipeline {
    #[value(name = "vizing+1")]
    #[serde(rename = "vizing+1")]
    VizingPlusOne,
    Degree,
    Auto,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Dot,
    Svg,
    Json,
}

enum Failure {
    /// Exit 2.
    Invalid(anyhow::Error),
    /// Exit 1.
    Verification(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.into())
    }
}

#[derive(Serialize)]
struct RunManifest {
    pipeline: Pipeline,
    branch: Option<Branch>,
    inputs: Vec<(String, String)>,
    parameters: Vec<(String, String)>,
    coloring_sha256: String,
    degree: usize,
    palette: u32,
    colors_used: usize,
    verified: bool,
    notes: Vec<String>,
    wall_ms: u128,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_coloring(instance: &TorusInstance, path: &Path) -> anyhow::Result<EdgeColoring> {
    let c: EdgeColoring = read_json(path)?;
    if c.colors.len() != instance.edges().len() {
        return Err(anyhow!(
            "{}: {} colors for {} edges",
            path.display(),
            c.colors.len(),
            instance.edges().len()
        ));
    }
    Ok(c)
}

fn color(
    instance_path: &Path,
    witness_path: Option<&Path>,
    n: Option<u32>,
    pipeline: Pipeline,
    out: &Path,
    manifest: Option<&Path>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let start = Instant::now();
    let instance_bytes = fs::read(instance_path).with_context(|| format!("reading {}", instance_path.display()))?;
    let instance = read_instance(instance_path)?;
    let mut inputs = vec![("instance".to_string(), sha256_hex(&instance_bytes))];
    let witness: SeparationWitness = match (witness_path, n) {
        (Some(p), _) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            inputs.push(("witness".to_string(), sha256_hex(&bytes)));
            let w: SeparationWitness = read_json(p)?;
            if !verify_witness(&instance, &w).ok {
                return Err(Failure::Invalid(anyhow!("{}: witness does not verify", p.display())));
            }
            w
        }
        (None, Some(n)) => build_grid_witness(&instance, n)?,
        (None, None) => return Err(Failure::Invalid(anyhow!("give --witness or --N"))),
    };
    let (coloring, branch, notes) = match pipeline {
        Pipeline::VizingPlusOne => (
            color_vizing_plus_one(&instance, &witness)?,
            None,
            Vec::new(),
        ),
        Pipeline::Degree | Pipeline::Auto => {
            let out = degree_color_abelian(&instance, &witness)?;
            let odd = matches!(out.branch, Branch::RankOneOdd | Branch::FiniteOdd);
            if odd && matches!(pipeline, Pipeline::Degree) {
                return Err(Failure::Invalid(anyhow!(
                    "no degree coloring exists: {}",
                    out.notes.join("; ")
                )));
            }
            (out.coloring, Some(out.branch), out.notes)
        }
    };
    let text = to_json(&coloring);
    emit(Some(out), &text)?;
    let report = verify_coloring(&instance, &coloring);
    let m = RunManifest {
        pipeline,
        branch,
        inputs,
        parameters: vec![
            ("N".to_string(), witness.n.to_string()),
            ("seed".to_string(), seed.map_or("none".to_string(), |s| s.to_string())),
        ],
        coloring_sha256: sha256_hex(text.as_bytes()),
        degree: instance.degree(),
        palette: coloring.palette,
        colors_used: report.colors_used(),
        verified: report.ok,
        notes,
        wall_ms: start.elapsed().as_millis(),
    };
    let manifest_path = manifest
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{}.manifest.json", out.display())));
    let mtext = serde_json::to_string_pretty(&m).expect("serializable") + "\n";
    emit(Some(&manifest_path), &mtext)?;
    if !report.ok {
        return Err(Failure::Verification(format!("coloring is not proper: {:?}", report.first_conflict)));
    }
    eprintln!(
        "palette {} ({} used, degree {}){}",
        coloring.palette,
        report.colors_used(),
        instance.degree(),
        branch.map_or(String::new(), |b| format!(", branch {b:?}"))
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { group, periods, out } => {
            let spec = syntax::parse_group(&group, periods)?;
            spec.build()?;
            emit(out.as_deref(), &to_json(&spec))?;
        }
        Command::Witness { instance, n, out } => {
            let inst = read_instance(&instance)?;
            let w = build_grid_witness(&inst, n)?;
            emit(out.as_deref(), &to_json(&w))?;
        }
        Command::Color {
            instance,
            witness,
            n,
            pipeline,
            out,
            manifest,
            seed,
        } => color(&instance, witness.as_deref(), n, pipeline, &out, manifest.as_deref(), seed)?,
        Command::Verify { instance, coloring } => {
            let inst = read_instance(&instance)?;
            let c = load_coloring(&inst, &coloring)?;
            let report = verify_coloring(&inst, &c);
            println!("{}", serde_json::to_string(&report).expect("serializable"));
            if !report.ok {
                return Err(Failure::Verification("coloring is not proper".into()));
            }
        }
        Command::Chromatic {
            instance,
            max_oracle_vertices,
        } => {
            let inst = read_instance(&instance)?;
            let k = exact_chromatic_index(&inst, max_oracle_vertices)?;
            println!("{k}");
        }
        Command::Export {
            instance,
            coloring,
            format,
            out,
        } => {
            let inst = read_instance(&instance)?;
            let c = load_coloring(&inst, &coloring)?;
            let text = match format {
                Format::Dot => export::dot(&inst, &c),
                Format::Svg => export::svg(&inst, &c)?,
                Format::Json => export::json(&inst, &c),
            };
            emit(out.as_deref(), &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
