//! Thin command-line front end over the library pipeline.
//!
//! Exit codes: 0 success, 2 config/input error, 3 unknown keyword,
//! 4 missing stage artifact, 1 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use geoglove::Error;
use geoglove::pipeline::{self, PipelineConfig};
use geoglove::reducers::ReducerKind;

const USAGE: &str = "usage: geoglove <train|reduce|rank|benchmark|all> --config PATH \
[--out DIR] [--seed N] [--keyword WORD] [--kind KIND] [--force]

  train      preprocess the corpus and train embeddings
  reduce     fit the configured dimensionality reducers
  rank       rank cities by similarity to the keyword (--kind, default none)
  benchmark  score every technique against the mine table
  all        run the full pipeline, skipping up-to-date stages";

struct Cli {
    command: String,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    keyword: Option<String>,
    kind: ReducerKind,
    force: bool,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    let mut it = args.iter();
    let command = it.next().ok_or_else(|| USAGE.to_string())?.clone();
    if !["train", "reduce", "rank", "benchmark", "all"].contains(&command.as_str()) {
        return Err(format!("unknown subcommand `{command}`\n{USAGE}"));
    }
    let mut cli = Cli {
        command,
        config: None,
        out: None,
        seed: None,
        keyword: None,
        kind: ReducerKind::None,
        force: false,
    };
    while let Some(flag) = it.next() {
        let mut value = |name: &str| {
            it.next()
                .map(String::as_str)
                .ok_or_else(|| format!("flag {name} needs a value"))
        };
        match flag.as_str() {
            "--config" => cli.config = Some(PathBuf::from(value("--config")?)),
            "--out" => cli.out = Some(PathBuf::from(value("--out")?)),
            "--seed" => {
                cli.seed = Some(
                    value("--seed")?
                        .parse()
                        .map_err(|_| "flag --seed needs an integer".to_string())?,
                )
            }
            "--keyword" => cli.keyword = Some(value("--keyword")?.to_string()),
            "--kind" => {
                cli.kind = ReducerKind::parse(value("--kind")?).map_err(|e| e.to_string())?
            }
            "--force" => cli.force = true,
            other => return Err(format!("unknown flag `{other}`\n{USAGE}")),
        }
    }
    Ok(cli)
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::UnknownKeyword { .. } => 3,
        Error::MissingArtifact(_) => 4,
        Error::Config(_)
        | Error::Parse { .. }
        | Error::Range { .. }
        | Error::Io { .. }
        | Error::EmptyMineSet
        | Error::EmptyVocabulary
        | Error::DuplicateDocumentId(_) => 2,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let Some(config_path) = &cli.config else {
        return Err(Error::Config(
            "missing --config PATH (every subcommand reads its settings from a config file)".into(),
        ));
    };
    let mut cfg: PipelineConfig = pipeline::parse_config(config_path)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(keyword) = &cli.keyword {
        cfg.keyword = keyword.clone();
    }

    match cli.command.as_str() {
        "train" => {
            pipeline::cmd_train(&cfg)?;
        }
        "reduce" => {
            pipeline::cmd_reduce(&cfg)?;
        }
        "rank" => {
            pipeline::cmd_rank(&cfg, cli.kind)?;
        }
        "benchmark" => {
            pipeline::cmd_benchmark(&cfg)?;
        }
        "all" => pipeline::cmd_all(&cfg, cli.force)?,
        _ => unreachable!("validated in parse_args"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(&args) {
        Ok(cli) => cli,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geoglove {}: {e}", cli.command);
            ExitCode::from(exit_code_for(&e))
        }
    }
}
