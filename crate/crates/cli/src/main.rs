use gcae_cli::commands::{
    cmd_compare, cmd_ingest, cmd_inspect_cfg, cmd_reconstruct, cmd_synth, cmd_train,
};
use gcae_cli::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
gcae - graph-convolutional autoencoding of token sequences

USAGE:
    gcae <command> [args] [flags]

COMMANDS:
    synth                     generate a synthetic corpus manifest
    ingest <src-dir>          extract methods from a source tree
    inspect-cfg <method-file> print a method's flow edges and rule counts
    train <manifest>          train one model for --regime
    compare <manifest>        train and compare all --regimes
    reconstruct <model> <method-file>
                              decode a method through a trained model

FLAGS:
    --config <path>           key=value config file (see README)
    --seed <int>              master seed (init, splits, shuffles)
    --regime <tag>            sequence | linear | naive
    --regimes <a,b,c>         regimes for compare
    --count <n>               synthetic corpus size
    --out <dir>               output directory (default: out)
";

struct Cli {
    command: String,
    positionals: Vec<String>,
    config_file: Option<PathBuf>,
    overrides: Vec<(String, String)>,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    if args.is_empty() {
        return Err("missing command".to_string());
    }
    let command = args[0].clone();
    let mut positionals = Vec::new();
    let mut config_file = None;
    let mut overrides = Vec::new();
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            flag @ ("--config" | "--seed" | "--regime" | "--regimes" | "--count" | "--out") => {
                let value = args
                    .get(i + 1)
                    .cloned()
                    .ok_or_else(|| format!("{flag} requires a value"))?;
                match flag {
                    "--config" => config_file = Some(PathBuf::from(value)),
                    "--seed" => overrides.push(("seed".to_string(), value)),
                    "--regime" => overrides.push(("regime".to_string(), value)),
                    "--regimes" => overrides.push(("regimes".to_string(), value)),
                    "--count" => overrides.push(("count".to_string(), value)),
                    "--out" => overrides.push(("out_dir".to_string(), value)),
                    _ => unreachable!(),
                }
                i += 2;
            }
            other if other.starts_with("--") => {
                return Err(format!("unknown flag {other}"));
            }
            other => {
                positionals.push(other.to_string());
                i += 1;
            }
        }
    }
    Ok(Cli {
        command,
        positionals,
        config_file,
        overrides,
    })
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config_file {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.apply_file(&text).map_err(|e| e.to_string())?;
    }
    for (key, value) in &cli.overrides {
        cfg.set(key, value).map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

fn expect_positionals(cli: &Cli, n: usize, what: &str) -> Result<(), String> {
    if cli.positionals.len() != n {
        return Err(format!(
            "{} expects {what}, got {} argument(s)",
            cli.command,
            cli.positionals.len()
        ));
    }
    Ok(())
}

fn run() -> Result<(), String> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args.iter().any(|a| a == "--help" || a == "-h") {
        print!("{USAGE}");
        return Ok(());
    }
    let cli = parse_args(&args)?;
    let cfg = build_config(&cli)?;

    let result = match cli.command.as_str() {
        "synth" => {
            expect_positionals(&cli, 0, "no positional arguments")?;
            cmd_synth(&cfg)
        }
        "ingest" => {
            expect_positionals(&cli, 1, "a source directory")?;
            cmd_ingest(&cfg, &PathBuf::from(&cli.positionals[0]))
        }
        "inspect-cfg" => {
            expect_positionals(&cli, 1, "a method file")?;
            cmd_inspect_cfg(&PathBuf::from(&cli.positionals[0]), cfg.train.regime)
        }
        "train" => {
            expect_positionals(&cli, 1, "a manifest file")?;
            cmd_train(&cfg, &PathBuf::from(&cli.positionals[0]))
        }
        "compare" => {
            expect_positionals(&cli, 1, "a manifest file")?;
            cmd_compare(&cfg, &PathBuf::from(&cli.positionals[0]))
        }
        "reconstruct" => {
            expect_positionals(&cli, 2, "a model file and a method file")?;
            cmd_reconstruct(
                &PathBuf::from(&cli.positionals[0]),
                &PathBuf::from(&cli.positionals[1]),
            )
        }
        other => return Err(format!("unknown command {other:?}\n\n{USAGE}")),
    };
    result.map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
