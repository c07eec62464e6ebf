use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stbc_lab::codebook::DispersionCode;
use stbc_lab::harness::{
    build_scheme, parse_config_text, parse_snr_range, run_ber, run_pep, run_rotate, run_verify, write_ber_csv,
    write_pep_csv, RotationSource, SimConfig, StopRule,
};
use stbc_lab::rotation::OptimizerSettings;
use stbc_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "stbc-lab", version, about = "Four-group decodable STBC toolkit")]
struct Cli {
    /// key=value file supplying defaults for the long options; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep, written as CSV.
    Ber(Opts),
    /// Worst-case exact and asymptotic PEP per SNR, written as CSV.
    Pep(Opts),
    /// Check group decodability and print rate, delay and group size.
    Verify(Opts),
    /// Search a full-diversity rotation for a code's groups.
    Rotate(Opts),
}

#[derive(Args, Default)]
struct Opts {
    #[arg(long)]
    code: Option<String>,
    /// JSON code description (verify only).
    #[arg(long)]
    code_file: Option<PathBuf>,
    #[arg(long)]
    constellation: Option<String>,
    /// `a:b:step`, `a,b,c` or a single value, in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// `default`, `none`, or a rotation matrix file.
    #[arg(long)]
    rotation: Option<String>,
    /// `exhaustive` or `sphere`.
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Receive antennas.
    #[arg(long)]
    rx: Option<usize>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    max_blocks: Option<u64>,
    /// Comma-separated antenna columns to delete (1-based).
    #[arg(long)]
    delete_cols: Option<String>,
    /// Optimizer restarts (rotate only).
    #[arg(long)]
    restarts: Option<usize>,
    /// Write 0 in the wall_seconds column.
    #[arg(long)]
    no_wall_time: bool,
}

const CONFIG_KEYS: [&str; 14] = [
    "code",
    "code-file",
    "constellation",
    "snr-db",
    "seed",
    "rotation",
    "detector",
    "out",
    "rx",
    "min-errors",
    "max-blocks",
    "delete-cols",
    "restarts",
    "no-wall-time",
];

/// Flag values layered over the config file.
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn new(file: Option<&PathBuf>, opts: &Opts) -> Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))?;
            for (k, v) in parse_config_text(&text)? {
                if !CONFIG_KEYS.contains(&k.as_str()) {
                    return Err(Error::Config(format!("unknown config key `{k}`")));
                }
                values.insert(k, v);
            }
        }
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        };
        set("code", opts.code.clone());
        set("code-file", opts.code_file.as_ref().map(|p| p.display().to_string()));
        set("constellation", opts.constellation.clone());
        set("snr-db", opts.snr_db.clone());
        set("seed", opts.seed.map(|v| v.to_string()));
        set("rotation", opts.rotation.clone());
        set("detector", opts.detector.clone());
        set("out", opts.out.as_ref().map(|p| p.display().to_string()));
        set("rx", opts.rx.map(|v| v.to_string()));
        set("min-errors", opts.min_errors.map(|v| v.to_string()));
        set("max-blocks", opts.max_blocks.map(|v| v.to_string()));
        set("delete-cols", opts.delete_cols.clone());
        set("restarts", opts.restarts.map(|v| v.to_string()));
        if opts.no_wall_time {
            set("no-wall-time", Some("true".into()));
        }
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn string(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    fn required(&self, key: &str) -> Result<String> {
        self.get(key).map(str::to_string).ok_or_else(|| Error::Config(format!("--{key} is required")))
    }

    fn number<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for {key}"))),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(Error::Config(format!("bad value `{v}` for {key}"))),
        }
    }

    fn delete_columns(&self) -> Result<Option<Vec<usize>>> {
        let Some(text) = self.get("delete-cols") else { return Ok(None) };
        let cols = text
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| match t.trim().parse::<usize>() {
                Ok(c) if c >= 1 => Ok(c - 1),
                _ => Err(Error::Config(format!("bad column `{t}` (columns are numbered from 1)"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(cols))
    }

    fn sim_config(&self) -> Result<SimConfig> {
        let d = SimConfig::default();
        Ok(SimConfig {
            code: self.required("code")?,
            constellation: self.string("constellation", &d.constellation),
            rotation: RotationSource::parse(&self.string("rotation", "default")),
            detector: self.string("detector", "exhaustive").parse()?,
            snr_db: parse_snr_range(&self.required("snr-db")?)?,
            receive: self.number("rx", d.receive)?,
            stop: StopRule {
                min_errors: self.number("min-errors", d.stop.min_errors)?,
                max_blocks: self.number("max-blocks", d.stop.max_blocks)?,
            },
            seed: self.number("seed", d.seed)?,
            delete_columns: self.delete_columns()?,
            record_wall_time: !self.flag("no-wall-time")?,
        })
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match self.get("out") {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).map_err(|e| Error::Config(format!("cannot write {path}: {e}")))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn ber(s: &Settings) -> Result<()> {
    let cfg = s.sim_config()?;
    let records = run_ber(&cfg)?;
    write_ber_csv(&records, s.output()?)
}

fn pep(s: &Settings) -> Result<()> {
    let cfg = s.sim_config()?;
    let scheme = cfg.scheme()?;
    let rows = run_pep(&scheme, &cfg.snr_db)?;
    let mut out = s.output()?;
    write_pep_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn verify(s: &Settings) -> Result<()> {
    let code = match (s.get("code-file"), s.get("code")) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("code file {path}: {e}")))?;
            DispersionCode::from_json(&text).map_err(|e| Error::Config(format!("code file {path}: {e}")))?
        }
        (None, Some(name)) => {
            let scheme = build_scheme(name, "4qam", &stbc_lab::scheme::RotationChoice::None, s.delete_columns()?.as_deref())?;
            scheme.code().clone()
        }
        (None, None) => return Err(Error::Config("--code or --code-file is required".into())),
    };
    let report = run_verify(&code);
    let mut out = s.output()?;
    writeln!(out, "{report}")?;
    out.flush()?;
    if report.ok {
        Ok(())
    } else {
        Err(Error::NotGroupDecodable(report.max_violation))
    }
}

fn rotate(s: &Settings) -> Result<()> {
    let code = s.required("code")?;
    let constellation = s.string("constellation", "4qam");
    let scheme = build_scheme(&code, &constellation, &stbc_lab::scheme::RotationChoice::None, s.delete_columns()?.as_deref())?;
    let settings = OptimizerSettings {
        restarts: s.number("restarts", OptimizerSettings::default().restarts)?,
        seed: s.number("seed", OptimizerSettings::default().seed)?,
        ..Default::default()
    };
    let (rotation, dp_min) = run_rotate(&scheme, &settings)?;
    log::info!("minimum product distance {dp_min:.6e}");
    let mut out = s.output()?;
    write!(out, "{}", rotation.to_text())?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (opts, run): (&Opts, fn(&Settings) -> Result<()>) = match &cli.command {
        Command::Ber(o) => (o, ber),
        Command::Pep(o) => (o, pep),
        Command::Verify(o) => (o, verify),
        Command::Rotate(o) => (o, rotate),
    };
    let result = Settings::new(cli.config.as_ref(), opts).and_then(|s| run(&s));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
