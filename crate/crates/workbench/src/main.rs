use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use workbench::cli_workbench::{
    cmd_bgg_check, cmd_charpoly, cmd_family, cmd_slopes, cmd_verify, resolve_config, RunConfig,
    EXIT_ERROR,
};
use workbench::error::WbError;

#[derive(Parser)]
#[command(name = "workbench", about = "Exact p-adic slope workbench for quaternionic automorphic forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// flat key=value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    k0: Option<i64>,
    #[arg(long = "scale-m")]
    scale_m: Option<u32>,
    #[arg(long = "family-W")]
    family_w: Option<usize>,
    #[arg(long = "trunc-M")]
    trunc_m: Option<usize>,
    #[arg(long = "prec-N")]
    prec_n: Option<u32>,
    #[arg(long)]
    v: Option<u8>,
    /// slope bound, e.g. 2, 2.9, or 29/10
    #[arg(long)]
    h: Option<String>,
    /// comma-separated operators, e.g. Up,T5,S5
    #[arg(long)]
    ops: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonFlags {
    fn into_config(self) -> Result<RunConfig, WbError> {
        let mut flags: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                flags.push((k.to_string(), v));
            }
        };
        push("p", self.p.map(|x| x.to_string()));
        push("k", self.k.map(|x| x.to_string()));
        push("k0", self.k0.map(|x| x.to_string()));
        push("scale-m", self.scale_m.map(|x| x.to_string()));
        push("family-W", self.family_w.map(|x| x.to_string()));
        push("trunc-M", self.trunc_m.map(|x| x.to_string()));
        push("prec-N", self.prec_n.map(|x| x.to_string()));
        push("v", self.v.map(|x| x.to_string()));
        push("h", self.h.clone());
        push("ops", self.ops.clone());
        push(
            "out",
            self.out.as_ref().map(|x| x.display().to_string()),
        );
        push("seed", self.seed.map(|x| x.to_string()));
        resolve_config(self.config.as_deref(), &flags)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fixed-weight pipeline: char series, Newton polygon, slopes, Hecke tables
    Slopes(CommonFlags),
    /// Family pipeline: family char series, chart datum, local-constancy checks
    Family {
        #[command(flatten)]
        common: CommonFlags,
        /// comma-separated specialization weights (default: k0 and k0+(p-1)p^m)
        #[arg(long = "spec-weights")]
        spec_weights: Option<String>,
    },
    /// Recheck cheap invariants of a previously written document
    Verify { document: PathBuf },
    /// Characteristic power series only (no slope analysis)
    Charpoly(CommonFlags),
    /// Exact BGG commutation identity at weight (2, 0)
    BggCheck(CommonFlags),
}

fn run() -> Result<i32, WbError> {
    let cli = Cli::parse();
    let (_doc, code) = match cli.command {
        Command::Slopes(f) => cmd_slopes(&f.into_config()?)?,
        Command::Family {
            common,
            spec_weights,
        } => {
            let cfg = common.into_config()?;
            let weights: Vec<i64> = match spec_weights {
                Some(s) => s
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|_| WbError::BadInput(format!("bad weight '{}'", t)))
                    })
                    .collect::<Result<_, _>>()?,
                None => {
                    let k0 = cfg
                        .k0
                        .ok_or_else(|| WbError::BadInput("family requires --k0".into()))?;
                    vec![k0, k0 + (cfg.p as i64 - 1) * (cfg.p as i64).pow(cfg.scale_m)]
                }
            };
            cmd_family(&cfg, &weights)?
        }
        Command::Verify { document } => cmd_verify(&document)?,
        Command::Charpoly(f) => cmd_charpoly(&f.into_config()?)?,
        Command::BggCheck(f) => cmd_bgg_check(&f.into_config()?)?,
    };
    Ok(code)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
