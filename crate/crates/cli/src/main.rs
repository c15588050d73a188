use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gapbie::experiments::{
    concentration_report, decay_profile, sweep_epsilon, sweep_rho, verify, DecayOptions, Suite, SweepConfig,
};
use gapbie::{Error, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Field concentration between two nearly touching perfect conductors.
#[derive(Debug, Parser)]
#[command(name = "gapbie", version)]
struct Cli {
    /// Write the result here instead of the config's `output` or stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the nodes per smooth curve.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Table format for sweeps and profiles; `solve` and `verify` always emit JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Concentration factor at one gap, plus the touching limit if the config has a rho_list.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Sweep over params.eps_list.
    SweepEps {
        #[arg(long)]
        config: PathBuf,
    },
    /// Dumbbell ladder over params.rho_list.
    SweepRho {
        #[arg(long)]
        config: PathBuf,
    },
    /// Midline profile of |grad r_eps| at one gap.
    Decay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Run a verification suite: disk, mobius, oracle or all.
    Verify {
        #[arg(long)]
        suite: String,
    },
}

/// Rendered output, where it should go, and whether the run counts as a success.
struct Outcome {
    text: String,
    dest: Option<PathBuf>,
    ok: bool,
}

fn load(path: &Path, nodes: Option<usize>) -> gapbie::Result<SweepConfig> {
    let mut cfg = SweepConfig::load(path)?;
    if let Some(n) = nodes {
        cfg.discretization.nodes = n;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn json<T: serde::Serialize>(v: &T) -> gapbie::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run(cli: &Cli) -> gapbie::Result<Outcome> {
    let exec = Execution::Parallel;
    let table = |csv: String, full: String| if cli.format == Format::Csv { csv } else { full };
    match &cli.command {
        Command::Solve { config, eps } => {
            let cfg = load(config, cli.nodes)?;
            let report = concentration_report(&cfg, *eps, exec)?;
            Ok(Outcome { text: json(&report)?, dest: cfg.output, ok: true })
        }
        Command::SweepEps { config } => {
            let cfg = load(config, cli.nodes)?;
            let s = sweep_epsilon(&cfg, exec)?;
            for f in &s.flags {
                eprintln!("flag: {f}");
            }
            Ok(Outcome { text: table(s.to_csv(), json(&s)?), dest: cfg.output, ok: true })
        }
        Command::SweepRho { config } => {
            let cfg = load(config, cli.nodes)?;
            let s = sweep_rho(&cfg, exec)?;
            for f in &s.flags {
                eprintln!("flag: {f}");
            }
            if let (Some(a), Some(e)) = (s.alpha0_estimate, s.alpha0_error) {
                eprintln!("alpha0 estimate {a:.12} +- {e:.3e}");
            }
            Ok(Outcome { text: table(s.to_csv(), json(&s)?), dest: cfg.output, ok: true })
        }
        Command::Decay { config, eps } => {
            let cfg = load(config, cli.nodes)?;
            let p = decay_profile(&cfg, *eps, &DecayOptions::default(), exec)?;
            eprintln!("fit: |grad r| ~ {:.4e} exp(-{:.4}/(sqrt(eps) + |y|)), residual {:.3e}", p.fit.c, p.fit.exponent, p.fit.residual);
            Ok(Outcome { text: table(p.to_csv(), json(&p)?), dest: cfg.output, ok: true })
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let report = verify(suite, exec);
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {}: measured {:e}, tolerance {:e} {}", c.name, c.measured, c.tolerance, c.detail);
            }
            Ok(Outcome { text: json(&report)?, dest: None, ok: report.passed })
        }
    }
}

fn emit(cli: &Cli, out: &Outcome) -> Result<(), Error> {
    match cli.out.as_ref().or(out.dest.as_ref()) {
        Some(path) => std::fs::write(path, &out.text)?,
        None => print!("{}", out.text),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Execution::with_threads(cli.threads, || run(&cli)).and_then(|o| emit(&cli, &o).map(|_| o.ok));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(name: &str, params: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("gapbie-cli-{}-{name}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("config.json");
        let text = format!(
            r#"{{
                "geometry": {{
                    "left": {{"shape": "disk", "center": [-1, 0], "radius": 1}},
                    "right": {{"shape": "disk", "center": [1, 0], "radius": 1}}
                }},
                "background": {{"coeffs": [{{"n": 1, "re": 1.0}}]}},
                "params": {params},
                "discretization": {{"nodes": 256}}
            }}"#
        );
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["gapbie", "sweep-eps", "--config", "c.json", "--nodes", "512", "--format", "json"]).unwrap();
        assert_eq!(cli.nodes, Some(512));
        assert_eq!(cli.format, Format::Json);
        assert!(matches!(cli.command, Command::SweepEps { .. }));
        assert!(Cli::try_parse_from(["gapbie", "solve", "--config", "c.json"]).is_err());
        assert!(Cli::try_parse_from(["gapbie", "sweep-eps", "--config", "c.json", "--format", "xml"]).is_err());
    }

    #[test]
    fn sweep_eps_csv_is_deterministic() {
        let cfg = write_config("eps", r#"{"eps_list": [0.1, 0.05, 0.02]}"#);
        let args = ["gapbie", "--threads", "1", "sweep-eps", "--config", cfg.to_str().unwrap()];
        let a = run(&Cli::try_parse_from(args).unwrap()).unwrap();
        let b = run(&Cli::try_parse_from(args).unwrap()).unwrap();
        assert_eq!(a.text, b.text);
        let mut lines = a.text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "eps,N,alpha_pot,alpha_flux,lambda1,lambda2,grad_mid_x,grad_mid_y,sqrt_eps_grad_mid,qnorm_sampled,colloc_residual,charge_residual"
        );
        assert!(lines.next().unwrap().starts_with("1.000000000000e-01,256,"));
        assert_eq!(a.text.lines().count(), 4);
    }

    #[test]
    fn nodes_override_is_validated() {
        let cfg = write_config("nodes", r#"{"eps_list": [0.1]}"#);
        let cli = Cli::try_parse_from(["gapbie", "--nodes", "7", "sweep-eps", "--config", cfg.to_str().unwrap()]).unwrap();
        assert!(run(&cli).is_err());
    }

    #[test]
    fn sweep_rho_json_and_out_file() {
        let cfg = write_config("rho", r#"{"rho_list": [0.4, 0.2]}"#);
        let out = cfg.with_file_name("rho.json");
        let cli = Cli::try_parse_from([
            "gapbie",
            "sweep-rho",
            "--config",
            cfg.to_str().unwrap(),
            "--format",
            "json",
            "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
        let o = run(&cli).unwrap();
        emit(&cli, &o).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
        assert!(v["alpha0_estimate"].as_f64().unwrap() > 6.0);
    }

    #[test]
    fn unknown_suite_is_an_error() {
        let cli = Cli::try_parse_from(["gapbie", "verify", "--suite", "everything"]).unwrap();
        assert!(run(&cli).is_err());
    }
}
