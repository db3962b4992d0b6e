use std::process::ExitCode;

use clap::Parser;
use lexcvar_cli::commands::{
    cmd_compare, cmd_evaluate, cmd_gen_domain, cmd_solve, cmd_validate, format_compare,
    write_compare_csv,
};
use lexcvar_cli::docs::{SummaryDoc, MANIFEST_FILE, SUMMARY_CSV};
use lexcvar_cli::{Cli, CliError, Command, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Solve(args) => {
            let cfg = args.resolve()?;
            let m = cmd_solve(&cfg)?;
            println!(
                "{}: {} states, {} actions; EV {:.4}, worst case {:.4}",
                m.domain, m.states, m.actions, m.ev_value, m.worst_value
            );
            for e in &m.lex {
                let lex = e.lex_value.map_or("n/a".to_string(), |v| format!("{v:.4}"));
                println!(
                    "  alpha {}: CVaR {:.4}, VaR {:.4}, root feasible {}, constrained EV {lex}",
                    e.alpha, e.optimal_cvar, e.var, e.root_feasible
                );
            }
            println!("wrote {}", cfg.output.join(MANIFEST_FILE).display());
            Ok(0)
        }
        Command::Evaluate { run, strategies } => {
            let cfg = run.resolve()?;
            let ev = cmd_evaluate(&cfg, &strategies)?;
            for r in &ev.rows {
                println!(
                    "{:<8} alpha {:<5} mean {:>9.3} ({:.3})  VaR {:>9.3}  CVaR {:>9.3} ({:.3})",
                    r.name, r.alpha, r.mean, r.mean_se, r.var, r.cvar, r.cvar_se
                );
            }
            println!("wrote {}", cfg.output.join(SUMMARY_CSV).display());
            Ok(0)
        }
        Command::Compare { summaries, csv } => {
            let docs = summaries
                .iter()
                .map(|p| SummaryDoc::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = cmd_compare(&docs)?;
            print!("{}", format_compare(&rows));
            if let Some(p) = csv {
                write_compare_csv(&p, &rows)?;
            }
            Ok(0)
        }
        Command::GenDomain {
            config,
            domain,
            output,
        } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(d) = domain {
                cfg.domain.builtin = Some(d);
                cfg.domain.mdp = None;
            }
            if cfg.domain.builtin.is_none() {
                return Err(CliError::Usage("gen-domain needs a builtin domain".into()));
            }
            let mdp = cmd_gen_domain(&cfg, &output)?;
            println!(
                "wrote {} ({} states, {} actions)",
                output.display(),
                mdp.num_states(),
                mdp.num_actions()
            );
            Ok(0)
        }
        Command::Validate { file } => {
            let (mdp, report) = cmd_validate(&file)?;
            if report.is_valid() {
                println!(
                    "ok: {} states, {} actions",
                    mdp.num_states(),
                    mdp.num_actions()
                );
                Ok(0)
            } else {
                Err(CliError::Invalid(report.to_string()))
            }
        }
    }
}
