use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tr_cli::commands::{self, CliError, EXIT_INPUT, EXIT_OK};
use tr_cli::serve::Server;
use tr_core::sim::Scenario;

#[derive(Parser)]
#[command(name = "tr", version, about = "Teleo-reactive programs: check, compile, run and serve")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the regression property and completeness of a program (exit 0 iff universal, 3 if not).
    Check {
        program: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// Program or tree to check; defaults to the first declaration.
        #[arg(long = "program")]
        name: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario headless, one JSON trace record per tick (exit 2 on a runtime error).
    Run {
        scenario: PathBuf,
        /// Trace file; stdout when omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        ticks: Option<u64>,
    },
    /// Compile a propositional program to a three-layer threshold net.
    CompileNet {
        program: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long = "program")]
        name: Option<String>,
        /// Check the net against the program on every input.
        #[arg(long)]
        verify: bool,
    },
    /// Serve the websocket control protocol.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Scenario loaded (paused) at startup.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn execute(cmd: Command) -> Result<i32, CliError> {
    let mut stdout = std::io::stdout();
    match cmd {
        Command::Check { program, models, name, json } => {
            commands::check(&program, &models, name.as_deref(), json, &mut stdout)
        }
        Command::Run { scenario, trace, seed, ticks } => {
            let n = commands::run(&scenario, trace.as_deref(), seed, ticks)?;
            log::info!("{n} ticks");
            Ok(EXIT_OK)
        }
        Command::CompileNet { program, output, name, verify } => {
            commands::compile_net(&program, &output, name.as_deref(), verify, &mut stdout)
        }
        Command::Serve { port, host, scenario } => {
            let initial = scenario.as_deref().map(Scenario::load).transpose()?;
            let server = Server::bind((host.as_str(), port), initial)
                .map_err(|source| CliError::Io { path: format!("{host}:{port}"), source })?;
            let addr = server.local_addr().map_err(|source| CliError::Io { path: "listener".into(), source })?;
            eprintln!("listening on ws://{addr}");
            server.run().map_err(|source| CliError::Io { path: "listener".into(), source })?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TR_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_INPUT as u8))
}
