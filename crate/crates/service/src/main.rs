use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use alloom_service::{router, AppState};
use clap::Parser;

/// Serves annotation sessions over HTTP.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Dataset paths in requests resolve against this directory.
    #[arg(long, default_value = ".")]
    data_dir: PathBuf,
    /// Session journal; defaults to sessions.jsonl in the data directory.
    #[arg(long)]
    journal: Option<PathBuf>,
    /// Keep sessions in memory only.
    #[arg(long, conflicts_with = "journal")]
    no_journal: bool,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let state = if args.no_journal {
        AppState::ephemeral(&args.data_dir)
    } else {
        let path = args.journal.clone().unwrap_or_else(|| args.data_dir.join("sessions.jsonl"));
        match AppState::with_journal(&args.data_dir, &path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    };
    let listener = match tokio::net::TcpListener::bind(args.listen).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot listen on {}: {e}", args.listen);
            return ExitCode::from(2);
        }
    };
    eprintln!("listening on {}", args.listen);
    if let Err(e) = axum::serve(listener, router(state)).await {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
