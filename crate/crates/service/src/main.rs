use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;
use faircompass_core::compass::{default_tree, load_tree};
use faircompass_service::{router, AppState, ServiceConfig};

#[derive(Parser)]
#[command(version, about = "Serve compass sessions and dataset audits over HTTP")]
struct Args {
    #[arg(long, env = "COMPASS_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,

    /// Tree document to serve instead of the built-in tree.
    #[arg(long, env = "COMPASS_TREE")]
    tree: Option<PathBuf>,

    /// File that keeps sessions and audits across restarts.
    #[arg(long, env = "COMPASS_SNAPSHOT")]
    snapshot: Option<PathBuf>,

    #[arg(long, env = "COMPASS_IDLE_MINUTES", default_value_t = 120)]
    idle_minutes: u64,

    /// Browser origin allowed by CORS; any origin when unset.
    #[arg(long, env = "COMPASS_UI_ORIGIN")]
    ui_origin: Option<String>,
}

#[tokio::main]
async fn main() {
    let args = Args::parse();
    let tree = match &args.tree {
        None => default_tree(),
        Some(path) => {
            let text = std::fs::read_to_string(path).unwrap_or_else(|e| {
                eprintln!("error: cannot read {}: {e}", path.display());
                std::process::exit(2)
            });
            load_tree(&text).unwrap_or_else(|e| {
                eprintln!("error: {}: {e}", path.display());
                std::process::exit(2)
            })
        }
    };
    let config = ServiceConfig {
        tree,
        idle_timeout: Duration::from_secs(args.idle_minutes * 60),
        snapshot: args.snapshot,
        ui_origin: args.ui_origin,
    };
    let state = AppState::new(&config).unwrap_or_else(|e| {
        eprintln!("error: cannot restore snapshot: {e}");
        std::process::exit(2)
    });
    let app = router(state, config.ui_origin.as_deref());
    let listener = tokio::net::TcpListener::bind(args.addr)
        .await
        .unwrap_or_else(|e| {
            eprintln!("error: cannot bind {}: {e}", args.addr);
            std::process::exit(2)
        });
    eprintln!("listening on http://{}", args.addr);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .expect("server error");
}
