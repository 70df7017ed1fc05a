use clap::Parser;
use hnn::cli::{run_cli, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run_cli(cli) {
        let msg = serde_json::json!({ "error": e.class(), "message": e.to_string() });
        eprintln!("{msg}");
        std::process::exit(e.exit_code());
    }
}
