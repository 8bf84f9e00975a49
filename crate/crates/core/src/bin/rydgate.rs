use clap::Parser;
use rydgate::cli::{init_threads, main_with, Cli};

fn main() {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    init_threads();
    std::process::exit(main_with(cli));
}
