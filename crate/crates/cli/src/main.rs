use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = phid_cli::Cli::parse();
    if let Err(err) = phid_cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(phid_cli::exit_code(&err));
    }
}
