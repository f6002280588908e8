use clap::Parser;
use trp_bench::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(failure) = run(cli, &mut stdout) {
        eprintln!("{failure}");
        std::process::exit(failure.exit_code());
    }
}
