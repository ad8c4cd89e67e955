use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = mbr_ot_cli::Cli::parse();
    if let Err(failure) = mbr_ot_cli::run(cli) {
        log::debug!("{failure}");
        eprintln!("{}", failure.report());
        std::process::exit(failure.exit_code());
    }
}
