use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = realbloch::cli::Cli::parse();
    std::process::exit(realbloch::cli::main_with_args(cli));
}
