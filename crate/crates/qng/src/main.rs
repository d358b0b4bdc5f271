use clap::Parser;

fn main() {
    let cli = qng::cli::Cli::parse();
    std::process::exit(qng::run(&cli));
}
