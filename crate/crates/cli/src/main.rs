use clap::Parser;

fn main() {
    std::process::exit(expfb_cli::run(expfb_cli::Cli::parse()));
}
