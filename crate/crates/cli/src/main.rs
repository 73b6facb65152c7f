use clap::Parser;

fn main() {
    let args = linesol_cli::Args::parse();
    std::process::exit(linesol_cli::run(&args));
}
