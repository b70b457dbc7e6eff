use clap::Parser;

fn main() {
    let cli = glauber_cli::Cli::parse();
    std::process::exit(glauber_cli::run(&cli));
}
