use clap::Parser;

fn main() {
    let cli = orlicz_lab_cli::Cli::parse();
    std::process::exit(orlicz_lab_cli::run(&cli));
}
