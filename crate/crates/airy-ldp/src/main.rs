use clap::Parser;

fn main() {
    let cli = airy_ldp::cli::Cli::parse();
    std::process::exit(airy_ldp::cli::run(cli));
}
