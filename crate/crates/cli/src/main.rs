use clap::Parser;

fn main() {
    let cli = treeop_cli::Cli::parse();
    std::process::exit(treeop_cli::run(cli));
}
