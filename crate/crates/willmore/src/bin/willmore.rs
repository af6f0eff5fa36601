use clap::Parser;
use willmore::cli::{main_entry, CliArgs};

fn main() {
    let args = CliArgs::parse();
    std::process::exit(main_entry(&args));
}
