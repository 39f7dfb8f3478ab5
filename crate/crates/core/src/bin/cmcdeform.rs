use clap::Parser;
use cmcdeform::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
