fn main() {
    std::process::exit(witness_forge_cli::run(std::env::args()));
}
