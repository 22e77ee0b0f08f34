fn main() {
    std::process::exit(dgcl::cli::run_cli(std::env::args()));
}
