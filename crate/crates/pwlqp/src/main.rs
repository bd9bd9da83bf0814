fn main() {
    std::process::exit(pwlqp::cli::run_cli(std::env::args()));
}
