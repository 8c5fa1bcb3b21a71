fn main() {
    std::process::exit(robust_cem_cli::run(std::env::args_os()));
}
