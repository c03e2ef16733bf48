fn main() {
    std::process::exit(fmotrack_cli::run_cli(std::env::args_os()));
}
