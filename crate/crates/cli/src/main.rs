fn main() {
    std::process::exit(srpm3_cli::run_cli(std::env::args_os()));
}
