fn main() {
    std::process::exit(extval_cli::run(std::env::args_os()));
}
