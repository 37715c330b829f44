fn main() {
    std::process::exit(qforge_cli::run(std::env::args_os()));
}
