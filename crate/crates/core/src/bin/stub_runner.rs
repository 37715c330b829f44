//! Stand-in runner speaking the sandbox envelope protocol; see
//! `qforge_core::sandbox::stub` for the script language.

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(qforge_core::sandbox::stub::stub_runner_main(&args));
}
