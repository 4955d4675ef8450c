fn main() {
    std::process::exit(coupling_core::cli::run(std::env::args_os()));
}
