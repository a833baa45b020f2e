fn main() {
    std::process::exit(marstrand_core::cli::run(std::env::args_os()));
}
