fn main() {
    std::process::exit(fsorelay_core::cli::run(std::env::args_os()));
}
