fn main() {
    std::process::exit(fixforge::harness::cli::run(std::env::args_os()));
}
