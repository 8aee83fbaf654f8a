fn main() {
    std::process::exit(paritybet::cli::run(std::env::args_os()));
}
