fn main() {
    std::process::exit(cmxtag::cli::main_with_args(std::env::args_os()));
}
