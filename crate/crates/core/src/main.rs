fn main() {
    std::process::exit(figrl::cli::main_with_args(std::env::args_os()));
}
