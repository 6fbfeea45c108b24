fn main() {
    std::process::exit(fairforest::cli::main_with_args(std::env::args_os()));
}
