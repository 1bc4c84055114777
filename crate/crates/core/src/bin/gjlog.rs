fn main() {
    std::process::exit(gjlog::cli::main_with_args(std::env::args_os()));
}
