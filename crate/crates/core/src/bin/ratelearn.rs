fn main() {
    std::process::exit(ratelearn::cli::main_with_args(std::env::args_os()));
}
