fn main() {
    std::process::exit(homog::cli::main_with_args(std::env::args_os()));
}
