fn main() {
    std::process::exit(alcurve::cli::main_with_args(std::env::args_os()));
}
