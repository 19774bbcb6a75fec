fn main() {
    std::process::exit(defilter::cli::main_with_args(std::env::args_os()));
}
