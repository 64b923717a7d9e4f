fn main() {
    std::process::exit(shapeinv::cli::main_with_args(std::env::args_os()));
}
