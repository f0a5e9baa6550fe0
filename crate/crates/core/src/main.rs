fn main() {
    std::process::exit(nonequiv::cli::main_with_args(std::env::args_os()));
}
