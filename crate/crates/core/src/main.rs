fn main() {
    std::process::exit(fneorbit::cli::main_with_args(std::env::args_os()));
}
