fn main() {
    std::process::exit(dindex::cli::main_with_args(std::env::args_os()));
}
