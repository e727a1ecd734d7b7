fn main() {
    std::process::exit(covert_bc::cli::main_with_args(std::env::args_os()));
}
