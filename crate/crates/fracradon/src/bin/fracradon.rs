fn main() {
    std::process::exit(fracradon::cli::main_with_args(std::env::args_os()));
}
