fn main() {
    std::process::exit(qeinstein::cli::main_with_args(std::env::args_os()));
}
