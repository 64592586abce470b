fn main() {
    std::process::exit(surfcode_bath::cli::main_with_args(std::env::args_os()));
}
