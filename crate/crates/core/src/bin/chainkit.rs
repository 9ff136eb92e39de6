fn main() {
    std::process::exit(chainkit::cli::main_with_args(std::env::args_os()));
}
