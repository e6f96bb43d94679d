fn main() {
    std::process::exit(rotvq::cli::main_with_args(std::env::args_os()));
}
