fn main() {
    std::process::exit(bqtf::cli::main_with_args(std::env::args_os()));
}
