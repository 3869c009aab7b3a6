fn main() {
    std::process::exit(qns::cli::main_with(std::env::args_os()));
}
