fn main() {
    std::process::exit(psmilu::cli::run(std::env::args_os()));
}
