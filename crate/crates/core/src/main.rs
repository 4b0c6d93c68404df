fn main() {
    std::process::exit(uapca::cli::run(std::env::args_os()));
}
