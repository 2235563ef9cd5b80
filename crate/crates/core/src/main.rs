fn main() {
    std::process::exit(abcrf::cli::run(std::env::args_os()));
}
