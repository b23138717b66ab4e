fn main() {
    std::process::exit(embmap::cli::run(std::env::args_os()));
}
