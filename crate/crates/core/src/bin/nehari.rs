fn main() {
    std::process::exit(nehari::cli::run(std::env::args_os()));
}
