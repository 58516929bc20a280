fn main() {
    std::process::exit(softshed::cli::run(std::env::args_os()));
}
