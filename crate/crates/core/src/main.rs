fn main() {
    std::process::exit(neoseiz::cli::run(std::env::args_os()));
}
