fn main() {
    std::process::exit(litcheb::cli::run());
}
