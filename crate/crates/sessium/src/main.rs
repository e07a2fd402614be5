fn main() {
    std::process::exit(sessium::cli::run());
}
