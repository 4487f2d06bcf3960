fn main() {
    std::process::exit(georouter::cli::run());
}
