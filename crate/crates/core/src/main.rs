fn main() {
    std::process::exit(relucheck::cli::run());
}
