fn main() {
    std::process::exit(queenswarm::harness::cli::run());
}
