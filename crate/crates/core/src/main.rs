fn main() {
    std::process::exit(vosub::cli::run());
}
