fn main() {
    std::process::exit(depdiag::cli::main());
}
