fn main() {
    std::process::exit(secrelay::cli::main());
}
