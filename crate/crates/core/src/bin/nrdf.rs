fn main() {
    std::process::exit(nrdf::cli::main());
}
