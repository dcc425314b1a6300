fn main() {
    std::process::exit(ehoi_core::cli::main());
}
