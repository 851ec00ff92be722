fn main() {
    std::process::exit(coherence_core::cli::main())
}
