fn main() { ncx::cli::main() }
