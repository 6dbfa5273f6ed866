fn main() { minpart::cli::main(); }
