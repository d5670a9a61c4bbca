fn main() { std::process::exit(liftcg::cli::main()) }
