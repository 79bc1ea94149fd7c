fn main() {
    std::process::exit(bilattice::cli::main_with_args(std::env::args_os()));
}
