fn main() {
    std::process::exit(langevin_baths::cli::main_with_args(std::env::args_os()));
}
