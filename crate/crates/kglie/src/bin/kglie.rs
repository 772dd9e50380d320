fn main() {
    std::process::exit(kglie::cli::run_from_env());
}
