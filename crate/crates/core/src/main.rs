fn main() {
    std::process::exit(theory_arena::cli::run_cli(std::env::args_os()));
}
