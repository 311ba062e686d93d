fn main() {
    std::process::exit(prs_isac::cli::main_with_args(std::env::args_os()));
}
