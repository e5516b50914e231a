fn main() {
    std::process::exit(nls_solitons::cli::run(std::env::args_os()));
}
