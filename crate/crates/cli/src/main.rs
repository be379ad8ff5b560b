fn main() {
    std::process::exit(evoipd_cli::run(std::env::args_os()));
}
