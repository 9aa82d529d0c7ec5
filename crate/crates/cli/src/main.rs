fn main() {
    std::process::exit(cantor_cli::run(std::env::args_os()));
}
