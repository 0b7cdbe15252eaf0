fn main() {
    std::process::exit(oel_cli::run(std::env::args_os()));
}
