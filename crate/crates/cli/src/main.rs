fn main() {
    std::process::exit(edocr_cli::run_cli(std::env::args_os()));
}
