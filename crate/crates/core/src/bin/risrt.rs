fn main() {
    std::process::exit(risrt::cli::cli_main(std::env::args_os()));
}
