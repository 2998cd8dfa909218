fn main() {
    std::process::exit(secure_sensing::runner::cli_main(std::env::args_os()));
}
