fn main() {
    std::process::exit(gntk::cli::run_command(std::env::args_os()));
}
