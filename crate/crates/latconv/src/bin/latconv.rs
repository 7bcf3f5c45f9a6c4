fn main() {
    std::process::exit(latconv::cli::run(std::env::args_os()));
}
