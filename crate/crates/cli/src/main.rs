fn main() {
    std::process::exit(ncpain_cli::run(std::env::args_os()));
}
