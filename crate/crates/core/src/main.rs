fn main() {
    std::process::exit(shieldrl::cli::run(std::env::args_os()));
}
