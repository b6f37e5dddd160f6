fn main() {
    std::process::exit(gradstate::cli::run(std::env::args_os()));
}
