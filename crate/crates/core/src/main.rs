fn main() {
    std::process::exit(qls::cli::run(std::env::args_os()));
}
