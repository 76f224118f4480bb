fn main() {
    std::process::exit(xlex::cli::run(std::env::args_os()));
}
