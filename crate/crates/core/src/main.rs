fn main() {
    std::process::exit(ipcount::cli::run(std::env::args_os()));
}
