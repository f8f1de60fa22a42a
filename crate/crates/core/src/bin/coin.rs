fn main() {
    std::process::exit(coin::cli::run(std::env::args_os()));
}
