fn main() {
    std::process::exit(amendable::cli::run(std::env::args_os()));
}
