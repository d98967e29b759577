fn main() {
    std::process::exit(exonet::cli::run(std::env::args_os()));
}
