fn main() {
    std::process::exit(nlgame::cli::run(std::env::args_os()));
}
