fn main() {
    std::process::exit(scorefit::cli::dispatch(std::env::args_os()));
}
