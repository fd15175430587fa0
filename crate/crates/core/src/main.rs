fn main() {
    std::process::exit(mtm::cli::dispatch(std::env::args_os()));
}
