fn main() {
    std::process::exit(combwalk::cli::dispatch(std::env::args_os()));
}
