fn main() {
    std::process::exit(bidpace::cli::cli_main(std::env::args_os()));
}
