fn main() {
    std::process::exit(isoexplain::cli::run(std::env::args_os()));
}
