fn main() {
    std::process::exit(echofuse::cli::run(std::env::args_os()));
}
