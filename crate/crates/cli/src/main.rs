fn main() {
    std::process::exit(bugsift_cli::run(std::env::args_os()));
}
