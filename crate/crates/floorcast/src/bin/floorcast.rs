fn main() {
    std::process::exit(floorcast::cli::run(std::env::args_os()));
}
