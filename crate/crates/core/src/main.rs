fn main() {
    std::process::exit(cloudplan::cli::run(std::env::args_os()));
}
