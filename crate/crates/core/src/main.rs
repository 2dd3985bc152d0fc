fn main() {
    env_logger::init();
    std::process::exit(nall::cli::run(std::env::args_os()));
}
