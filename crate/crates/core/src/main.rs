fn main() {
    std::process::exit(l0lab::cli::run(std::env::args_os()));
}
