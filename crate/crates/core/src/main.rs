fn main() {
    std::process::exit(sphere_strichartz::cli::run(std::env::args_os()));
}
