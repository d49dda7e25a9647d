fn main() {
    std::process::exit(mlcache::run(std::env::args_os()));
}
