fn main() {
    std::process::exit(sawlab::run(std::env::args_os()));
}
