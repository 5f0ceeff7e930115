fn main() {
    std::process::exit(alphalab::lab::run(std::env::args_os()));
}
