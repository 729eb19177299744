fn main() {
    std::process::exit(trialsent_cli::run(std::env::args_os()));
}
