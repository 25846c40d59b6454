fn main() {
    std::process::exit(wavebranch::cli::run(std::env::args_os()));
}
