fn main() {
    std::process::exit(irs_multicast::cli::run(std::env::args_os()));
}
