fn main() {
    std::process::exit(rcacf_bench::cli::run(std::env::args_os()));
}
