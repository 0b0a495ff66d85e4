fn main() {
    std::process::exit(quasirbf::cli::run(std::env::args_os().collect()));
}
