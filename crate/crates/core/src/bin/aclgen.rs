fn main() {
    std::process::exit(aclgen::cli::run(std::env::args_os()));
}
