fn main() {
    std::process::exit(snnkws::cli::run(std::env::args_os()));
}
