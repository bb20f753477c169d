fn main() {
    std::process::exit(orbitgauge::cli::run(std::env::args_os()));
}
