fn main() {
    std::process::exit(radial_gate::cli::run(std::env::args_os()));
}
