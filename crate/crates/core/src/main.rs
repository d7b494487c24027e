fn main() {
    std::process::exit(resonant_kinetics::cli::run(std::env::args_os()));
}
