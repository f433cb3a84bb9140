fn main() {
    std::process::exit(atom_membrane::cli::run(std::env::args_os()));
}
