fn main() {
    std::process::exit(isolevy::cli::main_with(std::env::args_os()));
}
