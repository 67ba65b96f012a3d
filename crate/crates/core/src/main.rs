fn main() {
    std::process::exit(appforge::cli::main_with(std::env::args_os()));
}
