fn main() {
    std::process::exit(caputokit::cli::main_with(std::env::args_os()));
}
