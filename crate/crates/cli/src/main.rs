fn main() {
    std::process::exit(meanforge_cli::main_with(std::env::args_os()));
}
