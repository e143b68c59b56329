fn main() {
    std::process::exit(sgdlab_cli::main_with(std::env::args_os()));
}
