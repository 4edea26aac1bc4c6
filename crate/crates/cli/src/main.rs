fn main() {
    std::process::exit(hdc_cli::main_with(std::env::args_os()));
}
