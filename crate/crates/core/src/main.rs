fn main() {
    std::process::exit(ahmass::cli::main_with(std::env::args_os()));
}
