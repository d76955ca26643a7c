fn main() {
    std::process::exit(mafit::cli::main_exit_code());
}
