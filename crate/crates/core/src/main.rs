fn main() {
    std::process::exit(weylflow::cli::main_entry());
}
