fn main() {
    std::process::exit(ssac::cli::main_entry());
}
