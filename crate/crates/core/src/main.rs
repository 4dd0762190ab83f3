fn main() {
    std::process::exit(algebroid::cli::main());
}
