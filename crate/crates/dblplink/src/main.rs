fn main() {
    std::process::exit(dblplink::cli::main());
}
