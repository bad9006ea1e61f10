fn main() {
    std::process::exit(morrey_sparse_cli::run(std::env::args_os().collect()));
}
