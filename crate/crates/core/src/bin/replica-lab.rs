fn main() {
    std::process::exit(replica_lab::cli::run(std::env::args_os()));
}
