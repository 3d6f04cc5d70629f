fn main() {
    std::process::exit(lowrank_cli::run(std::env::args_os()));
}
