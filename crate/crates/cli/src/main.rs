fn main() {
    std::process::exit(cmvrp_cli::run(std::env::args_os()));
}
