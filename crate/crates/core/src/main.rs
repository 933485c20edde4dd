fn main() {
    std::process::exit(ca_netsim::cli::main_with_args(std::env::args_os()));
}
