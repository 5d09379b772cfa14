fn main() {
    std::process::exit(contract_offload::harness::cli::cli_main(std::env::args_os()));
}
