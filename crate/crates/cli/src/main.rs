fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(maxschro_cli::cli_main(&args));
}
