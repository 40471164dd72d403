fn main() {
    std::process::exit(dissip_cli::run(std::env::args_os()));
}
