fn main() {
    std::process::exit(splitstab_cli::run(std::env::args_os()));
}
