fn main() {
    std::process::exit(sysvar_cli::run(std::env::args_os()));
}
