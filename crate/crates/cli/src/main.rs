fn main() {
    std::process::exit(rotor_vrae_cli::main_with_args(std::env::args_os()));
}
