fn main() {
    std::process::exit(collision_lab_cli::main_with_args(std::env::args_os()));
}
