fn main() {
    std::process::exit(ifs_chisel_cli::run(std::env::args_os()));
}
