fn main() {
    std::process::exit(qcmsv_cli::run(std::env::args_os()));
}
