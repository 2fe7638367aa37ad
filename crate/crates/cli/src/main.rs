fn main() {
    std::process::exit(ckptplan_cli::run());
}
