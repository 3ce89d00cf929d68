fn main() {
    std::process::exit(afm_fem::cli::run(std::env::args_os()));
}
