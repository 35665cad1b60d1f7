fn main() {
    std::process::exit(glvortex::cli::run(std::env::args_os()));
}
