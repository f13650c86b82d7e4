fn main() {
    std::process::exit(densecell::cli::run(std::env::args_os()));
}
