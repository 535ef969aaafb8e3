fn main() {
    std::process::exit(learngraph::cli::run(std::env::args()));
}
