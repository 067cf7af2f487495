fn main() {
    std::process::exit(gridprice_cli::run(std::env::args_os()));
}
