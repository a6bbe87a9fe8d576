fn main() {
    std::process::exit(critlen::dispatch(std::env::args_os()));
}
