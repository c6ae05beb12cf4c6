fn main() {
    eprintln!("ncenter: command-line interface not wired up yet");
    std::process::exit(2);
}
