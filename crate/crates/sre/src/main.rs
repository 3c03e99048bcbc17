fn main() {
    let outcome = sre::cli::execute(std::env::args_os());
    println!(
        "{}",
        serde_json::to_string_pretty(&outcome.json).expect("JSON values serialize")
    );
    std::process::exit(outcome.code);
}
