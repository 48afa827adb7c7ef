use clap::Parser;

fn main() {
    let cli = slu_cli::Cli::parse();
    if let Err(err) = slu_cli::run(cli) {
        let json = serde_json::json!({
            "error": format!("{err:#}"),
            "kind": slu_cli::error_kind(&err),
        });
        eprintln!("{json}");
        std::process::exit(1);
    }
}
