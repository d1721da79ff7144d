use blowup_cli::{run, Cli};
use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    let code = match run(&cli, &mut out) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    };
    ExitCode::from(code as u8)
}
