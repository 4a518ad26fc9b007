use std::process::ExitCode;

use qtransport_cli::{execute, Outcome};

fn main() -> ExitCode {
    match execute(std::env::args_os()) {
        Ok(Outcome::Printed(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Ran(manifest)) => {
            let out = manifest.config.out.display();
            println!(
                "{} finished in {:.2}s",
                manifest.command, manifest.duration_seconds
            );
            for name in manifest.files.keys() {
                println!("  {out}/{name}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
