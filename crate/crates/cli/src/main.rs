use std::process::ExitCode;

use kgalign::CliError;

fn main() -> ExitCode {
    match kgalign::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(rendered) if rendered.starts_with("error:") => {
                    eprint!("{rendered}")
                }
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
