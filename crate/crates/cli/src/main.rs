use std::process::ExitCode;

fn main() -> ExitCode {
    match pyics_cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pyics: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
