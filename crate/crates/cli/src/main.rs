use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    match fhm_cli::run(std::env::args_os()) {
        Ok((text, exit)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(fhm_cli::Exit::Io.code() as u8);
            }
            ExitCode::from(exit.code() as u8)
        }
        Err(err) => {
            let _ = err.print();
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
