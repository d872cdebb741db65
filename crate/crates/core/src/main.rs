use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = pwindows::cli::run(std::env::args_os());
    let written = match (&outcome.out, outcome.code) {
        (_, 2) => std::io::stderr().write_all(outcome.output.as_bytes()),
        (Some(path), _) => std::fs::write(path, &outcome.output),
        (None, _) => std::io::stdout().write_all(outcome.output.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("pwin: cannot write output: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.code as u8)
}
