use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let mut out = io::BufWriter::new(io::stdout().lock());
    let code = fml_cli::run(std::env::args_os(), &mut out, &mut io::stderr());
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = out.flush();
    ExitCode::from(code as u8)
}
