use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout();
    let code = entwidth::cli::run(std::env::args(), &mut stdout);
    ExitCode::from(code as u8)
}
