use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let env = mz_cli::env_cache_dir();
    let mut out = io::stdout().lock();
    let mut err = io::stderr().lock();
    let code = mz_cli::run(std::env::args_os(), env.as_deref(), &mut out, &mut err);
    let _ = out.flush();
    ExitCode::from(code as u8)
}
