use std::io::Write;

fn main() {
    let env = std::env::var(qcc_cli::TOLERANCE_ENV).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = qcc_cli::run(std::env::args_os(), env.as_deref(), &mut out, &mut err);
    let _ = out.flush();
    std::process::exit(code);
}
