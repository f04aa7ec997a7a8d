use std::io::Write;

fn main() {
    let seed = std::env::var(couda_cli::SEED_ENV).ok();
    let mut out = std::io::stdout().lock();
    let code = couda_cli::run(std::env::args_os(), seed.as_deref(), &mut out);
    let _ = out.flush();
    std::process::exit(code);
}
