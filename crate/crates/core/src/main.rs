use std::io::Write;

fn main() {
    let (code, out, err) = matrange::cli::run_args(std::env::args_os());
    print!("{out}");
    if !out.is_empty() && !out.ends_with('\n') {
        println!();
    }
    eprint!("{err}");
    let _ = std::io::stdout().flush();
    std::process::exit(code);
}
