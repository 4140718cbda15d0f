use std::io::Write;

fn main() {
    let output = nmts_cli::run(std::env::args_os());
    print!("{}", output.stdout);
    eprint!("{}", output.stderr);
    std::io::stdout().flush().ok();
    std::process::exit(output.code);
}
