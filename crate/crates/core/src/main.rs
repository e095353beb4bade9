use std::process::ExitCode;

fn main() -> ExitCode {
    lexlaws::cli::run()
}
