use std::process::ExitCode;

fn main() -> ExitCode {
    anticonc::cli::run()
}
