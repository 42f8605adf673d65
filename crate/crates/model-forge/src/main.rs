use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(model_forge::cli::run(std::env::args()))
}
