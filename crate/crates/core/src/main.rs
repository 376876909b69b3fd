use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(deepmf::cli::run(std::env::args_os()))
}
