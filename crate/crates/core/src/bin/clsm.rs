use std::process::ExitCode;

fn main() -> ExitCode {
    clsm::cli::run(std::env::args_os())
}
