use std::process::ExitCode;

fn main() -> ExitCode {
    normed_billiards::cli::run(std::env::args_os())
}
