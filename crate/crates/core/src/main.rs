use std::process::ExitCode;

fn main() -> ExitCode {
    jsgap::cli::main()
}
