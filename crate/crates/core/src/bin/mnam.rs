use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(mnam::cli::main())
}
