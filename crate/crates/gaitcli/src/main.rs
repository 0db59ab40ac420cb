use std::process::ExitCode;

fn main() -> ExitCode {
    gaitcli::run()
}
