use std::process::ExitCode;

fn main() -> ExitCode {
    qbm_sbs::cli::main()
}
