use std::process::ExitCode;

fn main() -> ExitCode {
    match gmrf_gibbs::cli::run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
