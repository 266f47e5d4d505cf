use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    match sphere_wavelets::cli::run(std::env::args_os(), &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sphwav: {}", e.message.trim_end());
            ExitCode::from(e.code as u8)
        }
    }
}
