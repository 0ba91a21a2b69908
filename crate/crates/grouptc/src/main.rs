use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = grouptc::cli::run(&args);
    println!("{}", result.summary_line());
    ExitCode::from(result.exit_code as u8)
}
