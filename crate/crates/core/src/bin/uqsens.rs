fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = uqsens::cli::run(std::env::args_os());
    std::process::ExitCode::from(code as u8)
}
