fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or(cor_forge_cli::LOG_ENV, "warn")).init();
    std::process::exit(cor_forge_cli::main_with_args(std::env::args_os()));
}
