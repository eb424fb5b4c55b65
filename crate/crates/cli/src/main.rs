fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KSM_LOG", "warn")).init();
    std::process::exit(ksm_cli::run(std::env::args_os()));
}
