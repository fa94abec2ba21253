fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn,gddp_core::gddp=error")).init();
    std::process::exit(gddp_cli::run(std::env::args_os()));
}
