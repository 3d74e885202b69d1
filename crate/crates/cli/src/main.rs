fn main() {
    std::process::exit(layout_critic_cli::run(std::env::args_os()));
}
