fn main() {
    std::process::exit(sensor_game::cli::run(std::env::args_os()));
}
