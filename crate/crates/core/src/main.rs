fn main() -> std::process::ExitCode {
    zkaudit::cli::run()
}
