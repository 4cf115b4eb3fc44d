fn main() -> std::process::ExitCode {
    adveig::cli::main()
}
