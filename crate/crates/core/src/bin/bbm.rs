fn main() -> std::process::ExitCode {
    bbm_lab::cli::main()
}
