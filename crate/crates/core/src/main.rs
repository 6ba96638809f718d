fn main() -> std::process::ExitCode {
    coflow_core::cli::main()
}
