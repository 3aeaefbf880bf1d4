fn main() -> std::process::ExitCode {
    nmkerr::cli::main()
}
