fn main() -> std::process::ExitCode {
    fracwave::cli::main_entry()
}
