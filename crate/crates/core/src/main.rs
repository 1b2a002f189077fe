fn main() -> std::process::ExitCode {
    collapse_lab::cli::main_entry()
}
