fn main() -> std::process::ExitCode {
    aiwf::cli::main_entry()
}
