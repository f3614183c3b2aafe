fn main() {
    std::process::exit(spectral_attn::cli::main_entry());
}
