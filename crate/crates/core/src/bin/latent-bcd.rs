fn main() {
    let code = latent_bcd::cli::run(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
