use clap::Parser;

fn main() {
    #[cfg(feature = "parallel")]
    if let Ok(threads) = std::env::var("C0IP_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid C0IP_THREADS={threads:?}"),
        }
    }
    let cli = c0ip::cli::Cli::parse();
    std::process::exit(c0ip::cli::run(cli));
}
