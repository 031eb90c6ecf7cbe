use std::process::ExitCode;

/// Caps the worker pool when DPUFL_THREADS is set to a positive integer.
/// Without the parallel feature every code path is sequential anyway.
#[cfg(feature = "parallel")]
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("DPUFL_THREADS") {
        match raw.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("warning: ignoring DPUFL_THREADS={raw:?}; expected a positive integer"),
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn init_thread_pool() {}

fn main() -> ExitCode {
    init_thread_pool();
    let argv: Vec<String> = std::env::args().collect();
    ExitCode::from(dpufl_cli::run(&argv) as u8)
}
