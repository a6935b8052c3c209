fn main() {
    // Die on SIGPIPE like any Unix filter instead of panicking mid-print
    // when stdout is piped into a pager or head(1).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(bislab::cli::run());
}
