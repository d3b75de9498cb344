fn main() {
    reexec_with_safe_blas();
    std::process::exit(vwlab::cli::main_with_args(std::env::args_os()));
}

/// OpenBLAS chooses its kernels when the library loads, so the variable has
/// to be in the environment before the process starts.
#[cfg(unix)]
fn reexec_with_safe_blas() {
    use std::os::unix::process::CommandExt;
    if std::env::var_os("OPENBLAS_CORETYPE").is_some() {
        return;
    }
    let Ok(exe) = std::env::current_exe() else { return };
    let err = std::process::Command::new(exe)
        .args(std::env::args_os().skip(1))
        .env("OPENBLAS_CORETYPE", "Haswell")
        .exec();
    eprintln!("vwlab: re-exec failed ({err}); continuing");
}

#[cfg(not(unix))]
fn reexec_with_safe_blas() {}
