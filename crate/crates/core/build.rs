use std::process::Command;

fn main() {
    println!("cargo:rerun-if-changed=build.rs");
    let describe = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "untagged".to_string());
    println!("cargo:rustc-env=GAPWIN_GIT_DESCRIBE={describe}");
}
