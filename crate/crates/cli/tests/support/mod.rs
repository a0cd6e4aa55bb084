#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub const BIN: &str = env!("CARGO_BIN_EXE_factledger");
pub const CURATOR: (&str, &str) = ("admin", "s3cret");

pub fn factledger(args: &[&str]) -> Command {
    let mut c = Command::new(BIN);
    c.args(args).env_remove("FACTLEDGER_API").env("FACTLEDGER_USER", CURATOR.0).env("FACTLEDGER_CREDENTIAL", CURATOR.1);
    c
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn factledger");
    assert!(
        out.status.success(),
        "{:?} failed: {}\n{}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("node.conf");
    let text = format!(
        "service.bind = 127.0.0.1:0\nservice.data_dir = ./data\ncurator.{} = {}\n{extra}",
        CURATOR.0, CURATOR.1
    );
    std::fs::write(&path, text).unwrap();
    path
}

/// A `factledger run` child process; killed on drop.
pub struct Server {
    child: Child,
    pub url: String,
    pub height_at_start: u64,
}

impl Server {
    pub fn start(config: &Path) -> Self {
        let mut child = Command::new(BIN)
            .args(["run", "--config"])
            .arg(config)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn server");
        let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
        let first = lines.next().expect("server output").unwrap();
        let url = first.strip_prefix("listening on ").expect("listening line").to_owned();
        let height = lines.next().unwrap().unwrap();
        let height_at_start = height.strip_prefix("height ").unwrap().parse().unwrap();
        Server { child, url, height_at_start }
    }

    /// A CLI command pointed at this server.
    pub fn cli(&self, args: &[&str]) -> Command {
        let mut c = factledger(args);
        c.env("FACTLEDGER_API", &self.url);
        c
    }

    pub fn get(&self, path: &str) -> serde_json::Value {
        let url = format!("{}/v1{path}", self.url);
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async { reqwest::get(&url).await.unwrap().json().await.unwrap() })
    }

    /// Graceful stop (SIGTERM) so queued blocks are committed.
    pub fn stop(mut self) {
        let pid = self.child.id().to_string();
        let _ = Command::new("kill").args(["-TERM", &pid]).status();
        let _ = self.child.wait();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
