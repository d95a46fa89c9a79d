//! Session service transport.
//!
//! One listener, sniffed per connection: a connection whose first bytes are
//! `GET ` is HTTP (WebSocket upgrade at `/ws`, otherwise a static file from
//! the demo directory); anything else is line-delimited JSON. Every
//! connection gets its own [`SessionManager`] on its own thread.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use anyhow::Context;
use gazedoc::session::{ServerMessage, SessionManager, SessionRecord};
use gazedoc::trace::{write_events, write_trace};
use serde_json::Value;
use tungstenite::Message;

struct Shared {
    demo: Option<PathBuf>,
    record: Option<PathBuf>,
    connections: AtomicU64,
}

pub fn serve(host: &str, port: u16, demo: Option<PathBuf>, record: Option<PathBuf>) -> anyhow::Result<()> {
    let listener = TcpListener::bind((host, port)).with_context(|| format!("binding {host}:{port}"))?;
    let addr = listener.local_addr()?;
    println!("listening on {addr}");
    if demo.is_some() {
        println!("demo at http://{addr}/");
    }
    std::io::stdout().flush()?;
    let shared = Arc::new(Shared { demo, record, connections: AtomicU64::new(0) });
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept failed: {e}");
                continue;
            }
        };
        let shared = Arc::clone(&shared);
        std::thread::spawn(move || {
            let conn = shared.connections.fetch_add(1, Ordering::Relaxed) + 1;
            if let Err(e) = handle_connection(stream, conn, &shared) {
                eprintln!("connection {conn}: {e:#}");
            }
        });
    }
    Ok(())
}

fn handle_connection(stream: TcpStream, conn: u64, shared: &Shared) -> anyhow::Result<()> {
    stream.set_nodelay(true).ok();
    let head = peek_request_line(&stream)?;
    match head {
        Some(line) => {
            let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
            if path == "/ws" || path.starts_with("/ws?") {
                websocket(stream, conn, shared)
            } else {
                static_file(stream, &path, shared.demo.as_deref())
            }
        }
        None => ndjson(stream, conn, shared),
    }
}

/// The HTTP request line if the connection starts with `GET `, without
/// consuming anything.
fn peek_request_line(stream: &TcpStream) -> anyhow::Result<Option<String>> {
    let mut buf = [0u8; 2048];
    loop {
        let n = stream.peek(&mut buf)?;
        if n == 0 {
            return Ok(None);
        }
        let got = &buf[..n];
        let prefix = b"GET ";
        if !prefix.starts_with(&got[..n.min(4)]) {
            return Ok(None);
        }
        if let Some(end) = got.windows(2).position(|w| w == b"\r\n") {
            return Ok(Some(String::from_utf8_lossy(&got[..end]).into_owned()));
        }
        if n == buf.len() {
            return Ok(Some(String::from_utf8_lossy(got).into_owned()));
        }
        std::thread::sleep(std::time::Duration::from_millis(2));
    }
}

fn manager(shared: &Shared) -> SessionManager {
    SessionManager::new().with_recording(shared.record.is_some())
}

fn ndjson(stream: TcpStream, conn: u64, shared: &Shared) -> anyhow::Result<()> {
    let mut sessions = manager(shared);
    let reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let result = (|| -> anyhow::Result<()> {
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for reply in sessions.handle(&line) {
                serde_json::to_writer(&mut writer, &reply)?;
                writer.write_all(b"\n")?;
            }
            writer.flush()?;
            save_records(&mut sessions, conn, shared);
        }
        Ok(())
    })();
    sessions.close_all();
    save_records(&mut sessions, conn, shared);
    result
}

fn websocket(stream: TcpStream, conn: u64, shared: &Shared) -> anyhow::Result<()> {
    let mut ws = tungstenite::accept(stream).map_err(|e| anyhow::anyhow!("websocket handshake: {e}"))?;
    let mut sessions = manager(shared);
    let result = (|| -> anyhow::Result<()> {
        loop {
            let text = match ws.read() {
                Ok(Message::Text(t)) => t,
                Ok(Message::Binary(b)) => String::from_utf8_lossy(&b).into_owned(),
                Ok(Message::Close(_)) => return Ok(()),
                Ok(_) => continue,
                Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
                Err(e) => return Err(e.into()),
            };
            let mut replies: Vec<ServerMessage> = Vec::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                replies.extend(sessions.handle(line));
            }
            for r in replies {
                ws.write(Message::Text(serde_json::to_string(&r)?))?;
            }
            ws.flush()?;
            save_records(&mut sessions, conn, shared);
        }
    })();
    sessions.close_all();
    save_records(&mut sessions, conn, shared);
    result
}

fn save_records(sessions: &mut SessionManager, conn: u64, shared: &Shared) {
    let Some(dir) = &shared.record else { return };
    for rec in sessions.take_finished() {
        if let Err(e) = write_record(dir, conn, &rec) {
            eprintln!("recording {}: {e:#}", rec.session_id);
        }
    }
}

/// Writes `<stem>.scenario.json`, `.trace.jsonl`, `.events.jsonl` and
/// `.meta.json`. The effective engine config (minus mode) is embedded in the
/// scenario so a plain `replay --mode M` reproduces the session.
fn write_record(dir: &Path, conn: u64, rec: &SessionRecord) -> anyhow::Result<()> {
    let stem = format!("c{conn}-{}", rec.session_id);
    let mut scenario = rec.scenario.clone();
    let Value::Object(mut cfg) = serde_json::to_value(&rec.config)? else { unreachable!() };
    cfg.remove("mode");
    scenario.config = cfg;
    let path = |ext: &str| dir.join(format!("{stem}.{ext}"));
    std::fs::write(path("scenario.json"), scenario.to_json() + "\n")?;
    let mut w = BufWriter::new(std::fs::File::create(path("trace.jsonl"))?);
    write_trace(&mut w, &rec.samples)?;
    w.flush()?;
    let mut w = BufWriter::new(std::fs::File::create(path("events.jsonl"))?);
    write_events(&mut w, &rec.events)?;
    w.flush()?;
    let mode = serde_json::to_value(rec.config.mode)?;
    let meta = serde_json::json!({
        "connection": conn,
        "session_id": rec.session_id,
        "mode": mode,
        "samples": rec.samples.len(),
        "events": rec.events.len(),
        "replay": format!(
            "gazedoc replay -s {stem}.scenario.json -t {stem}.trace.jsonl -e {stem}.events.jsonl --mode {}",
            mode.as_str().unwrap_or("vrdoc")
        ),
    });
    std::fs::write(path("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn static_file(mut stream: TcpStream, raw_path: &str, root: Option<&Path>) -> anyhow::Result<()> {
    // drain the request head
    let mut head = Vec::new();
    let mut byte = [0u8; 1];
    while !head.ends_with(b"\r\n\r\n") && head.len() < 16 * 1024 {
        if stream.read(&mut byte)? == 0 {
            break;
        }
        head.push(byte[0]);
    }
    let path = raw_path.split(['?', '#']).next().unwrap_or("/");
    let file = root.and_then(|r| resolve(r, path));
    let (status, ctype, body) = match file.and_then(|f| std::fs::read(&f).ok().map(|b| (f, b))) {
        Some((f, body)) => ("200 OK", content_type(&f), body),
        None => ("404 Not Found", "text/plain; charset=utf-8", b"not found\n".to_vec()),
    };
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nCache-Control: no-store\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    stream.write_all(&body)?;
    stream.flush()?;
    Ok(())
}

/// File under `root` for a URL path; `None` for anything escaping it.
fn resolve(root: &Path, url_path: &str) -> Option<PathBuf> {
    let rel = Path::new(url_path.trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    let mut p = root.join(rel);
    if p.is_dir() {
        p.push("index.html");
    }
    p.is_file().then_some(p)
}

fn content_type(p: &Path) -> &'static str {
    match p.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "wasm" => "application/wasm",
        "txt" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_cannot_escape_root() {
        let dir = std::env::temp_dir();
        assert!(resolve(&dir, "/../etc/passwd").is_none());
        assert!(resolve(&dir, "/a/../../b").is_none());
    }

    #[test]
    fn content_types() {
        assert_eq!(content_type(Path::new("x/index.html")), "text/html; charset=utf-8");
        assert_eq!(content_type(Path::new("app.js")), "text/javascript; charset=utf-8");
    }
}
