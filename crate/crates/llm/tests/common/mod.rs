use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

#[derive(Clone)]
pub enum Reply {
    Content(String),
    Delayed(Duration, String),
    Status(u16),
}

#[derive(Debug, Clone, Default)]
pub struct Seen {
    pub bodies: Vec<String>,
    pub auth: Vec<Option<String>>,
}

/// Minimal chat-completions server; the k-th connection gets the k-th reply.
pub struct MockServer {
    pub url: String,
    pub seen: Arc<Mutex<Seen>>,
}

fn read_request(stream: &mut TcpStream) -> Option<(Option<String>, String)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut len = 0usize;
    let mut auth = None;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            match k.to_ascii_lowercase().as_str() {
                "content-length" => len = v.trim().parse().ok()?,
                "authorization" => auth = Some(v.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some((auth, String::from_utf8_lossy(&body).into_owned()))
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) {
    let reason = if status == 200 { "OK" } else { "Error" };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}

impl MockServer {
    pub fn start(replies: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Seen::default()));
        let log = Arc::clone(&seen);
        thread::spawn(move || {
            for (next, stream) in listener.incoming().enumerate() {
                let Ok(mut stream) = stream else { continue };
                let reply = replies[next.min(replies.len() - 1)].clone();
                let log = Arc::clone(&log);
                thread::spawn(move || {
                    let Some((auth, body)) = read_request(&mut stream) else { return };
                    {
                        let mut s = log.lock().unwrap();
                        s.bodies.push(body);
                        s.auth.push(auth);
                    }
                    let content = match reply {
                        Reply::Status(code) => return respond(&mut stream, code, "{}"),
                        Reply::Delayed(d, text) => {
                            thread::sleep(d);
                            text
                        }
                        Reply::Content(text) => text,
                    };
                    let payload = serde_json::json!({
                        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]
                    });
                    respond(&mut stream, 200, &payload.to_string());
                });
            }
        });
        Self { url, seen }
    }
}
