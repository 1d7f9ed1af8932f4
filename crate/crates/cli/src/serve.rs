//! Live mode: one TCP port carrying NDJSON clients, the `/ws` browser
//! socket and static dashboard assets. The protocol is chosen per
//! connection from its first bytes.
//!
//! The simulation stays on the calling thread. Connection threads only see
//! a bus handle and the command queue, which is drained at the start of
//! every tick so commands never land mid-step.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, Sender};
use log::{debug, info, warn};
use modiag::bus::{decode, encode, Body, Bus, ChannelFilter, Command, Envelope, Kind};
use modiag::config::GraphConfig;
use modiag::simulator::{
    apply_event, evaluate_asserts, prepare, RunOptions, RunResult, ScenarioScript, SimOptions, Simulation,
};
use modiag::{DiagnosticState, DiagnosticStatus, NamePath};
use tungstenite::Message;

use crate::{usage, Exit, NetArgs};

/// How long a new connection may stay silent before it is treated as NDJSON.
const SNIFF_TIMEOUT: Duration = Duration::from_millis(200);
/// Read poll interval of connection loops; bounds outbound latency.
const POLL: Duration = Duration::from_millis(20);
const CLIENT_QUEUE: usize = 4096;

pub struct NetConfig {
    host: String,
    port: u16,
    assets: Option<PathBuf>,
}

impl From<NetArgs> for NetConfig {
    fn from(args: NetArgs) -> Self {
        NetConfig {
            host: args.host,
            port: args.port,
            assets: args.assets,
        }
    }
}

type Request = (Command, Sender<Envelope>);

fn bind(net: &NetConfig) -> Result<TcpListener, Exit> {
    let listener = TcpListener::bind((net.host.as_str(), net.port))
        .map_err(|e| usage(anyhow::anyhow!("cannot listen on {}:{}: {e}", net.host, net.port)))?;
    let addr = listener.local_addr().map_err(usage)?;
    println!("listening on {addr}");
    let _ = io::stdout().flush();
    Ok(listener)
}

fn spawn_acceptor(listener: TcpListener, bus: Bus, commands: Sender<Request>, assets: Option<PathBuf>) {
    thread::spawn(move || {
        for stream in listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    warn!("accept failed: {e}");
                    continue;
                }
            };
            let (bus, commands, assets) = (bus.clone(), commands.clone(), assets.clone());
            thread::spawn(move || {
                let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
                if let Err(e) = handle_connection(stream, &bus, &commands, assets.as_deref()) {
                    debug!("{peer}: {e}");
                }
                debug!("{peer}: closed");
            });
        }
    });
}

/// Applies queued commands, steps once and sleeps out the rest of `period`.
fn tick(sim: &mut Simulation, commands: &Receiver<Request>, period: Duration, started: Instant) {
    for (command, reply) in commands.try_iter() {
        let _ = reply.send(sim.handle_command(command));
    }
    sim.step();
    let due = started + period;
    if let Some(wait) = due.checked_duration_since(Instant::now()) {
        thread::sleep(wait);
    }
}

/// Serves the reference world until the process is killed.
pub fn live(config: &GraphConfig, options: RunOptions, net: &NetConfig, period: Duration) -> Result<(), Exit> {
    let mut sim = Simulation::new(
        config,
        SimOptions {
            incident_dir: options.incident_dir,
            epoch_offset_ms: options.epoch_offset_ms,
            ..SimOptions::default()
        },
    )
    .map_err(|findings| usage(modiag::simulator::RunError::Graph(findings)))?;
    let listener = bind(net)?;
    let (tx, rx) = crossbeam_channel::unbounded();
    spawn_acceptor(listener, sim.bus().clone(), tx, net.assets.clone());
    info!("ticking every {period:?}");
    loop {
        tick(&mut sim, &rx, period, Instant::now());
    }
}

/// Plays `scenario` on the wall clock while clients watch and may interfere.
pub fn replay(
    scenario: &ScenarioScript,
    config: &GraphConfig,
    options: RunOptions,
    net: &NetConfig,
    period: Duration,
) -> Result<RunResult, Exit> {
    let mut sim = prepare(scenario, config, options).map_err(usage)?;
    let listener = bind(net)?;
    let (tx, rx) = crossbeam_channel::unbounded();
    spawn_acceptor(listener, sim.bus().clone(), tx, net.assets.clone());
    let mut pending = scenario.events.iter().peekable();
    while sim.now_ms() <= scenario.duration_ms {
        let started = Instant::now();
        while let Some(event) = pending.next_if(|e| e.t_ms <= sim.now_ms()) {
            apply_event(&mut sim, &event.event);
        }
        tick(&mut sim, &rx, period, started);
    }
    let timeline = sim.into_timeline();
    let asserts = evaluate_asserts(scenario, &timeline);
    Ok(RunResult { timeline, asserts })
}

enum Protocol {
    Ndjson,
    WebSocket,
    Http(String),
}

/// Waits for a complete first line, or for silence, and classifies it.
fn sniff(stream: &TcpStream) -> io::Result<Protocol> {
    stream.set_read_timeout(Some(POLL))?;
    let deadline = Instant::now() + SNIFF_TIMEOUT;
    let mut buf = [0u8; 1024];
    let head = loop {
        let n = match stream.peek(&mut buf) {
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => n,
            Err(e) if is_timeout(&e) => 0,
            Err(e) => return Err(e),
        };
        let head = &buf[..n];
        let settled = head.contains(&b'\n') || n == buf.len() || Instant::now() >= deadline;
        let maybe_http = b"GET ".starts_with(&head[..n.min(4)]);
        if settled || !maybe_http {
            break head;
        }
        thread::sleep(Duration::from_millis(5));
    };
    let Some(request) = head.strip_prefix(b"GET ") else {
        return Ok(Protocol::Ndjson);
    };
    let target = request.split(|b| *b == b' ' || *b == b'\r' || *b == b'\n').next().unwrap_or_default();
    let target = String::from_utf8_lossy(target);
    let path = target.split('?').next().unwrap_or_default().to_string();
    Ok(if path == "/ws" { Protocol::WebSocket } else { Protocol::Http(path) })
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut)
}

fn handle_connection(stream: TcpStream, bus: &Bus, commands: &Sender<Request>, assets: Option<&Path>) -> io::Result<()> {
    match sniff(&stream)? {
        Protocol::Ndjson => serve_ndjson(stream, bus, commands),
        Protocol::WebSocket => serve_websocket(stream, bus, commands),
        Protocol::Http(path) => serve_static(stream, &path, assets),
    }
}

fn command_error(message: String) -> Envelope {
    let name = NamePath::parse("/diag/command").expect("valid name");
    Envelope::status(DiagnosticStatus::new(name, DiagnosticState::Error, 0).with_message(message))
}

/// Parses one inbound frame. Bare command objects are accepted as well as
/// full `command` envelopes.
fn parse_command(line: &str) -> Result<Command, String> {
    match decode(line) {
        Ok(Envelope {
            body: Body::Command(command),
            ..
        }) => Ok(command),
        Ok(other) => Err(format!("expected a command frame, got {:?}", other.kind())),
        Err(wire) => serde_json::from_str::<Command>(line).map_err(|_| wire.to_string()),
    }
}

/// Forwards one inbound line to the tick loop, or answers it directly when
/// it cannot be parsed.
fn submit(line: &str, commands: &Sender<Request>, replies: &Sender<Envelope>) {
    if line.trim().is_empty() {
        return;
    }
    match parse_command(line) {
        Ok(command) => {
            if commands.send((command, replies.clone())).is_err() {
                let _ = replies.send(command_error("simulation stopped".into()));
            }
        }
        Err(message) => {
            let _ = replies.send(command_error(message));
        }
    }
}

/// Outbound frames: command replies first, then bus traffic minus raw data.
/// State changes are already broadcast, so their replies are dropped.
fn outbound(replies: &Receiver<Envelope>, subscription: &modiag::bus::Subscription) -> Vec<String> {
    let mut out: Vec<String> = replies
        .try_iter()
        .filter(|e| e.kind() != Kind::StateChange)
        .map(|e| encode(&e))
        .collect();
    out.extend(
        subscription
            .drain()
            .into_iter()
            .filter(|e| e.kind() != Kind::Data)
            .map(|e| encode(&e)),
    );
    out
}

fn serve_ndjson(stream: TcpStream, bus: &Bus, commands: &Sender<Request>) -> io::Result<()> {
    let subscription = bus.subscribe_with_capacity(ChannelFilter::All, CLIENT_QUEUE);
    let (reply_tx, reply_rx) = crossbeam_channel::unbounded();
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut line = Vec::new();
    loop {
        match reader.read_until(b'\n', &mut line) {
            Ok(0) => return Ok(()),
            Ok(_) if line.ends_with(b"\n") => {
                submit(&String::from_utf8_lossy(&line), commands, &reply_tx);
                line.clear();
            }
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(e) => return Err(e),
        }
        let frames = outbound(&reply_rx, &subscription);
        if !frames.is_empty() {
            let mut text = frames.join("\n");
            text.push('\n');
            writer.write_all(text.as_bytes())?;
        }
    }
}

fn serve_websocket(stream: TcpStream, bus: &Bus, commands: &Sender<Request>) -> io::Result<()> {
    stream.set_read_timeout(None)?;
    let mut socket = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
    socket.get_ref().set_read_timeout(Some(POLL))?;
    let subscription = bus.subscribe_with_capacity(ChannelFilter::All, CLIENT_QUEUE);
    let (reply_tx, reply_rx) = crossbeam_channel::unbounded();
    loop {
        match socket.read() {
            Ok(Message::Text(text)) => {
                for line in text.lines() {
                    submit(line, commands, &reply_tx);
                }
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if is_timeout(&e) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(io::Error::other(e.to_string())),
        }
        for frame in outbound(&reply_rx, &subscription) {
            socket.send(Message::Text(frame)).map_err(|e| io::Error::other(e.to_string()))?;
        }
    }
}

const PLACEHOLDER_PAGE: &str = "<!doctype html>\n<title>modiag</title>\n<p>The diagnosis bus is live. \
Connect a dashboard to <code>/ws</code>, or start with <code>--assets DIR</code> to serve one.</p>\n";

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json" | "map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

/// Maps a request path into `root`, refusing anything that climbs out.
fn resolve_asset(root: &Path, request: &str) -> Option<PathBuf> {
    let relative = Path::new(request.trim_start_matches('/'));
    if relative.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    let mut path = root.join(relative);
    if request.ends_with('/') || path.is_dir() {
        path.push("index.html");
    }
    path.is_file().then_some(path)
}

fn serve_static(mut stream: TcpStream, request: &str, assets: Option<&Path>) -> io::Result<()> {
    // Drain the request head so closing the socket does not reset it.
    stream.set_read_timeout(Some(POLL))?;
    let mut scratch = [0u8; 4096];
    let _ = stream.read(&mut scratch);
    let (status, kind, body) = match assets {
        None if request == "/" || request == "/index.html" => {
            ("200 OK", "text/html; charset=utf-8", PLACEHOLDER_PAGE.as_bytes().to_vec())
        }
        None => ("404 Not Found", "text/plain", b"not found\n".to_vec()),
        Some(root) => match resolve_asset(root, request).map(|p| (std::fs::read(&p), p)) {
            Some((Ok(body), path)) => ("200 OK", content_type(&path), body),
            Some((Err(_), _)) | None => ("404 Not Found", "text/plain", b"not found\n".to_vec()),
        },
    };
    let head = format!(
        "HTTP/1.1 {status}\r\nContent-Type: {kind}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(&body)?;
    stream.flush()
}
