//! Streaming control service.
//!
//! One simulation thread owns the [`Sim`]; every websocket connection gets a
//! thread that forwards its text messages to the simulation thread over a
//! single ordered channel and writes whatever lands in its outbox back to the
//! socket. The simulation thread never blocks on a client: snapshots go into
//! a bounded per-connection outbox that drops its oldest snapshot when full.

use std::collections::{BTreeMap, VecDeque};
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use serde_json::Value;
use tr_core::botworld::ExogenousEvent;
use tr_core::sim::{Scenario, Sim, TraceRecord};
use tungstenite::{Message, WebSocket};

use crate::protocol::{decode, Reply, Request};

/// Snapshots buffered per connection before the oldest are dropped.
pub const OUTBOX_SNAPSHOTS: usize = 256;
pub const DEFAULT_RATE: f64 = 20.0;
const POLL: Duration = Duration::from_millis(5);

#[derive(Default)]
struct Queue {
    items: VecDeque<(bool, String)>,
    snapshots: usize,
    dropped: u64,
}

/// Messages waiting to be written to one client. Replies are never dropped;
/// snapshots are, oldest first, once `cap` of them are waiting.
pub struct Outbox {
    queue: Mutex<Queue>,
    cap: usize,
}

impl Outbox {
    pub fn new(cap: usize) -> Self {
        Outbox { queue: Mutex::new(Queue::default()), cap: cap.max(1) }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Queue> {
        self.queue.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn push_reply(&self, text: String) {
        self.lock().items.push_back((false, text));
    }

    pub fn push_snapshot(&self, text: String) {
        let mut q = self.lock();
        if q.snapshots >= self.cap {
            if let Some(i) = q.items.iter().position(|(snap, _)| *snap) {
                q.items.remove(i);
                q.snapshots -= 1;
                q.dropped += 1;
            }
        }
        q.items.push_back((true, text));
        q.snapshots += 1;
    }

    pub fn drain(&self) -> Vec<String> {
        let mut q = self.lock();
        q.snapshots = 0;
        q.items.drain(..).map(|(_, t)| t).collect()
    }

    pub fn dropped(&self) -> u64 {
        self.lock().dropped
    }
}

enum Command {
    Connect(u64, Arc<Outbox>),
    Text(u64, String),
    Disconnect(u64),
}

struct Subscription {
    decimation: u64,
    world_every: u64,
    sent: u64,
}

struct Conn {
    outbox: Arc<Outbox>,
    sub: Option<Subscription>,
}

struct Loaded {
    sim: Sim,
    ticks: u64,
    finished: bool,
}

struct Control {
    loaded: Option<Loaded>,
    running: bool,
    rate: f64,
    next_due: Instant,
    conns: BTreeMap<u64, Conn>,
}

impl Control {
    fn new(initial: Option<Scenario>) -> Self {
        let mut c = Control { loaded: None, running: false, rate: DEFAULT_RATE, next_due: Instant::now(), conns: BTreeMap::new() };
        if let Some(s) = initial {
            if let Err(e) = c.load(s) {
                warn!("initial scenario rejected: {e}");
            }
        }
        c
    }

    fn run(mut self, rx: Receiver<Command>) {
        loop {
            let cmd = if !self.running {
                rx.recv().map_err(|_| RecvTimeoutError::Disconnected)
            } else if self.rate == 0.0 {
                rx.try_recv().map_err(|e| match e {
                    TryRecvError::Empty => RecvTimeoutError::Timeout,
                    TryRecvError::Disconnected => RecvTimeoutError::Disconnected,
                })
            } else {
                rx.recv_timeout(self.next_due.saturating_duration_since(Instant::now()))
            };
            match cmd {
                Ok(c) => self.handle(c),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => return,
            }
            if self.running && (self.rate == 0.0 || Instant::now() >= self.next_due) {
                if self.rate > 0.0 {
                    let period = Duration::from_secs_f64(1.0 / self.rate);
                    self.next_due += period;
                    // Do not try to catch up after a stall.
                    if self.next_due + period < Instant::now() {
                        self.next_due = Instant::now() + period;
                    }
                }
                let _ = self.advance();
            }
        }
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Connect(id, outbox) => {
                info!("client {id} connected");
                self.conns.insert(id, Conn { outbox, sub: None });
            }
            Command::Disconnect(id) => {
                info!("client {id} disconnected");
                self.conns.remove(&id);
            }
            Command::Text(conn, text) => {
                debug!("client {conn}: {text}");
                let (id, req) = decode(&text);
                let reply = match req.and_then(|r| self.request(conn, r)) {
                    Ok(()) => Reply::Ack { id },
                    Err(reason) => Reply::Error { id, reason },
                };
                if let Some(c) = self.conns.get(&conn) {
                    c.outbox.push_reply(reply.to_text());
                }
            }
        }
    }

    fn request(&mut self, conn: u64, req: Request) -> Result<(), String> {
        match req {
            Request::Load { scenario } => self.load(*scenario),
            Request::Start => {
                let l = self.loaded.as_ref().ok_or("no scenario loaded")?;
                if l.finished {
                    return Err("scenario has finished; load it again".into());
                }
                if !self.running {
                    self.running = true;
                    self.next_due = Instant::now();
                }
                Ok(())
            }
            Request::Pause => {
                self.running = false;
                Ok(())
            }
            Request::Step { n } => {
                let l = self.loaded.as_ref().ok_or("no scenario loaded")?;
                if l.finished {
                    return Err("scenario has finished; load it again".into());
                }
                for _ in 0..n {
                    self.advance()?;
                    if self.loaded.as_ref().is_some_and(|l| l.finished) {
                        break;
                    }
                }
                Ok(())
            }
            Request::SetRate { rate } => {
                if !(rate.is_finite() && rate >= 0.0) {
                    return Err(format!("rate must be a non-negative number, got {rate}"));
                }
                self.rate = rate;
                self.next_due = Instant::now();
                Ok(())
            }
            Request::Inject { event, at_tick } => {
                let l = self.loaded.as_mut().ok_or("no scenario loaded")?;
                let at_tick = at_tick.unwrap_or(l.sim.tick());
                l.sim.inject(ExogenousEvent { at_tick, kind: event }).map_err(|e| e.to_string())
            }
            Request::Subscribe { decimation, world_every } => {
                if decimation == 0 || world_every == 0 {
                    return Err("decimation and world_every must be at least 1".into());
                }
                let c = self.conns.get_mut(&conn).ok_or("unknown connection")?;
                c.sub = Some(Subscription { decimation, world_every, sent: 0 });
                Ok(())
            }
        }
    }

    fn load(&mut self, mut scenario: Scenario) -> Result<(), String> {
        scenario.resolve_files(Path::new(".")).map_err(|e| e.to_string())?;
        let sim = Sim::new(&scenario).map_err(|e| e.to_string())?;
        for w in sim.warnings() {
            warn!("{w}");
        }
        info!("scenario loaded: {} ticks", scenario.ticks);
        self.loaded = Some(Loaded { sim, ticks: scenario.ticks, finished: false });
        self.running = false;
        for c in self.conns.values_mut() {
            if let Some(s) = &mut c.sub {
                s.sent = 0;
            }
        }
        Ok(())
    }

    /// Runs one tick and fans the record out.
    fn advance(&mut self) -> Result<(), String> {
        let Some(l) = self.loaded.as_mut() else { return Err("no scenario loaded".into()) };
        if l.finished {
            return Err("scenario has finished".into());
        }
        match l.sim.step() {
            Ok(rec) => {
                let done = l.sim.tick() >= l.ticks;
                self.fan_out(&rec);
                if done {
                    self.finish("completed".into());
                }
                Ok(())
            }
            Err(e) => {
                let reason = format!("runtime error: {e}");
                warn!("{reason}");
                self.finish(reason.clone());
                Err(reason)
            }
        }
    }

    fn finish(&mut self, reason: String) {
        self.running = false;
        let Some(l) = self.loaded.as_mut() else { return };
        l.finished = true;
        let text = Reply::Finished { tick: l.sim.tick(), reason }.to_text();
        for c in self.conns.values() {
            c.outbox.push_reply(text.clone());
        }
    }

    fn fan_out(&mut self, rec: &TraceRecord) {
        let Some(l) = self.loaded.as_ref() else { return };
        let mut plain: Option<String> = None;
        let mut with_world: Option<String> = None;
        for c in self.conns.values_mut() {
            let Some(s) = &mut c.sub else { continue };
            if rec.tick % s.decimation != 0 {
                continue;
            }
            let text = if s.sent % s.world_every == 0 {
                with_world
                    .get_or_insert_with(|| {
                        Reply::Snapshot { record: Box::new(rec.clone()), world: Some(Box::new(l.sim.world().clone())) }
                            .to_text()
                    })
                    .clone()
            } else {
                plain.get_or_insert_with(|| Reply::Snapshot { record: Box::new(rec.clone()), world: None }.to_text()).clone()
            };
            s.sent += 1;
            c.outbox.push_snapshot(text);
        }
    }
}

/// A bound, not yet running service.
pub struct Server {
    listener: TcpListener,
    initial: Option<Scenario>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, initial: Option<Scenario>) -> io::Result<Self> {
        Ok(Server { listener: TcpListener::bind(addr)?, initial })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until the process exits.
    pub fn run(self) -> io::Result<()> {
        let (tx, rx) = mpsc::channel();
        let control = Control::new(self.initial);
        thread::Builder::new().name("tr-sim".into()).spawn(move || control.run(rx))?;
        let mut next_id = 0u64;
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    warn!("accept failed: {e}");
                    continue;
                }
            };
            next_id += 1;
            let (id, tx) = (next_id, tx.clone());
            thread::Builder::new().name(format!("tr-conn-{id}")).spawn(move || {
                if let Err(e) = connection(stream, id, &tx) {
                    debug!("client {id}: {e}");
                }
                let _ = tx.send(Command::Disconnect(id));
            })?;
        }
        Ok(())
    }

    /// Runs the service on background threads and returns its address.
    pub fn spawn(self) -> io::Result<SocketAddr> {
        let addr = self.local_addr()?;
        thread::Builder::new().name("tr-accept".into()).spawn(move || {
            if let Err(e) = self.run() {
                warn!("service stopped: {e}");
            }
        })?;
        Ok(addr)
    }
}

fn connection(stream: TcpStream, id: u64, tx: &Sender<Command>) -> Result<(), tungstenite::Error> {
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::ConnectionClosed,
    })?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    let outbox = Arc::new(Outbox::new(OUTBOX_SNAPSHOTS));
    if tx.send(Command::Connect(id, outbox.clone())).is_err() {
        return Ok(());
    }
    loop {
        match ws.read() {
            Ok(Message::Text(t)) => {
                if tx.send(Command::Text(id, t.to_string())).is_err() {
                    return Ok(());
                }
            }
            Ok(Message::Binary(_)) => {
                outbox.push_reply(
                    Reply::Error { id: Value::Null, reason: "binary messages are not supported".into() }.to_text(),
                );
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e),
        }
        for text in outbox.drain() {
            ws.send(Message::text(text))?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outbox_drops_oldest_snapshots_only() {
        let o = Outbox::new(2);
        o.push_snapshot("s1".into());
        o.push_reply("r1".into());
        o.push_snapshot("s2".into());
        o.push_snapshot("s3".into());
        assert_eq!(o.drain(), ["r1", "s2", "s3"]);
        assert_eq!(o.dropped(), 1);
        o.push_snapshot("s4".into());
        assert_eq!(o.drain(), ["s4"]);
    }
}
