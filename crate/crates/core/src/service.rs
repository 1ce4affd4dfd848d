//! Live session server: one simulated robot, one steering client.
//!
//! The simulation runs on a fixed-rate timer. Network readers only drop the
//! latest input into an [`InputMailbox`]; the loop reads that snapshot once per
//! tick (zero-order hold) and publishes state through a watch channel, so a
//! slow or vanished client can never stall or perturb the simulation.

use std::future::Future;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use thiserror::Error;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, watch};
use tokio::time::MissedTickBehavior;
use tokio_tungstenite::tungstenite::Message as WsMessage;

use crate::batch::{save_log, BatchError};
use crate::environment::EnvironmentSpec;
use crate::operators::OperatorPolicy;
use crate::scaling::JoystickInput;
use crate::session::{Session, SessionConfig, SessionError};
use crate::trial::TrialPhase;
use crate::wire::{ControlMsg, Envelope, ErrorCode, ErrorMsg, Message, SceneMsg, SeqCheck, StateMsg};

/// Ticks without a fresh input before a human session's input decays to zero.
pub const DEAD_MAN_TICKS: u64 = 50;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("tick rate {tick} Hz is not a positive multiple of broadcast rate {broadcast} Hz")]
    Rates { tick: u32, broadcast: u32 },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Log(#[from] BatchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub session: SessionConfig,
    /// Wall-clock ticks per second. The simulated step stays `session.sim.dt`.
    pub tick_rate: u32,
    pub broadcast_rate: u32,
    /// Finished (and abandoned) trials are written here.
    pub log_dir: Option<PathBuf>,
    /// Scripted driver; `None` means a human over the wire.
    pub operator: Option<OperatorPolicy>,
}

impl ServeConfig {
    pub fn new(session: SessionConfig) -> Self {
        ServeConfig { session, tick_rate: 100, broadcast_rate: 25, log_dir: None, operator: None }
    }

    pub fn validate(&self) -> Result<(), ServeError> {
        let (tick, broadcast) = (self.tick_rate, self.broadcast_rate);
        if tick == 0 || broadcast == 0 || tick % broadcast != 0 {
            return Err(ServeError::Rates { tick, broadcast });
        }
        Ok(())
    }
}

/// Latest-wins slot for the operator's input.
#[derive(Debug, Default)]
pub struct InputMailbox {
    slot: Mutex<Snapshot>,
}

/// What the sim loop sees of the mailbox on one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Snapshot {
    pub input: JoystickInput,
    /// Bumped on every post; unchanged means nothing new arrived.
    pub version: u64,
}

impl InputMailbox {
    pub fn post(&self, input: JoystickInput) {
        let mut s = self.slot.lock().unwrap_or_else(|e| e.into_inner());
        s.version += 1;
        s.input = input;
    }

    /// Neutral input, e.g. after the client disconnects.
    pub fn clear(&self) {
        self.post(JoystickInput::NEUTRAL);
    }

    pub fn snapshot(&self) -> Snapshot {
        *self.slot.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// The sim loop's state, independent of any network or timer.
pub struct LiveLoop {
    session: Session,
    operator: Option<OperatorPolicy>,
    log_dir: Option<PathBuf>,
    seen_version: u64,
    stale_ticks: u64,
    saved: bool,
    ticks: u64,
    written: Vec<PathBuf>,
}

impl LiveLoop {
    pub fn new(config: &ServeConfig) -> Result<Self, ServeError> {
        Ok(LiveLoop {
            session: Session::new(config.session.clone())?,
            operator: config.operator.clone(),
            log_dir: config.log_dir.clone(),
            seen_version: 0,
            stale_ticks: 0,
            saved: false,
            ticks: 0,
            written: Vec::new(),
        })
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn logs_written(&self) -> &[PathBuf] {
        &self.written
    }

    fn operator_name(&self) -> &'static str {
        self.operator.as_ref().map_or("human", |o| o.kind().as_str())
    }

    /// Input actually used for a tick given the mailbox snapshot.
    fn effective_input(&mut self, snap: Snapshot) -> JoystickInput {
        if let Some(op) = &mut self.operator {
            return op.next_input(self.session.state(), self.session.trial(), &self.session.config().env);
        }
        if snap.version != self.seen_version {
            self.seen_version = snap.version;
            self.stale_ticks = 0;
        } else {
            self.stale_ticks += 1;
        }
        if snap.version == 0 || self.stale_ticks >= DEAD_MAN_TICKS {
            JoystickInput::NEUTRAL
        } else {
            snap.input
        }
    }

    /// One simulation tick. Returns the log path if this tick completed the trial.
    pub fn tick(&mut self, snap: Snapshot) -> Result<Option<PathBuf>, ServeError> {
        let input = self.effective_input(snap);
        self.session.tick(input)?;
        self.ticks += 1;
        if self.session.trial().is_complete() && !self.saved {
            return self.save();
        }
        Ok(None)
    }

    fn save(&mut self) -> Result<Option<PathBuf>, ServeError> {
        self.saved = true;
        let Some(dir) = &self.log_dir else { return Ok(None) };
        std::fs::create_dir_all(dir)?;
        let c = self.session.config();
        let path = free_log_path(dir, c.env.name(), c.method.as_str());
        save_log(&self.session.trial_log(self.operator_name()), &path)?;
        self.written.push(path.clone());
        Ok(Some(path))
    }

    /// Writes the trial in progress, if it started and was not yet saved.
    pub fn flush(&mut self) -> Result<Option<PathBuf>, ServeError> {
        if self.saved || self.session.trial().phase == TrialPhase::AwaitingFirstInput {
            return Ok(None);
        }
        self.save()
    }

    fn restart(&mut self) {
        self.session.reset();
        self.saved = false;
        if let Some(op @ OperatorPolicy::Waypoint(_)) = &mut self.operator {
            *op = OperatorPolicy::waypoint();
        }
    }

    pub fn scene(&self) -> SceneMsg {
        let c = self.session.config();
        SceneMsg::new(&c.env, c.method, c.sim.robot_radius, c.sim.dt)
    }

    pub fn state(&self) -> Option<StateMsg> {
        StateMsg::from_session(&self.session, self.operator_name())
    }

    /// Applies a control request. `Ok(true)` means the scene changed.
    pub fn control(&mut self, msg: &ControlMsg) -> Result<bool, (ErrorCode, String)> {
        let running = self.session.trial().phase == TrialPhase::Running;
        let refuse = || (ErrorCode::Rejected, "a trial is running; send reset first".to_string());
        match msg {
            ControlMsg::Start => {
                if running {
                    return Err(refuse());
                }
                self.restart();
                Ok(false)
            }
            ControlMsg::Reset => {
                self.flush().map_err(|e| (ErrorCode::Rejected, e.to_string()))?;
                self.restart();
                Ok(false)
            }
            ControlMsg::SetMethod { method } => {
                if running {
                    return Err(refuse());
                }
                let env = self.session.config().env.clone();
                self.session.reconfigure(*method, env).map_err(|e| (ErrorCode::Invalid, e.to_string()))?;
                self.restart();
                Ok(true)
            }
            ControlMsg::SetEnv { env } => {
                if running {
                    return Err(refuse());
                }
                let spec = EnvironmentSpec::resolve(env).map_err(|e| (ErrorCode::Invalid, e.to_string()))?;
                let method = self.session.config().method;
                self.session.reconfigure(method, spec).map_err(|e| (ErrorCode::Invalid, e.to_string()))?;
                self.restart();
                Ok(true)
            }
        }
    }
}

/// `<env>-<method>-NNN.jsonl`, the first number not already taken.
fn free_log_path(dir: &Path, env: &str, method: &str) -> PathBuf {
    (1..)
        .map(|n| dir.join(format!("{env}-{method}-{n:03}.jsonl")))
        .find(|p| !p.exists())
        .expect("unbounded range")
}

/// Requests from connection tasks to the sim loop.
enum ToLoop {
    Hello { out: mpsc::UnboundedSender<Message> },
    Control { seq: u64, msg: ControlMsg, out: mpsc::UnboundedSender<Message> },
}

#[derive(Debug, Clone, Default)]
pub struct ServeReport {
    pub ticks: u64,
    pub logs_written: Vec<PathBuf>,
}

/// Runs the session until `shutdown` resolves, then writes any trial in progress.
pub async fn serve(
    config: ServeConfig,
    listener: TcpListener,
    shutdown: impl Future<Output = ()>,
) -> Result<ServeReport, ServeError> {
    config.validate()?;
    let mut live = LiveLoop::new(&config)?;
    let mailbox = Arc::new(InputMailbox::default());
    let busy = Arc::new(AtomicBool::new(false));
    let (state_tx, _) = watch::channel::<Option<Arc<StateMsg>>>(None);
    let (to_loop, mut requests) = mpsc::unbounded_channel::<ToLoop>();
    let scripted = config.operator.is_some();

    let mut timer = tokio::time::interval(Duration::from_secs_f64(1.0 / f64::from(config.tick_rate)));
    timer.set_missed_tick_behavior(MissedTickBehavior::Burst);
    let every = u64::from(config.tick_rate / config.broadcast_rate);
    tokio::pin!(shutdown);

    loop {
        tokio::select! {
            biased;
            _ = &mut shutdown => break,
            Some(req) = requests.recv() => match req {
                ToLoop::Hello { out } => {
                    let _ = out.send(Message::Scene(Box::new(live.scene())));
                    if let Some(s) = live.state() {
                        let _ = out.send(Message::State(Box::new(s)));
                    }
                }
                ToLoop::Control { seq, msg, out } => {
                    let reply = match live.control(&msg) {
                        Ok(scene_changed) => {
                            if scene_changed {
                                let _ = out.send(Message::Scene(Box::new(live.scene())));
                            }
                            Message::Ack { of_seq: seq }
                        }
                        Err((code, message)) => Message::Error(ErrorMsg { code, message, of_seq: Some(seq) }),
                    };
                    let _ = out.send(reply);
                }
            },
            accepted = listener.accept() => {
                if let Ok((stream, _)) = accepted {
                    let conn = Connection {
                        mailbox: mailbox.clone(),
                        busy: busy.clone(),
                        to_loop: to_loop.clone(),
                        states: state_tx.subscribe(),
                        scripted,
                    };
                    tokio::spawn(conn.run(stream));
                }
            }
            _ = timer.tick() => {
                live.tick(mailbox.snapshot())?;
                if live.ticks % every == 0 {
                    state_tx.send_replace(live.state().map(Arc::new));
                }
            }
        }
    }
    live.flush()?;
    Ok(ServeReport { ticks: live.ticks, logs_written: live.written })
}

struct Connection {
    mailbox: Arc<InputMailbox>,
    busy: Arc<AtomicBool>,
    to_loop: mpsc::UnboundedSender<ToLoop>,
    states: watch::Receiver<Option<Arc<StateMsg>>>,
    scripted: bool,
}

impl Connection {
    async fn run(self, stream: TcpStream) {
        let Ok(mut ws) = tokio_tungstenite::accept_async(stream).await else { return };
        if self.busy.swap(true, Ordering::SeqCst) {
            let busy = ErrorMsg { code: ErrorCode::Busy, message: "another client is steering this session".into(), of_seq: None };
            let _ = ws.send(WsMessage::text(Envelope::new(0, Message::Error(busy)).encode())).await;
            let _ = ws.close(None).await;
            return;
        }
        let _ = self.session(&mut ws).await;
        self.mailbox.clear();
        self.busy.store(false, Ordering::SeqCst);
    }

    async fn session(
        &self,
        ws: &mut tokio_tungstenite::WebSocketStream<TcpStream>,
    ) -> Result<(), tokio_tungstenite::tungstenite::Error> {
        let (out_tx, mut out_rx) = mpsc::unbounded_channel();
        let mut states = self.states.clone();
        states.mark_unchanged();
        let _ = self.to_loop.send(ToLoop::Hello { out: out_tx.clone() });
        let mut seq_out = 0u64;
        let mut seq_in = SeqCheck::default();
        let mut next = |body: Message| {
            seq_out += 1;
            WsMessage::text(Envelope::new(seq_out, body).encode())
        };

        loop {
            tokio::select! {
                Some(body) = out_rx.recv() => ws.send(next(body)).await?,
                changed = states.changed() => {
                    if changed.is_err() {
                        break;
                    }
                    let latest = states.borrow_and_update().clone();
                    if let Some(s) = latest {
                        ws.send(next(Message::State(Box::new((*s).clone())))).await?;
                    }
                }
                frame = ws.next() => {
                    let text = match frame {
                        None | Some(Ok(WsMessage::Close(_))) => break,
                        Some(Err(e)) => return Err(e),
                        Some(Ok(WsMessage::Text(t))) => t,
                        Some(Ok(WsMessage::Binary(_))) => {
                            self.violation(ws, next(protocol_error("binary frames are not part of the protocol", None))).await;
                            break;
                        }
                        Some(Ok(_)) => continue,
                    };
                    let env = match Envelope::decode(text.as_str()) {
                        Ok(env) => env,
                        Err(e) => {
                            self.violation(ws, next(protocol_error(&e.to_string(), None))).await;
                            break;
                        }
                    };
                    if !seq_in.accept(env.seq) {
                        self.violation(ws, next(protocol_error("sequence number did not increase", Some(env.seq)))).await;
                        break;
                    }
                    match env.body {
                        Message::Input(_) if self.scripted => {
                            let e = ErrorMsg { code: ErrorCode::Rejected, message: "session is driven by a scripted operator".into(), of_seq: Some(env.seq) };
                            ws.send(next(Message::Error(e))).await?;
                        }
                        Message::Input(m) => match JoystickInput::new(m.p_i, m.button) {
                            Ok(input) => self.mailbox.post(input),
                            Err(e) => {
                                let e = ErrorMsg { code: ErrorCode::Invalid, message: e.to_string(), of_seq: Some(env.seq) };
                                ws.send(next(Message::Error(e))).await?;
                            }
                        },
                        Message::Control(msg) => {
                            let _ = self.to_loop.send(ToLoop::Control { seq: env.seq, msg, out: out_tx.clone() });
                        }
                        _ => {
                            self.violation(ws, next(protocol_error("message type is server-to-client only", Some(env.seq)))).await;
                            break;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    async fn violation(&self, ws: &mut tokio_tungstenite::WebSocketStream<TcpStream>, msg: WsMessage) {
        let _ = ws.send(msg).await;
        let _ = ws.close(None).await;
    }
}

fn protocol_error(message: &str, of_seq: Option<u64>) -> Message {
    Message::Error(ErrorMsg { code: ErrorCode::Protocol, message: message.to_string(), of_seq })
}
