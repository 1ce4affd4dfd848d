//! Serves a session over a WebSocket with a scripted waypoint operator at the
//! controls, so a viewer can watch a trial without a joystick.
//!
//! ```text
//! cargo run --release --example live_session -- [env] [method] [port]
//! ```
//!
//! Connect any WebSocket client to the printed address to receive the scene
//! and state stream. Ctrl-C stops the server and writes the trial log.

use ratescale::operators::OperatorPolicy;
use ratescale::prelude::*;
use ratescale::service::{serve, ServeConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let env = EnvironmentSpec::resolve(&args.next().unwrap_or_else(|| "env1".into()))?;
    let method: Method = args.next().unwrap_or_else(|| "r3".into()).parse()?;
    let port: u16 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8080);

    let mut config = ServeConfig::new(SessionConfig::new(method, env));
    config.operator = Some(OperatorPolicy::waypoint());
    config.log_dir = Some(std::env::temp_dir().join("ratescale-live"));

    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    println!("ws://{}", listener.local_addr()?);
    let report = serve(config, listener, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    println!("{} ticks", report.ticks);
    for p in report.logs_written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
