//! Newline-delimited JSON wire protocol for external model servers.
//!
//! One JSON object per line, UTF-8. Requests carry a strictly increasing
//! `id` and a `cmd`; the server answers each request with one response
//! echoing the `id` before the next request is sent.
//!
//! ```text
//! → {"id":1,"cmd":"generate","inputs":["A : P : B"],"max_len":256,"min_len":4}
//! ← {"id":1,"ok":true,"outputs":["A p B."]}
//! → {"id":2,"cmd":"train","pairs":[["A : P : B","A p B."]]}
//! ← {"id":2,"ok":true,"pairs":1,"loss":0.42}
//! → {"id":3,"cmd":"save","tag":"d2t-epoch1"}
//! ← {"id":3,"ok":true,"tag":"d2t-epoch1"}
//! → {"id":4,"cmd":"load","tag":"missing"}
//! ← {"id":4,"ok":false,"error":"unknown tag: missing"}
//! → {"id":5,"cmd":"shutdown"}
//! ← {"id":5,"ok":true}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Generate,
    Train,
    Save,
    Load,
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub cmd: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_len: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl Request {
    pub fn new(id: u64, cmd: Command) -> Self {
        Request {
            id,
            cmd,
            inputs: None,
            max_len: None,
            min_len: None,
            pairs: None,
            tag: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
    /// Number of training pairs received, echoed by `train`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    pub fn ok(id: u64) -> Self {
        Response {
            id,
            ok: true,
            outputs: None,
            pairs: None,
            loss: None,
            tag: None,
            error: None,
        }
    }

    pub fn error(id: u64, message: impl Into<String>) -> Self {
        Response {
            ok: false,
            error: Some(message.into()),
            ..Response::ok(id)
        }
    }
}

/// Writes one message as a single line.
pub fn write_message<W: Write + ?Sized, T: Serialize>(writer: &mut W, message: &T) -> std::io::Result<()> {
    let mut line = serde_json::to_vec(message)?;
    line.push(b'\n');
    writer.write_all(&line)?;
    writer.flush()
}

type Reader = Box<dyn BufRead + Send>;
type Writer = Box<dyn Write + Send>;

/// Client side of one connection. Connects lazily on first use and keeps
/// exactly one request in flight.
pub struct ProtocolClient {
    endpoint: String,
    conn: Option<(Reader, Writer)>,
    next_id: u64,
}

impl std::fmt::Debug for ProtocolClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProtocolClient")
            .field("endpoint", &self.endpoint)
            .field("connected", &self.conn.is_some())
            .field("next_id", &self.next_id)
            .finish()
    }
}

impl ProtocolClient {
    /// `endpoint` is `host:port`, optionally prefixed with `tcp://`.
    pub fn new(endpoint: impl Into<String>) -> Self {
        ProtocolClient {
            endpoint: endpoint.into(),
            conn: None,
            next_id: 1,
        }
    }

    /// A client over already-open streams, e.g. a child process's pipes.
    pub fn from_streams(
        name: impl Into<String>,
        reader: impl BufRead + Send + 'static,
        writer: impl Write + Send + 'static,
    ) -> Self {
        ProtocolClient {
            endpoint: name.into(),
            conn: Some((Box::new(reader), Box::new(writer))),
            next_id: 1,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn connect(&mut self) -> Result<&mut (Reader, Writer), GatewayError> {
        if self.conn.is_none() {
            let addr = self.endpoint.trim_start_matches("tcp://");
            let connect_err = |source: std::io::Error| GatewayError::Connect {
                endpoint: self.endpoint.clone(),
                source,
            };
            let sock = addr
                .to_socket_addrs()
                .map_err(connect_err)?
                .next()
                .ok_or_else(|| connect_err(std::io::Error::new(std::io::ErrorKind::NotFound, "no address")))?;
            let stream = TcpStream::connect_timeout(&sock, Duration::from_secs(10)).map_err(connect_err)?;
            stream.set_nodelay(true).map_err(connect_err)?;
            let reader = BufReader::new(stream.try_clone().map_err(connect_err)?);
            self.conn = Some((Box::new(reader), Box::new(stream)));
        }
        Ok(self.conn.as_mut().expect("connected above"))
    }

    /// Sends one request (its id is assigned here) and waits for the
    /// matching response. A response with `ok: false` becomes
    /// [`GatewayError::Server`].
    pub fn call(&mut self, mut request: Request) -> Result<Response, GatewayError> {
        let id = self.next_id;
        request.id = id;
        let (reader, writer) = self.connect()?;
        write_message(writer, &request).map_err(GatewayError::Io)?;
        let mut line = String::new();
        let n = reader.read_line(&mut line).map_err(GatewayError::Io)?;
        self.next_id += 1;
        if n == 0 {
            self.conn = None;
            return Err(GatewayError::Malformed(
                "connection closed before a response arrived".into(),
            ));
        }
        let response: Response = serde_json::from_str(line.trim_end())
            .map_err(|e| GatewayError::Malformed(format!("{e}: {}", line.trim_end())))?;
        if response.id != id {
            return Err(GatewayError::IdMismatch {
                expected: id,
                got: response.id,
            });
        }
        if !response.ok {
            return Err(GatewayError::Server(
                response
                    .error
                    .unwrap_or_else(|| "server reported failure without a message".into()),
            ));
        }
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_names_on_the_wire() {
        let mut req = Request::new(3, Command::Generate);
        req.inputs = Some(vec!["A : P : B".into()]);
        req.max_len = Some(256);
        req.min_len = Some(4);
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":3,"cmd":"generate","inputs":["A : P : B"],"max_len":256,"min_len":4}"#
        );
        let mut req = Request::new(4, Command::Train);
        req.pairs = Some(vec![("s".into(), "t".into())]);
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":4,"cmd":"train","pairs":[["s","t"]]}"#
        );
        assert_eq!(
            serde_json::to_string(&Response::error(5, "boom")).unwrap(),
            r#"{"id":5,"ok":false,"error":"boom"}"#
        );
        let parsed: Response = serde_json::from_str(r#"{"id":1,"ok":true,"pairs":3,"loss":null}"#).unwrap();
        assert_eq!(parsed.pairs, Some(3));
        assert_eq!(parsed.loss, None);
    }

    #[test]
    fn client_checks_ids_and_errors() {
        let replies = b"{\"id\":1,\"ok\":true,\"outputs\":[\"x\"]}\n{\"id\":7,\"ok\":true}\n{\"id\":3,\"ok\":false,\"error\":\"nope\"}\n";
        let mut client = ProtocolClient::from_streams("mem", &replies[..], std::io::sink());
        let r = client.call(Request::new(0, Command::Generate)).unwrap();
        assert_eq!(r.outputs, Some(vec!["x".to_string()]));
        assert!(matches!(
            client.call(Request::new(0, Command::Save)),
            Err(GatewayError::IdMismatch { expected: 2, got: 7 })
        ));
        assert!(matches!(client.call(Request::new(0, Command::Load)), Err(GatewayError::Server(m)) if m == "nope"));
        assert!(matches!(
            client.call(Request::new(0, Command::Load)),
            Err(GatewayError::Malformed(_))
        ));
    }

    #[test]
    fn garbage_response_is_malformed() {
        let mut client = ProtocolClient::from_streams("mem", &b"not json\n"[..], std::io::sink());
        assert!(matches!(
            client.call(Request::new(0, Command::Generate)),
            Err(GatewayError::Malformed(_))
        ));
    }

    #[test]
    fn unreachable_endpoint() {
        // port 1 on localhost is essentially never listening
        let mut client = ProtocolClient::new("127.0.0.1:1");
        assert!(matches!(
            client.call(Request::new(0, Command::Generate)),
            Err(GatewayError::Connect { .. })
        ));
    }
}
