//! Coordinator/agent wire protocol: JSON messages behind a 4-byte
//! big-endian length prefix, over one persistent TCP connection per agent.

use chrono::{DateTime, Utc};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::io::{AsyncRead, AsyncWrite};
use tokio_util::codec::{Framed, LengthDelimitedCodec};

use super::{FetchResult, PersonaProfile, VantageError};
use crate::extract::PriceSelector;

/// Upper bound on one frame; a RESULT carries a whole page.
pub const MAX_FRAME: usize = 32 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Message {
    Register {
        id: String,
        country: String,
        city: String,
    },
    Welcome {
        accepted: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    Prepare {
        slot: String,
        uri: String,
        selector: PriceSelector,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<PersonaProfile>,
    },
    Ready {
        slot: String,
    },
    /// Start fetching `start_in_ms` after receipt; `start_at` is the same
    /// instant on the coordinator's clock, for logs.
    Go {
        slot: String,
        start_at: DateTime<Utc>,
        start_in_ms: u64,
    },
    Abort {
        slot: String,
    },
    Result {
        slot: String,
        result: FetchResult,
    },
}

pub type Connection<T> = Framed<T, LengthDelimitedCodec>;

pub fn framed<T: AsyncRead + AsyncWrite>(io: T) -> Connection<T> {
    let codec = LengthDelimitedCodec::builder().max_frame_length(MAX_FRAME).new_codec();
    Framed::new(io, codec)
}

pub fn encode(msg: &Message) -> Result<bytes::Bytes, VantageError> {
    serde_json::to_vec(msg)
        .map(Into::into)
        .map_err(|e| VantageError::Protocol(e.to_string()))
}

pub fn decode(frame: &[u8]) -> Result<Message, VantageError> {
    serde_json::from_slice(frame).map_err(|e| VantageError::Protocol(format!("bad message: {e}")))
}

pub async fn send<T: AsyncRead + AsyncWrite + Unpin>(conn: &mut Connection<T>, msg: &Message) -> Result<(), VantageError> {
    conn.send(encode(msg)?).await.map_err(|e| VantageError::Protocol(e.to_string()))
}

/// Next message, or `None` once the peer closed the connection.
pub async fn recv<T: AsyncRead + AsyncWrite + Unpin>(conn: &mut Connection<T>) -> Result<Option<Message>, VantageError> {
    match conn.next().await {
        None => Ok(None),
        Some(Err(e)) => Err(VantageError::Protocol(e.to_string())),
        Some(Ok(frame)) => decode(&frame).map(Some),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn frames_round_trip() {
        let (a, b) = tokio::io::duplex(1 << 16);
        let (mut a, mut b) = (framed(a), framed(b));
        let msgs = vec![
            Message::Register {
                id: "fi-tampere".into(),
                country: "FI".into(),
                city: "Tampere".into(),
            },
            Message::Prepare {
                slot: "c1#0".into(),
                uri: "http://x.test/p/1".into(),
                selector: PriceSelector::dom_path("body/span").unwrap(),
                profile: Some(PersonaProfile::named("budget").header("Accept-Language", "fi-FI")),
            },
            Message::Go {
                slot: "c1#0".into(),
                start_at: DateTime::UNIX_EPOCH,
                start_in_ms: 250,
            },
        ];
        for m in &msgs {
            send(&mut a, m).await.unwrap();
        }
        drop(a);
        for m in &msgs {
            assert_eq!(recv(&mut b).await.unwrap().as_ref(), Some(m));
        }
        assert_eq!(recv(&mut b).await.unwrap(), None);
    }

    #[test]
    fn type_tags() {
        let s = String::from_utf8(encode(&Message::Ready { slot: "s".into() }).unwrap().to_vec()).unwrap();
        assert_eq!(s, r#"{"type":"READY","slot":"s"}"#);
        assert!(decode(br#"{"type":"NOPE"}"#).is_err());
    }
}
