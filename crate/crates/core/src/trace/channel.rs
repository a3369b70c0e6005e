use std::sync::mpsc::{self, Receiver, RecvError, SyncSender, TrySendError};

use super::TraceRecord;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChannelError {
    #[error("channel capacity must be at least 1")]
    ZeroCapacity,
    #[error("consumer hung up")]
    Disconnected,
    #[error("channel is full")]
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StreamError {
    #[error("trace stream closed before an exit record")]
    Truncated,
}

/// Producer side. Dropping or [`close`](TraceSender::close)-ing it ends
/// the stream.
pub struct TraceSender {
    tx: SyncSender<TraceRecord>,
}

impl TraceSender {
    /// Blocks while the channel is full.
    pub fn send(&self, record: TraceRecord) -> Result<(), ChannelError> {
        self.tx.send(record).map_err(|_| ChannelError::Disconnected)
    }

    pub fn try_send(&self, record: TraceRecord) -> Result<(), ChannelError> {
        self.tx.try_send(record).map_err(|e| match e {
            TrySendError::Full(_) => ChannelError::Full,
            TrySendError::Disconnected(_) => ChannelError::Disconnected,
        })
    }

    pub fn close(self) {}
}

/// Consumer side: yields records in order, ends cleanly after the
/// exit-flagged record, and reports [`StreamError::Truncated`] once if
/// the producer goes away first.
pub struct TraceReceiver {
    rx: Receiver<TraceRecord>,
    done: bool,
}

impl Iterator for TraceReceiver {
    type Item = Result<TraceRecord, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.rx.recv() {
            Ok(r) => {
                if r.is_exit() {
                    self.done = true;
                }
                Some(Ok(r))
            }
            Err(RecvError) => {
                self.done = true;
                Some(Err(StreamError::Truncated))
            }
        }
    }
}

/// Bounded single-producer single-consumer FIFO of trace records.
pub fn channel(capacity: usize) -> Result<(TraceSender, TraceReceiver), ChannelError> {
    if capacity == 0 {
        return Err(ChannelError::ZeroCapacity);
    }
    let (tx, rx) = mpsc::sync_channel(capacity);
    Ok((TraceSender { tx }, TraceReceiver { rx, done: false }))
}
