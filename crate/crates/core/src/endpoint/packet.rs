use crate::time::SimDelta;

/// One MSS-sized data segment on a subflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPacket {
    /// Connection-level sequence, in segments.
    pub data_seq: u64,
    pub subflow_seq: u64,
    pub path_id: usize,
    /// Bytes on the wire.
    pub size: u32,
    /// Sender clock at this transmission; retransmissions are restamped.
    pub ts_sent: SimDelta,
    pub is_retransmission: bool,
}

/// Per-packet acknowledgment, returned on the path the data arrived on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AckPacket {
    pub path_id: usize,
    /// Next subflow sequence the receiver expects on this path.
    pub cum_subflow_ack: u64,
    /// Subflow sequence of the packet that triggered this ACK.
    pub echo_subflow_seq: u64,
    /// Next connection-level sequence the receiver expects.
    pub cum_data_ack: u64,
    /// Inclusive `(lo, hi)` runs of buffered data sequences, ascending.
    pub sack_ranges: Vec<(u64, u64)>,
    /// `ts_sent` copied from the triggering packet (sender clock).
    pub echo_ts_sent: SimDelta,
    /// Arrival time of the triggering packet (receiver clock).
    pub ts_received: SimDelta,
}
