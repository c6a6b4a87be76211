//! Transport endpoints: subflow congestion control, the shared send buffer,
//! pull-based dispatch, and the receiver's in-order delivery.

mod packet;
mod receiver;
mod send_buffer;
mod sender;
mod subflow;

pub use packet::{AckPacket, DataPacket};
pub use receiver::{DataOutcome, MptcpReceiver, ReceiverState, SubflowReceiver, MAX_SACK_BLOCKS};
pub use send_buffer::SendBuffer;
pub use sender::{MptcpSender, SenderStats, STALE_RTT_MULTIPLE};
pub use subflow::{AckKind, AckOutcome, RecoveryAction, Subflow, SubflowAck, SubflowConfig, SubflowStats};
