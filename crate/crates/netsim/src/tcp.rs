use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TcpPhase {
    SlowStart,
    Avoidance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcpEvent {
    Ack,
    Loss,
    Timeout,
}

/// Congestion state of one cross-traffic flow. `cwnd` and `ssthresh` are in
/// packets; `in_flight` and `rtt_estimate` are bookkeeping maintained by the
/// flow driver, not touched by the window update itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcpFlowState {
    pub cwnd: f64,
    pub ssthresh: f64,
    pub in_flight: u64,
    pub phase: TcpPhase,
    pub rtt_estimate: f64,
}

impl TcpFlowState {
    pub fn new(ssthresh: f64) -> Self {
        TcpFlowState {
            cwnd: 1.0,
            ssthresh,
            in_flight: 0,
            phase: TcpPhase::SlowStart,
            rtt_estimate: 0.0,
        }
    }
}

/// AIMD window update with slow start. ACKs grow the window (exponentially in
/// slow start, additively afterwards), loss halves it, timeout collapses it
/// to one packet and restarts slow start. The window never drops below one.
pub fn step_tcp_flow(state: &TcpFlowState, event: TcpEvent) -> TcpFlowState {
    let mut next = *state;
    match event {
        TcpEvent::Ack => match state.phase {
            TcpPhase::SlowStart => {
                next.cwnd = state.cwnd + 1.0;
                if next.cwnd >= next.ssthresh {
                    next.phase = TcpPhase::Avoidance;
                }
            }
            TcpPhase::Avoidance => {
                next.cwnd = state.cwnd + 1.0 / state.cwnd;
            }
        },
        TcpEvent::Loss => {
            next.ssthresh = (state.cwnd / 2.0).max(2.0);
            next.cwnd = next.ssthresh;
            next.phase = TcpPhase::Avoidance;
        }
        TcpEvent::Timeout => {
            next.ssthresh = (state.cwnd / 2.0).max(2.0);
            next.cwnd = 1.0;
            next.phase = TcpPhase::SlowStart;
        }
    }
    debug_assert!(next.cwnd >= 1.0);
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(cwnd: f64, phase: TcpPhase) -> TcpFlowState {
        TcpFlowState {
            cwnd,
            ssthresh: 64.0,
            in_flight: 0,
            phase,
            rtt_estimate: 0.1,
        }
    }

    #[test]
    fn slow_start_ack_adds_one() {
        let s = step_tcp_flow(&state(1.0, TcpPhase::SlowStart), TcpEvent::Ack);
        assert_eq!(s.cwnd, 2.0);
        assert_eq!(s.phase, TcpPhase::SlowStart);
    }

    #[test]
    fn avoidance_ack_adds_reciprocal() {
        let s = step_tcp_flow(&state(10.0, TcpPhase::Avoidance), TcpEvent::Ack);
        assert!((s.cwnd - 10.1).abs() < 1e-12);
    }

    #[test]
    fn loss_halves_window_into_avoidance() {
        for phase in [TcpPhase::SlowStart, TcpPhase::Avoidance] {
            let s = step_tcp_flow(&state(10.0, phase), TcpEvent::Loss);
            assert_eq!(s.cwnd, 5.0);
            assert_eq!(s.ssthresh, 5.0);
            assert_eq!(s.phase, TcpPhase::Avoidance);
        }
    }

    #[test]
    fn timeout_collapses_to_one() {
        let s = step_tcp_flow(&state(10.0, TcpPhase::Avoidance), TcpEvent::Timeout);
        assert_eq!(s.cwnd, 1.0);
        assert_eq!(s.ssthresh, 5.0);
        assert_eq!(s.phase, TcpPhase::SlowStart);
    }

    #[test]
    fn loss_floor_is_two_packets() {
        let s = step_tcp_flow(&state(1.5, TcpPhase::SlowStart), TcpEvent::Loss);
        assert_eq!(s.cwnd, 2.0);
        assert_eq!(s.ssthresh, 2.0);
    }
}
