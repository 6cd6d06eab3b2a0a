use std::fmt;

use crate::model::{Instance, ReplicationSchedule, TIME_EPS};

#[derive(Debug, Clone, PartialEq)]
pub enum StructureViolation {
    /// A transfer at an instant where no request arises.
    TransferOffRequest { time: f64 },
    /// `r_j` follows `r_p` at the same server closely enough that holding
    /// throughout beats any transfer, yet the server lets its copy lapse.
    LapsedCloseSuccessor { j: usize, p: usize },
}

impl fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureViolation::TransferOffRequest { time } => {
                write!(f, "transfer at {time}, which is not a request time")
            }
            StructureViolation::LapsedCloseSuccessor { j, p } => {
                write!(f, "copy lapses between r{p} and r{j} at the same server")
            }
        }
    }
}

/// Checks that transfers only happen at request instants and that the
/// server of every close successor (`rate * gap < lambda`) holds over the
/// whole gap.
pub fn validate_offline_structure(
    instance: &Instance,
    schedule: &ReplicationSchedule,
) -> Vec<StructureViolation> {
    let mut out = Vec::new();
    let times: Vec<f64> = instance.requests().iter().map(|r| r.time).collect();
    for x in &schedule.transfers {
        let k = times.partition_point(|&t| t < x.time - TIME_EPS);
        let hit = times.get(k).is_some_and(|&t| (t - x.time).abs() <= TIME_EPS);
        if !hit {
            out.push(StructureViolation::TransferOffRequest { time: x.time });
        }
    }
    let holdings = schedule.holdings(instance.n());
    for (j, p) in instance.prev_same_server_table().into_iter().enumerate() {
        let Some(p) = p else { continue };
        let r = instance.request(j);
        let t_p = instance.request(p).time;
        if instance.rate(r.server) * (r.time - t_p) >= instance.lambda() - TIME_EPS {
            continue;
        }
        let covered = holdings[r.server.0]
            .iter()
            .any(|&(a, b)| a <= t_p + TIME_EPS && r.time <= b + TIME_EPS);
        if !covered {
            out.push(StructureViolation::LapsedCloseSuccessor { j, p });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CopyInterval, CopyKind, ServerId, Transfer, TransferPurpose};

    fn s(ordinal: usize) -> ServerId {
        ServerId::from_ordinal(ordinal).unwrap()
    }

    #[test]
    fn flags_off_request_transfer_and_lapse() {
        let inst = Instance::new(vec![1.0, 1.0], 1.0, s(1), [(1.0, s(2)), (1.5, s(2))]).unwrap();
        let xfer = |time| Transfer {
            time,
            src: s(1),
            dst: s(2),
            purpose: TransferPurpose::ServeRequest,
        };
        let copies = vec![
            CopyInterval::new(s(1), 0.0, 1.5, CopyKind::Offline),
            CopyInterval::new(s(2), 1.0, 1.0, CopyKind::Offline),
            CopyInterval::new(s(2), 1.5, 1.5, CopyKind::Offline),
        ];
        let good = ReplicationSchedule::new(copies.clone(), vec![xfer(1.0), xfer(1.5)]);
        assert_eq!(
            validate_offline_structure(&inst, &good),
            vec![StructureViolation::LapsedCloseSuccessor { j: 2, p: 1 }]
        );
        let off = ReplicationSchedule::new(
            vec![
                CopyInterval::new(s(1), 0.0, 1.5, CopyKind::Offline),
                CopyInterval::new(s(2), 0.7, 1.5, CopyKind::Offline),
            ],
            vec![xfer(0.7)],
        );
        assert_eq!(
            validate_offline_structure(&inst, &off),
            vec![StructureViolation::TransferOffRequest { time: 0.7 }]
        );
    }
}
