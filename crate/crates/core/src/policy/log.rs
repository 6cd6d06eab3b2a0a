use std::fmt::Write;

use crate::model::ReplicationSchedule;

use super::{AnnotatedRun, ServeMode};

/// `COPY server start end kind` and `XFER time src dst purpose` lines, servers one-based.
pub fn schedule_event_log(schedule: &ReplicationSchedule) -> String {
    let mut out = String::new();
    for c in &schedule.copies {
        writeln!(
            out,
            "COPY {} {} {} {}",
            c.server.ordinal(),
            c.start,
            c.end,
            c.kind
        )
        .unwrap();
    }
    for x in &schedule.transfers {
        writeln!(
            out,
            "XFER {} {} {} {}",
            x.time,
            x.src.ordinal(),
            x.dst.ordinal(),
            x.purpose
        )
        .unwrap();
    }
    out
}

/// The schedule lines followed by `SERVE j time server mode` per request.
pub fn run_event_log(run: &AnnotatedRun) -> String {
    let mut out = schedule_event_log(&run.schedule);
    for s in &run.serves {
        let mode = match s.mode {
            ServeMode::Local => "local",
            ServeMode::Transfer { .. } => "transfer",
        };
        writeln!(out, "SERVE {} {} {} {}", s.request, s.time, s.server.ordinal(), mode).unwrap();
    }
    out
}
