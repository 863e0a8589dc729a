use std::io::{BufRead, BufReader, Read, Write};

use crate::{PacketRecord, TraceDataset, TraceError, TraceMeta, TraceRun};

/// Exact header row of the canonical trace CSV.
pub const TRACE_HEADER: &str =
    "sim_id,packet_seq,message_id,sender_id,receiver_id,send_time,size,delay,message_size,is_last_in_message";

/// Writes the canonical CSV trace: header first, one row per packet, runs
/// concatenated in sim_id order. Floats are printed with 9 decimal digits,
/// booleans as 0/1. Returns the number of bytes written.
pub fn write_trace<W: Write>(dataset: &TraceDataset, sink: &mut W) -> Result<u64, TraceError> {
    dataset.validate()?;
    let mut written: u64 = 0;
    let mut put = |sink: &mut W, s: &str| -> Result<(), TraceError> {
        sink.write_all(s.as_bytes()).map_err(|source| TraceError::Io {
            offset: written,
            source,
        })?;
        written += s.len() as u64;
        Ok(())
    };
    put(sink, TRACE_HEADER)?;
    put(sink, "\n")?;
    for run in &dataset.runs {
        for r in &run.records {
            let row = format!(
                "{},{},{},{},{},{:.9},{},{:.9},{},{}\n",
                r.sim_id,
                r.packet_seq,
                r.message_id,
                r.sender_id,
                r.receiver_id,
                r.send_time,
                r.size,
                r.delay,
                r.message_size,
                u8::from(r.is_last_in_message),
            );
            put(sink, &row)?;
        }
    }
    Ok(written)
}

/// Parses the canonical CSV trace and validates all dataset invariants.
pub fn read_trace<R: Read>(source: R) -> Result<TraceDataset, TraceError> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((_, Err(source))) => return Err(TraceError::Io { offset: 0, source }),
        None => return Err(TraceError::EmptyDataset),
    };
    if header.trim_end_matches('\r') != TRACE_HEADER {
        return Err(TraceError::Parse {
            line: 1,
            msg: format!("unexpected header: {header:?}"),
        });
    }

    let mut runs: Vec<TraceRun> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|source| TraceError::Io {
            offset: 0,
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let rec = parse_row(line, line_no)?;
        match runs.last_mut() {
            Some(run) if run.sim_id == rec.sim_id => run.records.push(rec),
            _ => runs.push(TraceRun {
                sim_id: rec.sim_id,
                records: vec![rec],
            }),
        }
    }
    if runs.is_empty() {
        return Err(TraceError::EmptyDataset);
    }
    let ds = TraceDataset {
        runs,
        meta: TraceMeta::default(),
    };
    ds.validate()?;
    Ok(ds)
}

fn parse_row(line: &str, line_no: usize) -> Result<PacketRecord, TraceError> {
    let mut fields = line.split(',');
    let mut next = |name: &str| -> Result<&str, TraceError> {
        fields.next().ok_or_else(|| TraceError::Parse {
            line: line_no,
            msg: format!("missing field {name}"),
        })
    };
    fn num<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T, TraceError> {
        s.parse().map_err(|_| TraceError::Parse {
            line,
            msg: format!("invalid {name}: {s:?}"),
        })
    }
    let rec = PacketRecord {
        sim_id: num(next("sim_id")?, "sim_id", line_no)?,
        packet_seq: num(next("packet_seq")?, "packet_seq", line_no)?,
        message_id: num(next("message_id")?, "message_id", line_no)?,
        sender_id: num(next("sender_id")?, "sender_id", line_no)?,
        receiver_id: num(next("receiver_id")?, "receiver_id", line_no)?,
        send_time: num(next("send_time")?, "send_time", line_no)?,
        size: num(next("size")?, "size", line_no)?,
        delay: num(next("delay")?, "delay", line_no)?,
        message_size: num(next("message_size")?, "message_size", line_no)?,
        is_last_in_message: match next("is_last_in_message")? {
            "0" => false,
            "1" => true,
            other => {
                return Err(TraceError::Parse {
                    line: line_no,
                    msg: format!("invalid is_last_in_message: {other:?}"),
                })
            }
        },
    };
    if fields.next().is_some() {
        return Err(TraceError::Parse {
            line: line_no,
            msg: "too many fields".to_string(),
        });
    }
    Ok(rec)
}

/// Conventional sidecar path carrying a dataset's [`TraceMeta`] as JSON.
pub fn meta_sidecar_path(trace_path: &std::path::Path) -> std::path::PathBuf {
    let mut os = trace_path.as_os_str().to_owned();
    os.push(".meta.json");
    std::path::PathBuf::from(os)
}
