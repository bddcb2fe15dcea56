//! JSON-lines trace interchange format.
//!
//! Line 1 is a header object describing the capture; every following line is
//! one packet:
//!
//! ```text
//! {"version":1,"n_ant":3,"n_sub":30,"carrier_freq_hz":5.19e9,"antenna_spacing_m":0.052,"ride_id":"r0001","condition":"only_rider","side":"right"}
//! {"t":0.0,"seq":0,"rss":[-41.0,-40.0,-39.0],"csi":[[[0.1,-0.2],...],...]}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ComplexSample, Condition, CsiPacket, Side};

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} {what}, found {found}")]
    Dimension {
        line: usize,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("trace has no header line")]
    MissingHeader,
    #[error("unsupported trace version {0}")]
    Version(u32),
}

/// First line of every trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub n_ant: usize,
    pub n_sub: usize,
    pub carrier_freq_hz: f64,
    pub antenna_spacing_m: f64,
    pub ride_id: String,
    pub condition: Condition,
    pub side: Side,
}

/// A ride: header plus its packets in timestamp order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub packets: Vec<CsiPacket>,
}

#[derive(Serialize, Deserialize)]
struct PacketRecord {
    t: f64,
    seq: u64,
    rss: Vec<f64>,
    csi: Vec<Vec<[f64; 2]>>,
}

impl PacketRecord {
    fn from_packet(p: &CsiPacket) -> Self {
        Self {
            t: p.timestamp,
            seq: p.seq,
            rss: p.rss.clone(),
            csi: p
                .csi
                .iter()
                .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
                .collect(),
        }
    }

    fn into_packet(self, line: usize, header: &TraceHeader) -> Result<CsiPacket, TraceError> {
        if self.csi.len() != header.n_ant {
            return Err(TraceError::Dimension {
                line,
                what: "antenna rows",
                expected: header.n_ant,
                found: self.csi.len(),
            });
        }
        if self.rss.len() != header.n_ant {
            return Err(TraceError::Dimension {
                line,
                what: "rss values",
                expected: header.n_ant,
                found: self.rss.len(),
            });
        }
        let mut csi = Vec::with_capacity(self.csi.len());
        for row in self.csi {
            if row.len() != header.n_sub {
                return Err(TraceError::Dimension {
                    line,
                    what: "subcarriers",
                    expected: header.n_sub,
                    found: row.len(),
                });
            }
            csi.push(
                row.into_iter()
                    .map(|[re, im]| ComplexSample::new(re, im))
                    .collect::<Vec<_>>(),
            );
        }
        let packet = CsiPacket {
            timestamp: self.t,
            seq: self.seq,
            rss: self.rss,
            csi,
        };
        if !packet.is_finite() {
            return Err(TraceError::NonFinite { line });
        }
        Ok(packet)
    }
}

/// Parse a trace from any reader. Returns `Ok(None)` for an empty input.
pub fn read_trace<R: Read>(reader: R) -> Result<Option<Trace>, TraceError> {
    let reader = BufReader::new(reader);
    let mut header: Option<TraceHeader> = None;
    let mut packets = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match &header {
            None => {
                let h: TraceHeader = serde_json::from_str(&line).map_err(|e| TraceError::Parse {
                    line: line_no,
                    message: format!("bad header: {e}"),
                })?;
                if h.version != TRACE_VERSION {
                    return Err(TraceError::Version(h.version));
                }
                header = Some(h);
            }
            Some(h) => {
                let rec: PacketRecord =
                    serde_json::from_str(&line).map_err(|e| TraceError::Parse {
                        line: line_no,
                        message: e.to_string(),
                    })?;
                packets.push(rec.into_packet(line_no, h)?);
            }
        }
    }
    // stable: equal timestamps keep file order
    packets.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(header.map(|header| Trace { header, packets }))
}

/// Load a trace file including its header.
pub fn load_trace_file(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    read_trace(File::open(path)?)?.ok_or(TraceError::MissingHeader)
}

/// Load just the packets of a trace file. An empty file yields no packets.
pub fn load_trace(path: impl AsRef<Path>) -> Result<Vec<CsiPacket>, TraceError> {
    Ok(read_trace(File::open(path)?)?
        .map(|t| t.packets)
        .unwrap_or_default())
}

pub fn write_trace<W: Write>(mut writer: W, trace: &Trace) -> Result<(), TraceError> {
    let to_io = |e: serde_json::Error| TraceError::Io(e.into());
    serde_json::to_writer(&mut writer, &trace.header).map_err(to_io)?;
    writer.write_all(b"\n")?;
    for p in &trace.packets {
        serde_json::to_writer(&mut writer, &PacketRecord::from_packet(p)).map_err(to_io)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_trace(path: impl AsRef<Path>, trace: &Trace) -> Result<(), TraceError> {
    write_trace(BufWriter::new(File::create(path)?), trace)
}
