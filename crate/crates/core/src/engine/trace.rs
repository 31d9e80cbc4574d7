use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::model::ElementId;

pub const TRACE_CSV_HEADER: &str = "q_index,i,j,response,modal_fraction,middle_partition_len_mean";

/// One question/answer round.
///
/// `response` is the element judged smaller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub q_index: usize,
    pub i: ElementId,
    pub j: ElementId,
    pub response: ElementId,
    pub modal_fraction: f64,
    pub middle_partition_len_mean: f64,
}

pub fn write_trace_csv(entries: &[TraceEntry], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for t in entries {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            t.q_index, t.i, t.j, t.response, t.modal_fraction, t.middle_partition_len_mean
        )?;
    }
    Ok(())
}

pub fn trace_csv_string(entries: &[TraceEntry]) -> String {
    let mut buf = Vec::new();
    write_trace_csv(entries, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace CSV is ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = TraceEntry {
            q_index: 1,
            i: ElementId(0),
            j: ElementId(3),
            response: ElementId(3),
            modal_fraction: 0.25,
            middle_partition_len_mean: 2.5,
        };
        assert_eq!(
            trace_csv_string(&[t]),
            "q_index,i,j,response,modal_fraction,middle_partition_len_mean\n1,0,3,3,0.25,2.5\n"
        );
    }
}
