use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Circuit;
use crate::error::{Error, Result};

/// One germ–fiducial circuit and the structure it was built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GstEntry {
    pub circuit: Circuit,
    pub fid_in: Circuit,
    pub germ: Circuit,
    pub power: usize,
    pub fid_out: Circuit,
}

impl GstEntry {
    fn assembled(&self) -> Circuit {
        self.fid_in
            .concat(&self.germ.repeat(self.power))
            .concat(&self.fid_out)
    }
}

/// Germ–fiducial experiment design: every `fid_in + germ^k + fid_out` with
/// `k = ⌊L / |germ|⌋ ≥ 1` for `L` on the ladder `1, 2, 4, …, max_depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct GstDesign {
    pub prep_fiducials: Vec<Circuit>,
    pub meas_fiducials: Vec<Circuit>,
    pub germs: Vec<Circuit>,
    pub ladder: Vec<usize>,
    entries: Vec<GstEntry>,
}

/// The six standard single-qubit fiducials `{}, Gx, Gy, GxGx, GxGxGx, GyGyGy`.
pub fn default_fiducials() -> Vec<Circuit> {
    ["{}", "Gx", "Gy", "Gx;Gx", "Gx;Gx;Gx", "Gy;Gy;Gy"]
        .iter()
        .map(|s| s.parse().expect("valid fiducial"))
        .collect()
}

/// Powers of two up to and including `max_depth`.
pub fn depth_ladder(max_depth: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |l| l.checked_mul(2))
        .take_while(|l| *l <= max_depth)
        .collect()
}

impl GstDesign {
    pub fn new(
        prep_fiducials: Vec<Circuit>,
        meas_fiducials: Vec<Circuit>,
        germs: Vec<Circuit>,
        max_depth: usize,
    ) -> Result<Self> {
        if germs.iter().any(Circuit::is_empty) {
            return Err(Error::EmptyGerm);
        }
        if germs.is_empty() || prep_fiducials.is_empty() || meas_fiducials.is_empty() {
            return Err(Error::InvalidInput(
                "design needs at least one germ and one fiducial of each kind".into(),
            ));
        }
        let ladder = depth_ladder(max_depth);
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for &l in &ladder {
            for germ in &germs {
                let power = l / germ.depth();
                if power == 0 {
                    continue;
                }
                for fid_in in &prep_fiducials {
                    for fid_out in &meas_fiducials {
                        let mut entry = GstEntry {
                            circuit: Circuit::empty(),
                            fid_in: fid_in.clone(),
                            germ: germ.clone(),
                            power,
                            fid_out: fid_out.clone(),
                        };
                        entry.circuit = entry.assembled();
                        if seen.insert(entry.circuit.clone()) {
                            entries.push(entry);
                        }
                    }
                }
            }
        }
        Ok(Self {
            prep_fiducials,
            meas_fiducials,
            germs,
            ladder,
            entries,
        })
    }

    /// Design with the standard fiducials on both sides.
    pub fn standard(germs: Vec<Circuit>, max_depth: usize) -> Result<Self> {
        Self::new(default_fiducials(), default_fiducials(), germs, max_depth)
    }

    pub fn entries(&self) -> &[GstEntry] {
        &self.entries
    }

    pub fn circuits(&self) -> Vec<Circuit> {
        self.entries.iter().map(|e| e.circuit.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes one JSON record per circuit with its structural tags.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads design records back, checking every tag against its circuit.
    pub fn read_entries<R: BufRead>(input: R) -> Result<Vec<GstEntry>> {
        let mut entries = Vec::new();
        for line in input.lines() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let entry: GstEntry = serde_json::from_str(trimmed)?;
            if entry.assembled() != entry.circuit {
                return Err(Error::Parse(format!(
                    "design record `{}` does not match its tags",
                    entry.circuit
                )));
            }
            entries.push(entry);
        }
        Ok(entries)
    }
}
