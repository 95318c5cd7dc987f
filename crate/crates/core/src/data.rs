//! Finite-sample data: outcome counts, simulation from models, and the
//! line-delimited dataset file format.
//!
//! Each record is one line, exactly
//! `{"circuit": "Gx;Gy", "counts": {"0": 512, "1": 488}}`: the canonical
//! circuit text, then counts for every outcome label in sorted order. Lines
//! starting with `#` carry provenance and are ignored by the loader.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuits::Circuit;
use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::noise::ErrorModel;

/// Counts per outcome for one circuit, `f_C · N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub circuit: Circuit,
    /// Indexed like the owning dataset's outcome labels.
    pub counts: Vec<u64>,
}

impl OutcomeCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Empirical distribution `counts / N`.
pub fn frequencies(oc: &OutcomeCounts) -> Result<ProbDist> {
    let n = oc.total();
    if n == 0 {
        return Err(Error::NoCounts);
    }
    Ok(ProbDist::new_unchecked(
        oc.counts.iter().map(|&c| c as f64 / n as f64).collect(),
    ))
}

/// Child seed for one circuit: the first eight bytes of
/// `SHA-256(master_seed (LE) ‖ canonical circuit text)`.
pub fn circuit_seed(master_seed: u64, circuit: &Circuit) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(circuit.to_string().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Multinomial draw of `shots` outcomes from `probs`.
pub fn sample_multinomial(probs: &[f64], shots: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = remaining;
            break;
        }
        let cond = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, cond)
            .expect("probability in [0, 1]")
            .sample(&mut rng);
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    counts
}

/// Simulated counts for one circuit, seeded only by `seed`.
pub fn simulate_counts(model: &ErrorModel, circuit: &Circuit, shots: u64, seed: u64) -> Result<OutcomeCounts> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be at least 1".into()));
    }
    let p = model.predict(circuit)?;
    Ok(OutcomeCounts {
        circuit: circuit.clone(),
        counts: sample_multinomial(p.as_slice(), shots, seed),
    })
}

/// Where a dataset came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub model_id: Option<String>,
}

/// Outcome counts over a set of distinct circuits `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    outcome_labels: Vec<String>,
    records: Vec<OutcomeCounts>,
    index: HashMap<Circuit, usize>,
    pub provenance: Provenance,
}

impl DataSet {
    pub fn new(outcome_labels: Vec<String>) -> Self {
        Self {
            outcome_labels,
            records: Vec::new(),
            index: HashMap::new(),
            provenance: Provenance::default(),
        }
    }

    pub fn outcome_labels(&self) -> &[String] {
        &self.outcome_labels
    }

    pub fn records(&self) -> &[OutcomeCounts] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, circuit: &Circuit) -> Option<&OutcomeCounts> {
        self.index.get(circuit).map(|&i| &self.records[i])
    }

    pub fn circuits(&self) -> impl Iterator<Item = &Circuit> {
        self.records.iter().map(|r| &r.circuit)
    }

    pub fn push(&mut self, record: OutcomeCounts) -> Result<()> {
        if record.counts.len() != self.outcome_labels.len() {
            return Err(Error::OutcomeMismatch {
                left: self.outcome_labels.len(),
                right: record.counts.len(),
            });
        }
        if self.index.contains_key(&record.circuit) {
            return Err(Error::DuplicateCircuit(record.circuit.to_string()));
        }
        self.index.insert(record.circuit.clone(), self.records.len());
        self.records.push(record);
        Ok(())
    }

    /// Simulates every circuit with `shots` shots. Repeated circuits are
    /// merged into one record with `shots × multiplicity` shots. Each
    /// circuit's draw is seeded by [`circuit_seed`], so results do not depend
    /// on order or scheduling.
    pub fn simulate(model: &ErrorModel, circuits: &[Circuit], shots: u64, master_seed: u64) -> Result<Self> {
        let mut order: Vec<Circuit> = Vec::new();
        let mut multiplicity: HashMap<&Circuit, u64> = HashMap::new();
        for c in circuits {
            let m = multiplicity.entry(c).or_insert(0);
            if *m == 0 {
                order.push(c.clone());
            }
            *m += 1;
        }
        let records = order
            .par_iter()
            .map(|c| simulate_counts(model, c, shots * multiplicity[c], circuit_seed(master_seed, c)))
            .collect::<Result<Vec<_>>>()?;
        let mut ds = DataSet::new(model.outcome_labels());
        for r in records {
            ds.push(r)?;
        }
        ds.provenance = Provenance {
            seed: Some(master_seed),
            model_id: None,
        };
        Ok(ds)
    }

    /// Writes the dataset, optionally preceded by `# …` header lines.
    pub fn write_jsonl<W: Write>(&self, mut out: W, header: &[String]) -> Result<()> {
        for h in header {
            writeln!(out, "# {h}")?;
        }
        for r in &self.records {
            let counts: Vec<String> = self
                .outcome_labels
                .iter()
                .zip(&r.counts)
                .map(|(l, c)| format!("{}: {c}", serde_json::to_string(l).expect("string")))
                .collect();
            writeln!(
                out,
                "{{\"circuit\": {}, \"counts\": {{{}}}}}",
                serde_json::to_string(&r.circuit.to_string())?,
                counts.join(", ")
            )?;
        }
        Ok(())
    }

    /// Parses a dataset file. Rejects duplicate circuits; outcome labels are
    /// the sorted union over all records (missing labels count zero).
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Record {
            circuit: Circuit,
            counts: BTreeMap<String, u64>,
        }
        let mut parsed = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let rec: Record = serde_json::from_str(trimmed)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            parsed.push(rec);
        }
        let mut labels: Vec<String> = parsed
            .iter()
            .flat_map(|r| r.counts.keys().cloned())
            .collect();
        labels.sort();
        labels.dedup();
        let mut ds = DataSet::new(labels.clone());
        for rec in parsed {
            let counts = labels
                .iter()
                .map(|l| rec.counts.get(l).copied().unwrap_or(0))
                .collect();
            ds.push(OutcomeCounts {
                circuit: rec.circuit,
                counts,
            })?;
        }
        Ok(ds)
    }

    /// Counts of `record` reordered to `labels` (labels absent from the
    /// dataset count zero).
    pub fn counts_for(&self, record: &OutcomeCounts, labels: &[String]) -> Result<Vec<u64>> {
        for own in &self.outcome_labels {
            let pos = self.outcome_labels.iter().position(|l| l == own).expect("own label");
            if record.counts[pos] > 0 && !labels.contains(own) {
                return Err(Error::InvalidInput(format!(
                    "data outcome `{own}` is not predicted by the model"
                )));
            }
        }
        Ok(labels
            .iter()
            .map(|l| {
                self.outcome_labels
                    .iter()
                    .position(|x| x == l)
                    .map_or(0, |i| record.counts[i])
            })
            .collect())
    }
}
