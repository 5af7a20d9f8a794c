use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::PopId;

/// All spikes emitted during one or more windows, grouped by population.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    labels: Vec<String>,
    spikes: Vec<Vec<(u32, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct SpikeRow<'a> {
    population: &'a str,
    neuron: u32,
    t_ms: f64,
}

impl SpikeRecord {
    pub fn new(labels: Vec<String>) -> Self {
        let spikes = vec![Vec::new(); labels.len()];
        Self { labels, spikes }
    }

    pub(crate) fn push(&mut self, pop: PopId, neuron: usize, t_ms: f64) {
        self.spikes[pop].push((neuron as u32, t_ms));
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `(neuron, t_ms)` pairs of one population, in emission order.
    pub fn spikes(&self, pop: PopId) -> &[(u32, f64)] {
        &self.spikes[pop]
    }

    pub fn count(&self, pop: PopId) -> usize {
        self.spikes[pop].len()
    }

    pub fn total(&self) -> usize {
        self.spikes.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Spike count per neuron of `pop`.
    pub fn counts(&self, pop: PopId, size: usize) -> Vec<u32> {
        let mut out = vec![0u32; size];
        for &(n, _) in &self.spikes[pop] {
            if let Some(c) = out.get_mut(n as usize) {
                *c += 1;
            }
        }
        out
    }

    /// Appends another record with the same population layout.
    pub fn extend(&mut self, other: &SpikeRecord) {
        for (mine, theirs) in self.spikes.iter_mut().zip(&other.spikes) {
            mine.extend_from_slice(theirs);
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> crate::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for (label, spikes) in self.labels.iter().zip(&self.spikes) {
            for &(neuron, t_ms) in spikes {
                wtr.serialize(SpikeRow {
                    population: label,
                    neuron,
                    t_ms,
                })?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a record back. Populations appear in first-seen order.
    pub fn read_csv<R: Read>(r: R) -> crate::Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut rec = SpikeRecord::default();
        for row in rdr.records() {
            let row = row?;
            let label = row
                .get(0)
                .ok_or_else(|| crate::Error::Malformed("missing population".into()))?;
            let neuron: u32 = parse_field(&row, 1)?;
            let t_ms: f64 = parse_field(&row, 2)?;
            let pop = match rec.labels.iter().position(|l| l == label) {
                Some(p) => p,
                None => {
                    rec.labels.push(label.to_string());
                    rec.spikes.push(Vec::new());
                    rec.labels.len() - 1
                }
            };
            rec.spikes[pop].push((neuron, t_ms));
        }
        Ok(rec)
    }
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> crate::Result<T> {
    row.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| crate::Error::Malformed(format!("bad field {i} in {row:?}")))
}

/// Per-neuron firing rate in Hz over `window_ms`.
pub fn firing_rates(record: &SpikeRecord, pop: PopId, size: usize, window_ms: f64) -> Vec<f64> {
    assert!(window_ms > 0.0, "rate window must be positive");
    let per_s = 1000.0 / window_ms;
    record
        .counts(pop, size)
        .into_iter()
        .map(|c| c as f64 * per_s)
        .collect()
}
