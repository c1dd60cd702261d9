//! JSON schema for network files.
//!
//! ```json
//! {
//!   "links": 2,
//!   "tx_antennas": [3, 3],
//!   "rx_antennas": [4, 4],
//!   "weights": [1.0, 0.7],
//!   "total_power": 100.0,
//!   "channels": [[[{"re": 0.1, "im": -0.2}, ...], ...], ...],
//!   "cancel_mask": [[false, false], [false, false]]
//! }
//! ```
//!
//! `channels[l][k]` is the matrix from transmitter `k` into receiver `l`,
//! flattened row-major with one `{re, im}` object per entry. Optional
//! `noise` and `power_weights` blocks carry per-link colored-noise
//! covariances (receive side) and power weight matrices (transmit side) in
//! the same flattened form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::CMat;
use crate::network::{CovarianceSet, NetworkSpec};
use crate::whitening::{NoiseModel, PowerWeights};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

/// Flatten a matrix row-major.
pub fn matrix_to_entries(m: &CMat) -> Vec<ComplexEntry> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            out.push(ComplexEntry { re: z.re, im: z.im });
        }
    }
    out
}

/// Rebuild a matrix from its row-major flattening.
pub fn entries_to_matrix(rows: usize, cols: usize, entries: &[ComplexEntry]) -> Result<CMat> {
    if entries.len() != rows * cols {
        return Err(Error::InvalidNetwork(format!(
            "matrix payload has {} entries, expected {rows}x{cols}",
            entries.len()
        )));
    }
    Ok(CMat::from_fn(rows, cols, |r, c| {
        let e = entries[r * cols + c];
        Complex64::new(e.re, e.im)
    }))
}

pub fn covariances_to_entries(set: &CovarianceSet) -> Vec<Vec<ComplexEntry>> {
    set.entries()
        .iter()
        .map(|e| matrix_to_entries(e.matrix()))
        .collect()
}

/// Wire form of a network file. Field names are fixed.
#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    links: usize,
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
    weights: Vec<f64>,
    total_power: f64,
    channels: Vec<Vec<Vec<ComplexEntry>>>,
    cancel_mask: Vec<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<Vec<Vec<ComplexEntry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_weights: Option<Vec<Vec<ComplexEntry>>>,
}

/// A network plus the optional whitening blocks stored alongside it.
#[derive(Debug, Clone)]
pub struct NetworkDocument {
    pub spec: NetworkSpec,
    pub noise: Option<NoiseModel>,
    pub power_weights: Option<PowerWeights>,
}

impl NetworkDocument {
    pub fn new(spec: NetworkSpec) -> Self {
        Self {
            spec,
            noise: None,
            power_weights: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let spec = &self.spec;
        let links = spec.links();
        let channels = (0..links)
            .map(|l| {
                (0..links)
                    .map(|k| matrix_to_entries(spec.channel(l, k)))
                    .collect()
            })
            .collect();
        let file = NetworkFile {
            links,
            tx_antennas: spec.tx_antennas().to_vec(),
            rx_antennas: spec.rx_antennas().to_vec(),
            weights: spec.weights().to_vec(),
            total_power: spec.total_power(),
            channels,
            cancel_mask: spec.cancel_mask().to_vec(),
            noise: self
                .noise
                .as_ref()
                .map(|n| n.covariances().iter().map(|m| matrix_to_entries(m.matrix())).collect()),
            power_weights: self
                .power_weights
                .as_ref()
                .map(|p| p.weights().iter().map(|m| matrix_to_entries(m.matrix())).collect()),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        let links = file.links;
        if file.tx_antennas.len() != links
            || file.rx_antennas.len() != links
            || file.weights.len() != links
            || file.channels.len() != links
        {
            return Err(Error::InvalidNetwork(
                "network file arrays disagree with the declared link count".into(),
            ));
        }
        let mut channels = Vec::with_capacity(links);
        for l in 0..links {
            if file.channels[l].len() != links {
                return Err(Error::InvalidNetwork(format!(
                    "channel row {l} has {} entries, expected {links}",
                    file.channels[l].len()
                )));
            }
            let mut row = Vec::with_capacity(links);
            for k in 0..links {
                row.push(entries_to_matrix(
                    file.rx_antennas[l],
                    file.tx_antennas[k],
                    &file.channels[l][k],
                )?);
            }
            channels.push(row);
        }
        let spec = NetworkSpec::new(
            channels,
            file.weights,
            file.total_power,
            Some(file.cancel_mask),
        )?;
        let noise = file
            .noise
            .map(|blocks| {
                let mats = blocks
                    .iter()
                    .enumerate()
                    .map(|(l, b)| {
                        entries_to_matrix(spec.rx_antennas()[l], spec.rx_antennas()[l], b)
                    })
                    .collect::<Result<Vec<_>>>()?;
                NoiseModel::try_new(&spec, mats)
            })
            .transpose()?;
        let power_weights = file
            .power_weights
            .map(|blocks| {
                let mats = blocks
                    .iter()
                    .enumerate()
                    .map(|(l, b)| {
                        entries_to_matrix(spec.tx_antennas()[l], spec.tx_antennas()[l], b)
                    })
                    .collect::<Result<Vec<_>>>()?;
                PowerWeights::try_new(&spec, mats)
            })
            .transpose()?;
        Ok(Self {
            spec,
            noise,
            power_weights,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Direction;

    fn sample_spec() -> NetworkSpec {
        let h = |v: &[f64]| {
            CMat::from_fn(2, 1, |r, _| Complex64::new(v[r], -v[1 - r]))
        };
        NetworkSpec::new(
            vec![
                vec![h(&[1.0, 0.2]), h(&[0.3, 0.1])],
                vec![h(&[0.4, 0.5]), h(&[0.9, 0.0])],
            ],
            vec![1.0, 0.7],
            25.0,
            Some(vec![vec![false, true], vec![false, false]]),
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_preserves_everything() {
        let doc = NetworkDocument::new(sample_spec());
        let text = doc.to_json().unwrap();
        let back = NetworkDocument::from_json(&text).unwrap();
        assert_eq!(back.spec.links(), 2);
        assert_eq!(back.spec.tx_antennas(), &[1, 1]);
        assert_eq!(back.spec.rx_antennas(), &[2, 2]);
        assert_eq!(back.spec.weights(), &[1.0, 0.7]);
        assert!(back.spec.is_masked(0, 1));
        for l in 0..2 {
            for k in 0..2 {
                assert_eq!(back.spec.channel(l, k), doc.spec.channel(l, k));
            }
        }
        // Serialization is deterministic byte for byte.
        assert_eq!(text, back.to_json().unwrap());
    }

    #[test]
    fn json_field_names_are_pinned() {
        let doc = NetworkDocument::new(sample_spec());
        let value: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
        for key in [
            "links",
            "tx_antennas",
            "rx_antennas",
            "weights",
            "total_power",
            "channels",
            "cancel_mask",
        ] {
            assert!(value.get(key).is_some(), "missing key {key}");
        }
        let entry = &value["channels"][0][0][0];
        assert!(entry.get("re").is_some() && entry.get("im").is_some());
    }

    #[test]
    fn whitening_blocks_round_trip() {
        let spec = sample_spec();
        let noise = NoiseModel::try_new(
            &spec,
            (0..2).map(|_| CMat::identity(2, 2) * Complex64::new(2.0, 0.0)).collect(),
        )
        .unwrap();
        let pw = PowerWeights::try_new(
            &spec,
            (0..2).map(|_| CMat::identity(1, 1) * Complex64::new(4.0, 0.0)).collect(),
        )
        .unwrap();
        let doc = NetworkDocument {
            spec,
            noise: Some(noise),
            power_weights: Some(pw),
        };
        let back = NetworkDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert!(back.noise.is_some());
        assert!(back.power_weights.is_some());
        assert!(
            (back.power_weights.unwrap().get(0).matrix()[(0, 0)].re - 4.0).abs() < 1e-15
        );
    }

    #[test]
    fn rejects_inconsistent_link_count() {
        let doc = NetworkDocument::new(sample_spec());
        let mut value: serde_json::Value =
            serde_json::from_str(&doc.to_json().unwrap()).unwrap();
        value["links"] = serde_json::json!(3);
        assert!(NetworkDocument::from_json(&value.to_string()).is_err());
    }

    #[test]
    fn covariance_entries_are_row_major() {
        let spec = sample_spec();
        let m = CMat::from_row_slice(
            1,
            1,
            &[Complex64::new(2.0, 0.0)],
        );
        let set = CovarianceSet::try_new(&spec, Direction::Forward, vec![m.clone(), m]).unwrap();
        let blocks = covariances_to_entries(&set);
        assert_eq!(blocks.len(), 2);
        assert!((blocks[0][0].re - 2.0).abs() < 1e-15);
    }
}
