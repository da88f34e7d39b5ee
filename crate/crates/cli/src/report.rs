//! Structured report documents.
//!
//! Serialisation is canonical: struct fields keep declaration order and
//! floats use the shortest representation that round-trips, so parsing a
//! document and writing it again reproduces the original bytes.

use gemmsim::oracle::CaseOutcome;
use gemmsim::{
    CalibrationProfile, ComponentVolume, CostBreakdown, GemmShape, LayerResult, MicroKernel,
    OracleResult, SweepResult, TileConfig, Variant,
};
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "gemmsim";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub key: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Calibration the results were computed with.
    pub profile: Vec<ProfileEntry>,
    pub result: ReportBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum ReportBody {
    Estimate(CostBreakdown),
    Sweep(SweepResult),
    Layers(Vec<LayerResult>),
    Oracle(OracleReport),
    Verify(VerifyReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub variant: Variant,
    pub shape: GemmShape,
    pub kernel: MicroKernel,
    pub tiles: TileConfig,
    pub seed: u64,
    pub run: OracleResult,
    /// (analytic, interpreted) pairs that disagree.
    pub mismatches: Vec<(ComponentVolume, ComponentVolume)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub max_dim: usize,
    pub cases: usize,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub outcomes: Vec<CaseOutcome>,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&CaseOutcome> {
        self.outcomes.iter().find(|o| !o.passed())
    }
}

impl ReportDocument {
    pub fn new(command: &str, profile: &CalibrationProfile, result: ReportBody) -> Self {
        Self {
            tool: TOOL.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            profile: profile
                .entries()
                .into_iter()
                .map(|(key, value)| ProfileEntry {
                    key: key.to_owned(),
                    value,
                })
                .collect(),
            result,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gemmsim::{best_per_layer, estimate, sweep, LayerSpec};

    fn roundtrip(doc: &ReportDocument) {
        let text = doc.to_json().unwrap();
        let back = ReportDocument::from_json(&text).unwrap();
        assert_eq!(&back, doc);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn documents_round_trip_byte_identically() {
        let p = CalibrationProfile::gap8();
        let s = GemmShape::new(256, 784, 2304).unwrap();
        let mk = MicroKernel::new(4, 4);
        let t = gemmsim::default_tiles(Variant::C3B2A0, s, mk, &p).unwrap();
        let b = estimate(&p, Variant::C3B2A0, s, mk, t).unwrap();
        roundtrip(&ReportDocument::new(
            "estimate",
            &p,
            ReportBody::Estimate(b),
        ));

        let sw = sweep(&p, Variant::B3A2C0, GemmShape::new(37, 50, 11).unwrap()).unwrap();
        roundtrip(&ReportDocument::new("sweep", &p, ReportBody::Sweep(sw)));

        let layers = best_per_layer(
            &p,
            &[LayerSpec::new("a", 8, 8, 8), LayerSpec::new("bad", 0, 1, 1)],
        );
        roundtrip(&ReportDocument::new(
            "layers",
            &p,
            ReportBody::Layers(layers),
        ));
    }

    #[test]
    fn profile_is_echoed() {
        let p = CalibrationProfile::gap8();
        let doc = ReportDocument::new("x", &p, ReportBody::Layers(vec![]));
        let t_mm = doc.profile.iter().find(|e| e.key == "t_mm").unwrap();
        assert_eq!(t_mm.value, 1.62);
        assert_eq!(doc.tool, TOOL);
    }
}
