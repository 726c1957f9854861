//! JSON-facing report types and round-trip helpers.

use serde::{Deserialize, Serialize};

use crate::bifurcation::BifPoint;
use crate::exact::rat_to_f64;
use crate::gallery::SuiteReport;
use crate::inherit::InheritanceReport;
use crate::network::Network;
use crate::parser::{fmt_complex, fmt_rate, serialize_network};

/// Machine-readable dump of a parsed network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkDump {
    pub species: Vec<String>,
    pub reactions: Vec<ReactionDump>,
    pub gamma: Vec<Vec<i64>>,
    pub gamma_l: Vec<Vec<i64>>,
    pub rank: usize,
    /// conservation basis rows as f64 (the exact values are small rationals)
    pub conservation: Vec<Vec<f64>>,
    pub free_params: Vec<String>,
    pub fully_open: bool,
    pub bimolecular: bool,
    pub canonical: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReactionDump {
    pub reactant: String,
    pub product: String,
    pub rate: String,
}

pub fn dump_network(net: &Network) -> NetworkDump {
    let (g, gl) = net.stoichiometric_matrices();
    let rows = |m: &crate::exact::IMat| -> Vec<Vec<i64>> {
        (0..m.rows)
            .map(|i| (0..m.cols).map(|j| m.get(i, j)).collect())
            .collect()
    };
    let w = net.conservation_basis();
    NetworkDump {
        species: net.species().iter().map(|s| s.name.clone()).collect(),
        reactions: net
            .reactions()
            .iter()
            .map(|r| ReactionDump {
                reactant: fmt_complex(&r.reactant, net),
                product: fmt_complex(&r.product, net),
                rate: fmt_rate(&r.rate),
            })
            .collect(),
        gamma: rows(g),
        gamma_l: rows(gl),
        rank: net.rank(),
        conservation: (0..w.rows)
            .map(|i| (0..w.cols).map(|j| rat_to_f64(w.get(i, j))).collect())
            .collect(),
        free_params: net.free_params(),
        fully_open: net.is_fully_open(),
        bimolecular: net.is_bimolecular(),
        canonical: serialize_network(net),
    }
}

pub fn bif_point_json(bp: &BifPoint) -> String {
    serde_json::to_string_pretty(bp).expect("serializable")
}

pub fn bif_point_from_json(s: &str) -> Result<BifPoint, serde_json::Error> {
    serde_json::from_str(s)
}

pub fn inheritance_json(rep: &InheritanceReport) -> String {
    serde_json::to_string_pretty(rep).expect("serializable")
}

pub fn inheritance_from_json(s: &str) -> Result<InheritanceReport, serde_json::Error> {
    serde_json::from_str(s)
}

pub fn suite_json(rep: &SuiteReport) -> String {
    serde_json::to_string_pretty(rep).expect("serializable")
}

pub fn suite_from_json(s: &str) -> Result<SuiteReport, serde_json::Error> {
    serde_json::from_str(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::inherit::Verdict;
    use crate::parser::parse_network;

    #[test]
    fn network_dump_r0() {
        let net = parse_network(gallery::R0_DSL).unwrap();
        let d = dump_network(&net);
        assert_eq!(d.rank, 1);
        assert_eq!(d.gamma, vec![vec![-1, 1], vec![1, -1]]);
        assert_eq!(d.conservation, vec![vec![1.0, 1.0]]);
        let j = serde_json::to_string(&d).unwrap();
        let back: NetworkDump = serde_json::from_str(&j).unwrap();
        assert_eq!(back.rank, 1);
        assert_eq!(back.canonical, d.canonical);
    }

    #[test]
    fn bif_point_round_trip_preserves_verdicts() {
        let (_, _, bp) = gallery::r0_fold_base().unwrap();
        let j = bif_point_json(&bp);
        let back = bif_point_from_json(&j).unwrap();
        assert_eq!(back.pass.all(), bp.pass.all());
        assert_eq!(back.kappa, bp.kappa);
        assert_eq!(back.theta, bp.theta);
        assert_eq!(back.sigma_min, bp.sigma_min);
    }

    #[test]
    fn inheritance_round_trip_preserves_verdict() {
        let rep = gallery::run_case("r0-e3").unwrap();
        let j = inheritance_json(&rep);
        let back = inheritance_from_json(&j).unwrap();
        assert_eq!(back.verdict, Verdict::Pass);
        assert_eq!(back.records.len(), rep.records.len());
        for (a, b) in back.records.iter().zip(rep.records.iter()) {
            assert_eq!(a.kappa_dev, b.kappa_dev);
            assert_eq!(a.eps, b.eps);
        }
    }
}
