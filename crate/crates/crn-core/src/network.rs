//! Network data model: species, complexes, reactions, stoichiometric
//! matrices, conservation laws and structural predicates.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::NetworkError;
use crate::exact::{rat_is_positive, IMat, QMat, Rat};

/// A chemical species, identified by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Species {
    pub name: String,
}

pub fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A formal linear combination of species with nonnegative integer
/// coefficients. Absent entries are zero; the empty map is the complex 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Complex {
    pub coeffs: BTreeMap<usize, u32>,
}

impl Complex {
    pub fn empty() -> Self {
        Complex::default()
    }

    pub fn from_pairs(pairs: &[(usize, u32)]) -> Self {
        let mut c = Complex::empty();
        for &(i, k) in pairs {
            c.add_species(i, k);
        }
        c
    }

    pub fn add_species(&mut self, species: usize, count: u32) {
        if count == 0 {
            return;
        }
        *self.coeffs.entry(species).or_insert(0) += count;
    }

    pub fn coeff(&self, species: usize) -> u32 {
        self.coeffs.get(&species).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Total molecularity (sum of coefficients).
    pub fn size(&self) -> u32 {
        self.coeffs.values().sum()
    }

    pub fn to_vec(&self, n: usize) -> Vec<i64> {
        let mut v = vec![0i64; n];
        for (&i, &k) in &self.coeffs {
            v[i] = k as i64;
        }
        v
    }

    /// Remap species indices, dropping species mapped to None.
    pub fn remap(&self, map: &[Option<usize>]) -> Complex {
        let mut out = Complex::empty();
        for (&i, &k) in &self.coeffs {
            if let Some(j) = map[i] {
                out.add_species(j, k);
            }
        }
        out
    }
}

/// Rate constant: a fixed positive rational, or a named free parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum RateConstant {
    Fixed(Rat),
    Param(String),
}

impl RateConstant {
    pub fn param_name(&self) -> Option<&str> {
        match self {
            RateConstant::Param(s) => Some(s),
            RateConstant::Fixed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate: RateConstant,
}

impl Reaction {
    /// Reaction vector: product minus reactant, as a dense integer vector.
    pub fn reaction_vec(&self, n: usize) -> Vec<i64> {
        let mut v = self.reactant.to_vec(n);
        let p = self.product.to_vec(n);
        for i in 0..n {
            v[i] = p[i] - v[i];
        }
        v
    }
}

/// A mass action reaction network with derived exact stoichiometric data.
#[derive(Debug, Clone)]
pub struct Network {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    gamma: IMat,
    gamma_l: IMat,
    rank: usize,
}

impl Network {
    pub fn new(species: Vec<Species>, reactions: Vec<Reaction>) -> Result<Self, NetworkError> {
        if reactions.is_empty() {
            return Err(NetworkError::Empty);
        }
        let n = species.len();
        let mut seen = std::collections::BTreeSet::new();
        for s in &species {
            if !valid_identifier(&s.name) {
                return Err(NetworkError::BadSpeciesName(s.name.clone()));
            }
            if !seen.insert(s.name.clone()) {
                return Err(NetworkError::DuplicateSpecies(s.name.clone()));
            }
        }
        for (j, r) in reactions.iter().enumerate() {
            if r.reactant == r.product {
                return Err(NetworkError::NullReaction(j));
            }
            if let RateConstant::Fixed(q) = &r.rate {
                if !rat_is_positive(q) {
                    return Err(NetworkError::NonpositiveRate(j));
                }
            }
            for &i in r.reactant.coeffs.keys().chain(r.product.coeffs.keys()) {
                if i >= n {
                    return Err(NetworkError::SpeciesIndex(i));
                }
            }
            for (k, prev) in reactions[..j].iter().enumerate() {
                if prev.reactant == r.reactant && prev.product == r.product {
                    return Err(NetworkError::DuplicateReaction(k, j));
                }
            }
        }
        let m = reactions.len();
        let mut gamma = IMat::zeros(n, m);
        let mut gamma_l = IMat::zeros(n, m);
        for (j, r) in reactions.iter().enumerate() {
            let a = r.reactant.to_vec(n);
            let b = r.product.to_vec(n);
            for i in 0..n {
                gamma.set(i, j, b[i] - a[i]);
                gamma_l.set(i, j, a[i]);
            }
        }
        let rank = gamma.to_qmat().rank();
        Ok(Network {
            species,
            reactions,
            gamma,
            gamma_l,
            rank,
        })
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    /// Stoichiometric matrix (columns are product minus reactant vectors) and
    /// reactant matrix, both exact and in declared species/reaction order.
    pub fn stoichiometric_matrices(&self) -> (&IMat, &IMat) {
        (&self.gamma, &self.gamma_l)
    }

    pub fn gamma(&self) -> &IMat {
        &self.gamma
    }

    pub fn gamma_l(&self) -> &IMat {
        &self.gamma_l
    }

    /// Exact rational basis of the left null space of Gamma, in reduced
    /// echelon form. Each row w satisfies w^T Gamma = 0, so w.x is conserved.
    pub fn conservation_basis(&self) -> QMat {
        self.gamma.to_qmat().left_nullspace()
    }

    /// Free rate parameters, ordered by first appearance over the reactions.
    pub fn free_params(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.reactions {
            if let RateConstant::Param(p) = &r.rate {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    /// True iff both 0 -> X_i and X_i -> 0 are present for every species.
    pub fn is_fully_open(&self) -> bool {
        (0..self.n_species()).all(|i| {
            let has_in = self.reactions.iter().any(|r| {
                r.reactant.is_empty() && r.product.coeffs.len() == 1 && r.product.coeff(i) == 1
            });
            let has_out = self.reactions.iter().any(|r| {
                r.product.is_empty() && r.reactant.coeffs.len() == 1 && r.reactant.coeff(i) == 1
            });
            has_in && has_out
        })
    }

    /// True iff every complex has total molecularity at most two.
    pub fn is_bimolecular(&self) -> bool {
        self.reactions
            .iter()
            .all(|r| r.reactant.size() <= 2 && r.product.size() <= 2)
    }

    pub fn find_reaction(&self, reactant: &Complex, product: &Complex) -> Option<usize> {
        self.reactions
            .iter()
            .position(|r| &r.reactant == reactant && &r.product == product)
    }
}

/// Witness of an induced-subnetwork relation: which `sup` species were
/// deleted and which `sup` reaction realizes each `sub` reaction.
#[derive(Debug, Clone, PartialEq)]
pub struct SubnetworkWitness {
    pub deleted_species: Vec<String>,
    /// reaction_map[j] = index in `sup` of the reaction realizing `sub` reaction j
    pub reaction_map: Vec<usize>,
}

/// Decide whether `sub` is an induced subnetwork of `sup`: obtainable by
/// deleting reactions and/or deleting species from every reaction in which
/// they occur. Species are identified by name; restricted reactions whose
/// reactant and product collapse to equality are treated as removed.
pub fn is_induced_subnetwork(sub: &Network, sup: &Network) -> Option<SubnetworkWitness> {
    // every sub species must exist in sup; the deletion set is then forced
    let mut index_map: Vec<Option<usize>> = Vec::with_capacity(sup.n_species());
    for s in sup.species() {
        index_map.push(sub.species_index(&s.name));
    }
    for s in sub.species() {
        sup.species_index(&s.name)?;
    }
    let deleted_species: Vec<String> = sup
        .species()
        .iter()
        .filter(|s| sub.species_index(&s.name).is_none())
        .map(|s| s.name.clone())
        .collect();
    // restrict each sup reaction to the kept species
    let restricted: Vec<Option<(Complex, Complex)>> = sup
        .reactions()
        .iter()
        .map(|r| {
            let a = r.reactant.remap(&index_map);
            let b = r.product.remap(&index_map);
            if a == b {
                None // became null; treated as removed
            } else {
                Some((a, b))
            }
        })
        .collect();
    let mut reaction_map = Vec::with_capacity(sub.n_reactions());
    for r in sub.reactions() {
        let found = restricted.iter().position(|cand| {
            cand.as_ref()
                .map(|(a, b)| *a == r.reactant && *b == r.product)
                .unwrap_or(false)
        })?;
        reaction_map.push(found);
    }
    Some(SubnetworkWitness {
        deleted_species,
        reaction_map,
    })
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parser::serialize_network(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_network;

    #[test]
    fn r0_structure() {
        let net = parse_network("X1 + 2 X2 -> 3 X2 @ 1 ; X2 -> X1 @ k").unwrap();
        assert_eq!(net.n_species(), 2);
        assert_eq!(net.n_reactions(), 2);
        assert_eq!(net.rank(), 1);
        let (g, gl) = net.stoichiometric_matrices();
        assert_eq!(g.data, vec![-1, 1, 1, -1]);
        // reactant matrix read off the complexes X1+2X2 and X2
        assert_eq!(gl.data, vec![1, 0, 2, 1]);
    }

    #[test]
    fn inflow_only_network() {
        let net = parse_network("0 -> X @ 1").unwrap();
        let (g, gl) = net.stoichiometric_matrices();
        assert_eq!(g.data, vec![1]);
        assert_eq!(gl.data, vec![0]);
        assert_eq!(net.rank(), 1);
        assert_eq!(net.conservation_basis().rows, 0);
    }

    #[test]
    fn conservation_r0_and_r3() {
        let r0 = parse_network("X1 + 2 X2 -> 3 X2 @ 1 ; X2 -> X1 @ k").unwrap();
        let w = r0.conservation_basis();
        assert_eq!(w.rows, 1);
        assert_eq!(w.row(0), vec![crate::exact::rat(1), crate::exact::rat(1)]);

        // R3: Y enters both reactions; y - x2 is conserved
        let r3 = parse_network("X1 + 2 X2 -> 3 X2 + Y @ 1 ; X2 + Y -> X1 @ k").unwrap();
        let w3 = r3.conservation_basis();
        assert_eq!(w3.rows, 2);
        assert_eq!(r3.rank() + w3.rows, r3.n_species());
        // (0,-1,1) must lie in the span of the basis rows
        let target = vec![
            crate::exact::rat(0),
            crate::exact::rat(-1),
            crate::exact::rat(1),
        ];
        let mut stacked: Vec<Vec<Rat>> = (0..w3.rows).map(|i| w3.row(i)).collect();
        stacked.push(target);
        assert_eq!(QMat::from_rows(stacked).rank(), w3.rows);
    }

    #[test]
    fn fully_open_detection() {
        let net = parse_network("0 -> X @ 1 ; X -> 0 @ 2").unwrap();
        assert!(net.is_fully_open());
        let r0 = parse_network("X1 + 2 X2 -> 3 X2 @ 1 ; X2 -> X1 @ k").unwrap();
        assert!(!r0.is_fully_open());
        // inflow present but outflow missing for X2
        let partial = parse_network("0 <-> X1 @ 1, 1 ; 0 -> X2 @ 1").unwrap();
        assert!(!partial.is_fully_open());
    }

    #[test]
    fn induced_subnetwork_basic() {
        // R_B0 inside R_B1: delete the flow reactions
        let rb0 = parse_network("X -> Y @ k3 ; 2 X + Y -> 3 X @ k4").unwrap();
        let rb1 =
            parse_network("0 -> X @ k1 ; X -> 0 @ k2 ; X -> Y @ k3 ; 2 X + Y -> 3 X @ k4").unwrap();
        let w = is_induced_subnetwork(&rb0, &rb1).unwrap();
        assert!(w.deleted_species.is_empty());
        assert_eq!(w.reaction_map, vec![2, 3]);
        // reflexivity
        assert!(is_induced_subnetwork(&rb1, &rb1).is_some());
        // converse fails: sup has fewer reactions
        assert!(is_induced_subnetwork(&rb1, &rb0).is_none());
    }

    #[test]
    fn induced_subnetwork_species_deletion() {
        // deleting Z from X -> Y + Z gives X -> Y; deleting Y from X+Y -> 2Y nulls it
        let sup = parse_network("X -> Y + Z @ 1 ; X + Y -> 2 Y @ 1").unwrap();
        let sub = parse_network("species X, Y\nX -> Y @ 1").unwrap();
        let w = is_induced_subnetwork(&sub, &sup).unwrap();
        assert_eq!(w.deleted_species, vec!["Z".to_string()]);
        assert_eq!(w.reaction_map, vec![0]);
        // a sub reaction not realizable
        let bad = parse_network("species X, Y\nY -> X @ 1").unwrap();
        assert!(is_induced_subnetwork(&bad, &sup).is_none());
    }

    #[test]
    fn bimolecular_predicate() {
        let net = parse_network("X + Y -> 2 Z @ 1").unwrap();
        assert!(net.is_bimolecular());
        let tri = parse_network("X1 + 2 X2 -> 3 X2 @ 1").unwrap();
        assert!(!tri.is_bimolecular());
    }
}
