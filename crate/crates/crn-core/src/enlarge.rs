//! The six network enlargements with their epsilon-parameterized rate
//! schedules, validated exactly on the integer stoichiometric data, plus the
//! singular-limit bookkeeping needed to seed and verify inheritance sweeps.
//!
//! Each operator takes a running (network, schedule) pair and produces an
//! enlarged one; rate schedules are expressions in (eps, kappa) so that a
//! whole composition shares a single eps. Local slow-fast coordinate systems
//! for single enlargements are built symbolically for identity checks and
//! diagnostics.

use nalgebra::DMatrix;

use crate::error::EnlargeError;
use crate::exact::{rat_to_f64, IMat, QMat, Rat};
use crate::massaction::{rate_vector_scheduled, Chart, RateExpr, RateTerm};
use crate::network::{Complex, Network, RateConstant, Reaction, Species};
use crate::parser::{EnlargeSpec, RawComplex};
use crate::poly::{Poly, Scalar};

/// A network together with its eps-dependent rate schedule and the chain of
/// enlargement steps that produced it.
#[derive(Debug, Clone)]
pub struct EnlargedNet<S: Scalar> {
    pub network: Network,
    pub schedule: Vec<RateExpr<S>>,
    pub steps: Vec<Step<S>>,
}

impl<S: Scalar> EnlargedNet<S> {
    /// Wrap a plain network: schedule from its declared rates, no steps.
    pub fn base(net: &Network) -> Self {
        EnlargedNet {
            network: net.clone(),
            schedule: crate::massaction::base_schedule(net),
            steps: Vec::new(),
        }
    }

    /// Short kind names of the chain, e.g. ["E6", "E3"].
    pub fn chain_names(&self) -> Vec<&'static str> {
        self.steps.iter().map(|s| s.kind.name()).collect()
    }
}

/// One applied enlargement with the data needed for point lifting and local
/// systems. `pre_network`/`pre_schedule` snapshot the state before the step.
#[derive(Debug, Clone)]
pub struct Step<S: Scalar> {
    pub kind: StepKind<S>,
    pub pre_network: Network,
    pub pre_schedule: Vec<RateExpr<S>>,
}

#[derive(Debug, Clone)]
pub enum StepKind<S: Scalar> {
    /// new linearly dependent reaction (appended last)
    E1 { reactant: Complex, product: Complex },
    /// fully open extension anchored at the given base point
    E2 { x_coeffs: Vec<S> },
    /// new linearly dependent species: y - s.x is conserved, class constant 1/eps
    E3 {
        y_index: usize,
        s: Vec<Rat>,
        alpha: Vec<u32>,
    },
    /// new species with inflow-outflow at rate 1/eps; y(0) = 1
    E4 {
        y_index: usize,
        alpha: Vec<u32>,
        s_net: Vec<i64>,
    },
    /// new reversible reactions with new species; w(0) = x^gamma
    E5(SingularStep),
    /// reaction splitting; w(0) = V(x, kappa) o x^gamma
    E6(SingularStep),
}

/// Shared data of the singular enlargements E5/E6.
#[derive(Debug, Clone)]
pub struct SingularStep {
    /// index of the first new species in the enlarged network
    pub new_lo: usize,
    pub m_prime: usize,
    pub k_extra: usize,
    /// positions (within the new-species block) of the rows forming beta_hat
    pub hat: Vec<usize>,
    pub hathat: Vec<usize>,
    /// x-coupling A = alpha * beta_hat^{-1} (n_pre x m')
    pub coupling: QMat,
    /// monomial exponents gamma with w(0) = x^gamma (E5) (m' x n_pre)
    pub gamma: QMat,
    /// delta = -(beta_hathat * beta_hat^{-1})^T (m' x k)
    pub delta: QMat,
    pub beta_hat: QMat,
    pub beta_hat_inv: QMat,
    /// E5: reactant/product stoichiometries; E6: s and beta blocks
    pub x_fwd: IMat,
    pub x_bwd: IMat,
    pub y_fwd: IMat,
    pub y_bwd: IMat,
    /// E6 only: indices of the split reactions in the pre-step network
    pub splits: Vec<usize>,
}

impl<S: Scalar> StepKind<S> {
    pub fn name(&self) -> &'static str {
        match self {
            StepKind::E1 { .. } => "E1",
            StepKind::E2 { .. } => "E2",
            StepKind::E3 { .. } => "E3",
            StepKind::E4 { .. } => "E4",
            StepKind::E5(_) => "E5",
            StepKind::E6(_) => "E6",
        }
    }

    /// Number of fast coordinates this step adds to the tracked system.
    pub fn n_fast(&self) -> usize {
        match self {
            StepKind::E1 { .. } | StepKind::E2 { .. } | StepKind::E3 { .. } => 0,
            StepKind::E4 { .. } => 1,
            StepKind::E5(s) | StepKind::E6(s) => s.m_prime,
        }
    }
}

fn placeholder_rate() -> RateConstant {
    RateConstant::Fixed(crate::exact::rat(1))
}

/// E1: add a reaction over existing species whose reaction vector lies in
/// the stoichiometric subspace; its rate constant is eps.
pub fn apply_e1<S: Scalar>(
    base: &EnlargedNet<S>,
    reactant: Complex,
    product: Complex,
) -> Result<EnlargedNet<S>, EnlargeError> {
    let net = &base.network;
    let n = net.n_species();
    let reaction = Reaction {
        reactant,
        product,
        rate: placeholder_rate(),
    };
    let gvec = reaction.reaction_vec(n);
    // exact membership test: rank must not grow
    let gq = net.gamma().to_qmat();
    let mut aug_rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = gq.row(i);
        row.push(crate::exact::rat(gvec[i]));
        aug_rows.push(row);
    }
    let aug = QMat::from_rows(aug_rows);
    if aug.rank() != net.rank() {
        return Err(EnlargeError::NotInStoichiometricSubspace);
    }
    let mut reactions = net.reactions().to_vec();
    reactions.push(reaction.clone());
    let network = Network::new(net.species().to_vec(), reactions)?;
    let mut schedule = base.schedule.clone();
    schedule.push(RateExpr::eps_pow(1));
    let mut steps = base.steps.clone();
    steps.push(Step {
        kind: StepKind::E1 {
            reactant: reaction.reactant,
            product: reaction.product,
        },
        pre_network: net.clone(),
        pre_schedule: base.schedule.clone(),
    });
    Ok(EnlargedNet {
        network,
        schedule,
        steps,
    })
}

/// E2: the fully open extension. Missing flows are added with inflow rate
/// eps * x_base_i and outflow rate eps; existing flows have these quantities
/// added to their rate constants.
pub fn apply_e2<S: Scalar>(
    base: &EnlargedNet<S>,
    x_base: &[S],
) -> Result<EnlargedNet<S>, EnlargeError> {
    // the schedule references the base point of the bifurcation being
    // inherited; lifts through E3/E5/E6 have no eps-free base point
    for step in &base.steps {
        if matches!(
            step.kind,
            StepKind::E3 { .. } | StepKind::E5(_) | StepKind::E6(_)
        ) {
            return Err(EnlargeError::UnsupportedComposition);
        }
    }
    let net = &base.network;
    let n = net.n_species();
    assert_eq!(x_base.len(), n, "base point dimension");
    let mut reactions = net.reactions().to_vec();
    let mut schedule = base.schedule.clone();
    for i in 0..n {
        let inflow = Complex::from_pairs(&[(i, 1)]);
        let inflow_term = RateTerm {
            coeff: x_base[i].clone(),
            eps_pow: 1,
            param: None,
        };
        match net.find_reaction(&Complex::empty(), &inflow) {
            Some(j) => schedule[j].add_term(inflow_term),
            None => {
                reactions.push(Reaction {
                    reactant: Complex::empty(),
                    product: inflow.clone(),
                    rate: placeholder_rate(),
                });
                schedule.push(RateExpr(vec![inflow_term]));
            }
        }
        let outflow_term = RateTerm {
            coeff: S::one(),
            eps_pow: 1,
            param: None,
        };
        match net.find_reaction(&inflow, &Complex::empty()) {
            Some(j) => schedule[j].add_term(outflow_term),
            None => {
                reactions.push(Reaction {
                    reactant: inflow,
                    product: Complex::empty(),
                    rate: placeholder_rate(),
                });
                schedule.push(RateExpr(vec![outflow_term]));
            }
        }
    }
    let network = Network::new(net.species().to_vec(), reactions)?;
    let mut steps = base.steps.clone();
    steps.push(Step {
        kind: StepKind::E2 {
            x_coeffs: x_base.to_vec(),
        },
        pre_network: net.clone(),
        pre_schedule: base.schedule.clone(),
    });
    Ok(EnlargedNet {
        network,
        schedule,
        steps,
    })
}

/// E3: insert a new species into a nonempty subset of reactions without
/// changing the rank; the rate constant of reaction j is multiplied by
/// eps^alpha_j where alpha_j is the new species' reactant stoichiometry.
pub fn apply_e3<S: Scalar>(
    base: &EnlargedNet<S>,
    species: &str,
    rows: &[(usize, u32, u32)],
) -> Result<EnlargedNet<S>, EnlargeError> {
    let net = &base.network;
    if rows.iter().all(|&(_, a, b)| a == 0 && b == 0) {
        return Err(EnlargeError::EmptySubset);
    }
    if net.species_index(species).is_some() {
        return Err(EnlargeError::SpeciesExists(species.to_string()));
    }
    let n = net.n_species();
    let m = net.n_reactions();
    let y_index = n;
    let mut alpha = vec![0u32; m];
    let mut y_row = vec![0i64; m];
    let mut reactions = net.reactions().to_vec();
    for &(j0, a, b) in rows {
        let j = j0.checked_sub(1).ok_or(EnlargeError::MissingReaction(j0))?;
        if j >= m {
            return Err(EnlargeError::MissingReaction(j0));
        }
        reactions[j].reactant.add_species(y_index, a);
        reactions[j].product.add_species(y_index, b);
        alpha[j] += a;
        y_row[j] += b as i64 - a as i64;
    }
    // rank preservation: the new row must lie in the row space of Gamma,
    // i.e. Gamma^T s = y_row has an exact solution
    let gt = net.gamma().to_qmat().transpose();
    let rhs = QMat::from_rows(y_row.iter().map(|&v| vec![crate::exact::rat(v)]).collect());
    let mut aug_rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = gt.row(i);
        row.push(rhs.get(i, 0).clone());
        aug_rows.push(row);
    }
    if QMat::from_rows(aug_rows).rank() != net.rank() {
        return Err(EnlargeError::RankChanged);
    }
    let s = solve_row_space(&gt, &rhs).ok_or(EnlargeError::RankChanged)?;

    let mut species_list = net.species().to_vec();
    species_list.push(Species {
        name: species.to_string(),
    });
    let network = Network::new(species_list, reactions)?;
    let schedule: Vec<RateExpr<S>> = base
        .schedule
        .iter()
        .zip(alpha.iter())
        .map(|(e, &a)| e.scaled(&S::one(), a as i32))
        .collect();
    let mut steps = base.steps.clone();
    steps.push(Step {
        kind: StepKind::E3 { y_index, s, alpha },
        pre_network: net.clone(),
        pre_schedule: base.schedule.clone(),
    });
    Ok(EnlargedNet {
        network,
        schedule,
        steps,
    })
}

/// Solve A x = b where A may be rank deficient but the system is consistent;
/// returns one exact solution. When the solution is not unique, components
/// on earlier variables are preferred to be zero (the certificate then names
/// later species, matching the classes used in the worked examples).
fn solve_row_space(a: &QMat, b: &QMat) -> Option<Vec<Rat>> {
    let m = a.rows;
    let n = a.cols;
    let mut aug = QMat::zeros(m, n + 1);
    for i in 0..m {
        for j in 0..n {
            // reversed column order: pivots land on the latest variables
            aug.set(i, j, a.get(i, n - 1 - j).clone());
        }
        aug.set(i, n, b.get(i, 0).clone());
    }
    let (r, pivots) = aug.rref();
    if pivots.contains(&n) {
        return None; // inconsistent
    }
    let mut x = vec![crate::exact::rat(0); n];
    for (pi, &pc) in pivots.iter().enumerate() {
        x[n - 1 - pc] = r.get(pi, n).clone();
    }
    Some(x)
}

/// E4: insert a new species into some (possibly empty) subset of reactions
/// and add its inflow and outflow at rate 1/eps; y(0) = 1.
pub fn apply_e4<S: Scalar>(
    base: &EnlargedNet<S>,
    species: &str,
    rows: &[(usize, u32, u32)],
) -> Result<EnlargedNet<S>, EnlargeError> {
    let net = &base.network;
    if net.species_index(species).is_some() {
        return Err(EnlargeError::SpeciesExists(species.to_string()));
    }
    let n = net.n_species();
    let m = net.n_reactions();
    let y_index = n;
    let mut alpha = vec![0u32; m];
    let mut s_net = vec![0i64; m];
    let mut reactions = net.reactions().to_vec();
    for &(j0, a, b) in rows {
        let j = j0.checked_sub(1).ok_or(EnlargeError::MissingReaction(j0))?;
        if j >= m {
            return Err(EnlargeError::MissingReaction(j0));
        }
        reactions[j].reactant.add_species(y_index, a);
        reactions[j].product.add_species(y_index, b);
        alpha[j] += a;
        s_net[j] += b as i64 - a as i64;
    }
    let y = Complex::from_pairs(&[(y_index, 1)]);
    reactions.push(Reaction {
        reactant: Complex::empty(),
        product: y.clone(),
        rate: placeholder_rate(),
    });
    reactions.push(Reaction {
        reactant: y,
        product: Complex::empty(),
        rate: placeholder_rate(),
    });
    let mut species_list = net.species().to_vec();
    species_list.push(Species {
        name: species.to_string(),
    });
    let network = Network::new(species_list, reactions)?;
    let mut schedule = base.schedule.clone();
    schedule.push(RateExpr::eps_pow(-1));
    schedule.push(RateExpr::eps_pow(-1));
    let mut steps = base.steps.clone();
    steps.push(Step {
        kind: StepKind::E4 {
            y_index,
            alpha,
            s_net,
        },
        pre_network: net.clone(),
        pre_schedule: base.schedule.clone(),
    });
    Ok(EnlargedNet {
        network,
        schedule,
        steps,
    })
}

/// E5: add new reversible reactions involving new species. The forward rate
/// constant of reaction i is eps^-(column sum of b_hat), the backward one
/// eps^-(column sum of b'_hat), realizing the proof's rate vector.
pub fn apply_e5<S: Scalar>(
    base: &EnlargedNet<S>,
    reactions_spec: &[(RawComplex, RawComplex)],
) -> Result<EnlargedNet<S>, EnlargeError> {
    let net = &base.network;
    let n = net.n_species();
    let m_prime = reactions_spec.len();
    // collect new species in order of first appearance
    let mut new_names: Vec<String> = Vec::new();
    for (lhs, rhs) in reactions_spec {
        for (_, name) in lhs.iter().chain(rhs.iter()) {
            if net.species_index(name).is_none() && !new_names.contains(name) {
                new_names.push(name.clone());
            }
        }
    }
    let total_new = new_names.len();
    if total_new < m_prime {
        return Err(EnlargeError::BetaRankDeficient {
            got: total_new,
            need: m_prime,
        });
    }
    let k_extra = total_new - m_prime;
    let new_lo = n;
    let name_to_new = |name: &str| -> Option<usize> { new_names.iter().position(|s| s == name) };
    let mut a = IMat::zeros(n, m_prime);
    let mut a2 = IMat::zeros(n, m_prime);
    let mut b = IMat::zeros(total_new, m_prime);
    let mut b2 = IMat::zeros(total_new, m_prime);
    let mut new_reactions = Vec::new();
    for (i, (lhs, rhs)) in reactions_spec.iter().enumerate() {
        let mut touched_new = false;
        let mut reactant = Complex::empty();
        let mut product = Complex::empty();
        for (coeff, name) in lhs {
            match net.species_index(name) {
                Some(idx) => {
                    a.set(idx, i, a.get(idx, i) + *coeff as i64);
                    reactant.add_species(idx, *coeff);
                }
                None => {
                    let yi = name_to_new(name).unwrap();
                    b.set(yi, i, b.get(yi, i) + *coeff as i64);
                    reactant.add_species(new_lo + yi, *coeff);
                    touched_new = true;
                }
            }
        }
        for (coeff, name) in rhs {
            match net.species_index(name) {
                Some(idx) => {
                    a2.set(idx, i, a2.get(idx, i) + *coeff as i64);
                    product.add_species(idx, *coeff);
                }
                None => {
                    let yi = name_to_new(name).unwrap();
                    b2.set(yi, i, b2.get(yi, i) + *coeff as i64);
                    product.add_species(new_lo + yi, *coeff);
                    touched_new = true;
                }
            }
        }
        if !touched_new {
            return Err(EnlargeError::NoNewSpecies(i + 1));
        }
        new_reactions.push((reactant, product));
    }
    // beta = b' - b must have rank m'
    let mut beta = IMat::zeros(total_new, m_prime);
    for i in 0..total_new {
        for j in 0..m_prime {
            beta.set(i, j, b2.get(i, j) - b.get(i, j));
        }
    }
    let singular = build_singular_data(
        &beta,
        new_lo,
        m_prime,
        k_extra,
        &a,
        &a2,
        &b,
        &b2,
        Vec::new(),
    )?;

    let mut species_list = net.species().to_vec();
    for name in &new_names {
        species_list.push(Species { name: name.clone() });
    }
    let mut reactions = net.reactions().to_vec();
    let mut schedule = base.schedule.clone();
    for (i, (reactant, product)) in new_reactions.into_iter().enumerate() {
        // forward: eps^{-sum of b_hat column i}; backward with b'_hat
        let fwd_pow: i64 = singular.hat.iter().map(|&r| b.get(r, i)).sum();
        let bwd_pow: i64 = singular.hat.iter().map(|&r| b2.get(r, i)).sum();
        reactions.push(Reaction {
            reactant: reactant.clone(),
            product: product.clone(),
            rate: placeholder_rate(),
        });
        schedule.push(RateExpr::eps_pow(-(fwd_pow as i32)));
        reactions.push(Reaction {
            reactant: product,
            product: reactant,
            rate: placeholder_rate(),
        });
        schedule.push(RateExpr::eps_pow(-(bwd_pow as i32)));
    }
    let network = Network::new(species_list, reactions)?;
    let mut steps = base.steps.clone();
    steps.push(Step {
        kind: StepKind::E5(singular),
        pre_network: net.clone(),
        pre_schedule: base.schedule.clone(),
    });
    Ok(EnlargedNet {
        network,
        schedule,
        steps,
    })
}

/// E6: split existing reactions a_i.X -> b_i.X into chains
/// a_i.X -> s_i.X + beta_i.Y -> b_i.X. The second legs get rate constants
/// eps^-(column sum of beta_hat) and are appended after the surviving
/// reactions; first legs stay in place with their original rate constants.
pub fn apply_e6<S: Scalar>(
    base: &EnlargedNet<S>,
    splits_spec: &[(usize, RawComplex)],
) -> Result<EnlargedNet<S>, EnlargeError> {
    let net = &base.network;
    let n = net.n_species();
    let m_prime = splits_spec.len();
    let mut new_names: Vec<String> = Vec::new();
    for (_, inter) in splits_spec {
        for (_, name) in inter {
            if net.species_index(name).is_none() && !new_names.contains(name) {
                new_names.push(name.clone());
            }
        }
    }
    let total_new = new_names.len();
    if total_new < m_prime {
        return Err(EnlargeError::BetaRankDeficient {
            got: total_new,
            need: m_prime,
        });
    }
    let k_extra = total_new - m_prime;
    let new_lo = n;
    let mut s_mat = IMat::zeros(n, m_prime);
    let mut beta = IMat::zeros(total_new, m_prime);
    let mut b_mat = IMat::zeros(n, m_prime);
    let mut splits = Vec::new();
    let mut intermediates = Vec::new();
    for (i, (j0, inter)) in splits_spec.iter().enumerate() {
        let j = j0
            .checked_sub(1)
            .ok_or(EnlargeError::MissingReaction(*j0))?;
        if j >= net.n_reactions() {
            return Err(EnlargeError::MissingReaction(*j0));
        }
        if splits.contains(&j) {
            return Err(EnlargeError::MissingReaction(*j0));
        }
        splits.push(j);
        let mut inter_complex = Complex::empty();
        for (coeff, name) in inter {
            match net.species_index(name) {
                Some(idx) => {
                    s_mat.set(idx, i, s_mat.get(idx, i) + *coeff as i64);
                    inter_complex.add_species(idx, *coeff);
                }
                None => {
                    let yi = new_names.iter().position(|s| s == name).unwrap();
                    beta.set(yi, i, beta.get(yi, i) + *coeff as i64);
                    inter_complex.add_species(new_lo + yi, *coeff);
                }
            }
        }
        let prod = net.reactions()[j].product.to_vec(n);
        for idx in 0..n {
            b_mat.set(idx, i, prod[idx]);
        }
        intermediates.push(inter_complex);
    }
    let singular = build_singular_data(
        &beta,
        new_lo,
        m_prime,
        k_extra,
        &s_mat,
        &b_mat,
        &beta,
        &IMat::zeros(total_new, m_prime),
        splits.clone(),
    )?;

    let mut species_list = net.species().to_vec();
    for name in &new_names {
        species_list.push(Species { name: name.clone() });
    }
    let mut reactions = net.reactions().to_vec();
    let mut schedule = base.schedule.clone();
    // first legs replace the split reactions in place
    for (i, &j) in splits.iter().enumerate() {
        reactions[j] = Reaction {
            reactant: reactions[j].reactant.clone(),
            product: intermediates[i].clone(),
            rate: reactions[j].rate.clone(),
        };
    }
    // second legs appended, with rate eps^{-colsum(beta_hat)}
    for (i, &j) in splits.iter().enumerate() {
        let pow: i64 = singular.hat.iter().map(|&r| beta.get(r, i)).sum();
        reactions.push(Reaction {
            reactant: intermediates[i].clone(),
            product: net.reactions()[j].product.clone(),
            rate: placeholder_rate(),
        });
        schedule.push(RateExpr::eps_pow(-(pow as i32)));
    }
    let network = Network::new(species_list, reactions)?;
    let mut steps = base.steps.clone();
    steps.push(Step {
        kind: StepKind::E6(singular),
        pre_network: net.clone(),
        pre_schedule: base.schedule.clone(),
    });
    Ok(EnlargedNet {
        network,
        schedule,
        steps,
    })
}

/// Shared E5/E6 construction: row selection for beta_hat and the derived
/// rational matrices.
#[allow(clippy::too_many_arguments)]
fn build_singular_data(
    beta: &IMat,
    new_lo: usize,
    m_prime: usize,
    k_extra: usize,
    x_fwd: &IMat,
    x_bwd: &IMat,
    y_fwd: &IMat,
    y_bwd: &IMat,
    splits: Vec<usize>,
) -> Result<SingularStep, EnlargeError> {
    let beta_q = beta.to_qmat();
    let rank = beta_q.rank();
    if rank != m_prime {
        return Err(EnlargeError::BetaRankDeficient {
            got: rank,
            need: m_prime,
        });
    }
    let hat = beta_q
        .lex_independent_rows(m_prime)
        .ok_or(EnlargeError::BetaRankDeficient {
            got: rank,
            need: m_prime,
        })?;
    let hathat: Vec<usize> = (0..beta.rows).filter(|r| !hat.contains(r)).collect();
    let mut beta_hat = QMat::zeros(m_prime, m_prime);
    for (bi, &r) in hat.iter().enumerate() {
        for j in 0..m_prime {
            beta_hat.set(bi, j, crate::exact::rat(beta.get(r, j)));
        }
    }
    let beta_hat_inv = beta_hat.inverse().expect("nonsingular by construction");
    let mut beta_hathat = QMat::zeros(k_extra, m_prime);
    for (bi, &r) in hathat.iter().enumerate() {
        for j in 0..m_prime {
            beta_hathat.set(bi, j, crate::exact::rat(beta.get(r, j)));
        }
    }
    // alpha: E5 uses a' - a, E6 uses s - b; both are x_bwd - x_fwd ... E5
    // passes (a, a') and E6 passes (s, b), so alpha = second - first for E5
    // and first - second for E6. Normalize by passing x matrices so that
    // alpha = x_alpha below.
    let n = x_fwd.rows;
    let mut alpha = IMat::zeros(n, m_prime);
    let e6 = !splits.is_empty() || (y_bwd.data.iter().all(|&v| v == 0) && k_extra != usize::MAX);
    for i in 0..n {
        for j in 0..m_prime {
            let v = if e6 && splits.is_empty() {
                // unreachable; kept for clarity
                0
            } else if !splits.is_empty() {
                // E6: alpha = s - b
                x_fwd.get(i, j) - x_bwd.get(i, j)
            } else {
                // E5: alpha = a' - a
                x_bwd.get(i, j) - x_fwd.get(i, j)
            };
            alpha.set(i, j, v);
        }
    }
    let coupling = alpha.to_qmat().mul(&beta_hat_inv);
    // gamma = -(alpha beta_hat^{-1})^T for E5; -(s beta_hat^{-1})^T for E6
    let gamma_src = if !splits.is_empty() {
        x_fwd.to_qmat()
    } else {
        alpha.to_qmat()
    };
    let gamma = gamma_src.mul(&beta_hat_inv).transpose().neg_mat();
    let delta = beta_hathat.mul(&beta_hat_inv).transpose().neg_mat();
    Ok(SingularStep {
        new_lo,
        m_prime,
        k_extra,
        hat,
        hathat,
        coupling,
        gamma,
        delta,
        beta_hat,
        beta_hat_inv,
        x_fwd: x_fwd.clone(),
        x_bwd: x_bwd.clone(),
        y_fwd: y_fwd.clone(),
        y_bwd: y_bwd.clone(),
        splits,
    })
}

impl QMat {
    fn neg_mat(&self) -> QMat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = -v.clone();
        }
        out
    }
}

/// Apply a parsed enlargement spec to a running enlarged network.
/// `x_base` supplies the anchoring base point required by E2.
pub fn apply_spec<S: Scalar>(
    base: &EnlargedNet<S>,
    spec: &EnlargeSpec,
    x_base: Option<&[S]>,
) -> Result<EnlargedNet<S>, EnlargeError> {
    match spec {
        EnlargeSpec::E1 { reactant, product } => {
            let (r, p) = resolve_existing(&base.network, reactant, product)?;
            apply_e1(base, r, p)
        }
        EnlargeSpec::E2 => {
            let xb: Vec<S> = match x_base {
                Some(v) => v.to_vec(),
                None => vec![S::one(); base.network.n_species()],
            };
            apply_e2(base, &xb)
        }
        EnlargeSpec::E3 { species, rows } => apply_e3(base, species, rows),
        EnlargeSpec::E4 { species, rows } => apply_e4(base, species, rows),
        EnlargeSpec::E5 { reactions } => apply_e5(base, reactions),
        EnlargeSpec::E6 { splits } => apply_e6(base, splits),
    }
}

fn resolve_existing(
    net: &Network,
    reactant: &RawComplex,
    product: &RawComplex,
) -> Result<(Complex, Complex), EnlargeError> {
    let resolve = |raw: &RawComplex| -> Result<Complex, EnlargeError> {
        let mut c = Complex::empty();
        for (coeff, name) in raw {
            let idx = net
                .species_index(name)
                .ok_or(EnlargeError::NotInStoichiometricSubspace)?;
            c.add_species(idx, *coeff);
        }
        Ok(c)
    };
    Ok((resolve(reactant)?, resolve(product)?))
}

/// Apply a sequence of enlargement specs with a shared eps.
pub fn compose<S: Scalar>(
    net: &Network,
    specs: &[EnlargeSpec],
    x_base: Option<&[S]>,
) -> Result<EnlargedNet<S>, EnlargeError> {
    let mut running = EnlargedNet::base(net);
    for (i, spec) in specs.iter().enumerate() {
        running = apply_spec(&running, spec, x_base).map_err(|e| EnlargeError::ComposeStep {
            index: i,
            source: Box::new(e),
        })?;
    }
    Ok(running)
}

impl Step<f64> {
    /// Lift a point of the pre-step network onto the proof's positive
    /// stoichiometric class of the post-step network, at the given eps.
    pub fn lift(&self, p: &[f64], kappa: &[f64], eps: f64) -> Vec<f64> {
        match &self.kind {
            StepKind::E1 { .. } | StepKind::E2 { .. } => p.to_vec(),
            StepKind::E3 { s, .. } => {
                let mut out = p.to_vec();
                let sdot: f64 = s
                    .iter()
                    .zip(p.iter())
                    .map(|(si, xi)| rat_to_f64(si) * xi)
                    .sum();
                out.push(sdot + 1.0 / eps);
                out
            }
            StepKind::E4 { .. } => {
                let mut out = p.to_vec();
                out.push(1.0);
                out
            }
            StepKind::E5(s) | StepKind::E6(s) => {
                let w0 = self.w_limit(p, kappa, eps);
                let n_pre = p.len();
                let total_new = s.hat.len() + s.hathat.len();
                let mut out = vec![0.0; n_pre + total_new];
                for i in 0..n_pre {
                    let mut x = p[i];
                    for (c, w) in w0.iter().enumerate() {
                        x += eps * rat_to_f64(s.coupling.get(i, c)) * w;
                    }
                    out[i] = x;
                }
                for (hi, &slot) in s.hat.iter().enumerate() {
                    out[n_pre + slot] = eps * w0[hi];
                }
                for (ci, &slot) in s.hathat.iter().enumerate() {
                    let mut v = 1.0;
                    for (hi, w) in w0.iter().enumerate() {
                        v -= eps * rat_to_f64(s.delta.get(hi, ci)) * w;
                    }
                    out[n_pre + slot] = v;
                }
                out
            }
        }
    }

    /// The singular-limit value w(0) of the fast coordinates for E5/E6
    /// (E5: x^gamma; E6: V(x, kappa) o x^gamma); empty otherwise.
    pub fn w_limit(&self, p: &[f64], kappa: &[f64], eps: f64) -> Vec<f64> {
        match &self.kind {
            StepKind::E5(s) => (0..s.m_prime)
                .map(|i| {
                    let mut w = 1.0;
                    for (l, &x) in p.iter().enumerate() {
                        w *= x.powf(rat_to_f64(s.gamma.get(i, l)));
                    }
                    w
                })
                .collect(),
            StepKind::E6(s) => {
                let v = rate_vector_scheduled(&self.pre_network, &self.pre_schedule, eps, p, kappa);
                (0..s.m_prime)
                    .map(|i| {
                        let mut w = 1.0;
                        for (l, &x) in p.iter().enumerate() {
                            w *= x.powf(rat_to_f64(s.gamma.get(i, l)));
                        }
                        for (l, &j) in s.splits.iter().enumerate() {
                            w *= v[j].powf(rat_to_f64(s.beta_hat_inv.get(l, i)));
                        }
                        w
                    })
                    .collect()
            }
            StepKind::E4 { .. } => vec![1.0],
            _ => Vec::new(),
        }
    }

    /// Jacobian of the fast subsystem at the singular limit: exactly -1 for
    /// E4; -beta_hat diag(T1) beta_hat^T diag(1/w0) for E5, and
    /// -beta_hat diag(v_split) beta_hat^T diag(1/w0) for E6. Eigenvalues are
    /// real and negative whenever the base point is positive.
    pub fn fast_jacobian_at_limit(&self, p: &[f64], kappa: &[f64], eps: f64) -> DMatrix<f64> {
        match &self.kind {
            StepKind::E4 { .. } => DMatrix::from_element(1, 1, -1.0),
            StepKind::E5(s) => {
                let w0 = self.w_limit(p, kappa, eps);
                // T1_i = x^{a col i} * w0^{b_hat col i}
                let t1: Vec<f64> = (0..s.m_prime)
                    .map(|i| {
                        let mut v = 1.0;
                        for (l, &x) in p.iter().enumerate() {
                            v *= x.powi(s.x_fwd.get(l, i) as i32);
                        }
                        for (hi, &row) in s.hat.iter().enumerate() {
                            v *= w0[hi].powi(s.y_fwd.get(row, i) as i32);
                        }
                        v
                    })
                    .collect();
                singular_fast_jacobian(&s.beta_hat, &t1, &w0)
            }
            StepKind::E6(s) => {
                let v = rate_vector_scheduled(&self.pre_network, &self.pre_schedule, eps, p, kappa);
                let vs: Vec<f64> = s.splits.iter().map(|&j| v[j]).collect();
                let w0 = self.w_limit(p, kappa, eps);
                singular_fast_jacobian(&s.beta_hat, &vs, &w0)
            }
            _ => DMatrix::zeros(0, 0),
        }
    }
}

fn singular_fast_jacobian(beta_hat: &QMat, diag1: &[f64], w0: &[f64]) -> DMatrix<f64> {
    let m = beta_hat.rows;
    let bh = DMatrix::from_fn(m, m, |i, j| rat_to_f64(beta_hat.get(i, j)));
    let d1 = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(diag1));
    let dw = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(m, |i, _| 1.0 / w0[i]));
    -(&bh * d1 * bh.transpose() * dw)
}

/// The local slow-fast coordinate system of a single enlargement on the base
/// chart: polynomials in [theta(r), fast(n_fast), kappa(p), eps]. The fast
/// equations are returned multiplied by eps, so all entries are polynomial.
#[derive(Debug, Clone)]
pub struct LocalSystem<S: Scalar> {
    pub n_slow: usize,
    pub n_fast: usize,
    pub n_param: usize,
    pub slow: Vec<Poly<S>>,
    pub fast_times_eps: Vec<Poly<S>>,
}

impl<S: Scalar> LocalSystem<S> {
    pub fn nvars(&self) -> usize {
        self.n_slow + self.n_fast + self.n_param + 1
    }
}

/// Build the local system realizing the proof's reduced equations for a
/// single enlargement step applied to `chart`'s network at `x_base`.
pub fn local_system<S: Scalar>(
    enl: &EnlargedNet<S>,
    chart: &Chart,
    x_base: &[S],
) -> Result<LocalSystem<S>, EnlargeError> {
    assert_eq!(
        enl.steps.len(),
        1,
        "local systems are built for single enlargements"
    );
    let step = &enl.steps[0];
    let base_net = &step.pre_network;
    let base_sched = &step.pre_schedule;
    let r = chart.dim();
    let n = base_net.n_species();
    let p = base_net.free_params().len();
    let n_fast = step.kind.n_fast();
    let nvars = r + n_fast + p + 1;
    let eps_var = nvars - 1;
    let fast_off = r;

    // z_i(theta) = x_base_i + (Gamma0 theta)_i
    let z: Vec<Poly<S>> = (0..n)
        .map(|i| {
            let mut poly = Poly::constant(nvars, x_base[i].clone());
            for kcol in 0..r {
                let g = chart.gamma0.get(i, kcol);
                if g != 0 {
                    poly = poly.add(&Poly::var(nvars, kcol).scale(&S::from_int(g)));
                }
            }
            poly
        })
        .collect();
    let rate_poly = |j: usize| -> Poly<S> {
        // rate expr in [.., kappa.., eps] layout with state slots r + n_fast
        base_sched[j].to_poly(r + n_fast, p, true, None)
    };
    let monomial = |j: usize, x: &[Poly<S>]| -> Poly<S> {
        let gl = base_net.gamma_l();
        let mut poly = rate_poly(j);
        for i in 0..n {
            let e = gl.get(i, j);
            if e > 0 {
                poly = poly.mul(&x[i].pow(e as u32));
            }
        }
        poly
    };
    let lambda_combine = |v: &[Poly<S>]| -> Vec<Poly<S>> {
        (0..r)
            .map(|i| {
                let mut f = Poly::zero(nvars);
                for j in 0..base_net.n_reactions() {
                    let lam = chart.lambda.get(i, j);
                    if !Scalar::is_zero(lam) {
                        f = f.add(&v[j].scale(&S::from_rat(lam)));
                    }
                }
                f
            })
            .collect()
    };
    let eps = Poly::<S>::var(nvars, eps_var);

    match &step.kind {
        StepKind::E1 { reactant, product } => {
            let v: Vec<Poly<S>> = (0..base_net.n_reactions())
                .map(|j| monomial(j, &z))
                .collect();
            let mut slow = lambda_combine(&v);
            // dependence certificate: Gamma0 s = reaction vector, exact
            let reaction = Reaction {
                reactant: reactant.clone(),
                product: product.clone(),
                rate: placeholder_rate(),
            };
            let gvec = reaction.reaction_vec(n);
            let rhs = QMat::from_rows(gvec.iter().map(|&v| vec![crate::exact::rat(v)]).collect());
            let s = chart
                .gamma0
                .to_qmat()
                .solve_full_column_rank(&rhs)
                .ok_or(EnlargeError::NotInStoichiometricSubspace)?;
            // new monomial z^alpha with rate eps
            let mut mono = eps.clone();
            for (&idx, &coeff) in &reactant.coeffs {
                mono = mono.mul(&z[idx].pow(coeff));
            }
            for (i, item) in slow.iter_mut().enumerate() {
                *item = item.add(&mono.scale(&S::from_rat(s.get(i, 0))));
            }
            Ok(LocalSystem {
                n_slow: r,
                n_fast: 0,
                n_param: p,
                slow,
                fast_times_eps: vec![],
            })
        }
        StepKind::E2 { .. } => {
            let v: Vec<Poly<S>> = (0..base_net.n_reactions())
                .map(|j| monomial(j, &z))
                .collect();
            let mut slow = lambda_combine(&v);
            for (i, item) in slow.iter_mut().enumerate() {
                *item = item.sub(&eps.mul(&Poly::var(nvars, i)));
            }
            Ok(LocalSystem {
                n_slow: r,
                n_fast: 0,
                n_param: p,
                slow,
                fast_times_eps: vec![],
            })
        }
        StepKind::E3 { s, alpha, .. } => {
            // f_i = sum_j Lambda_ij v_j (1 + eps s.z)^alpha_j
            let mut sdotz = Poly::zero(nvars);
            for (i, si) in s.iter().enumerate() {
                if !Scalar::is_zero(si) {
                    sdotz = sdotz.add(&z[i].scale(&S::from_rat(si)));
                }
            }
            let one_plus = Poly::constant(nvars, S::one()).add(&eps.mul(&sdotz));
            let v: Vec<Poly<S>> = (0..base_net.n_reactions())
                .map(|j| monomial(j, &z).mul(&one_plus.pow(alpha[j])))
                .collect();
            let slow = lambda_combine(&v);
            Ok(LocalSystem {
                n_slow: r,
                n_fast: 0,
                n_param: p,
                slow,
                fast_times_eps: vec![],
            })
        }
        StepKind::E4 { alpha, s_net, .. } => {
            let y = Poly::<S>::var(nvars, fast_off);
            let v: Vec<Poly<S>> = (0..base_net.n_reactions())
                .map(|j| monomial(j, &z).mul(&y.pow(alpha[j])))
                .collect();
            let slow = lambda_combine(&v);
            // eps ydot = eps s (v o y^alpha) + (1 - y)
            let mut fast = Poly::constant(nvars, S::one()).sub(&y);
            for (j, vj) in v.iter().enumerate() {
                if s_net[j] != 0 {
                    fast = fast.add(&eps.mul(vj).scale(&S::from_int(s_net[j])));
                }
            }
            Ok(LocalSystem {
                n_slow: r,
                n_fast: 1,
                n_param: p,
                slow,
                fast_times_eps: vec![fast],
            })
        }
        StepKind::E5(sing) => {
            let x = coupled_x(&z, sing, nvars, fast_off, &eps);
            let v: Vec<Poly<S>> = (0..base_net.n_reactions())
                .map(|j| monomial(j, &x))
                .collect();
            let slow = lambda_combine(&v);
            // q_hat_i = x^{a_i} w^{bhat_i} yhh^{bhh_i} - x^{a'_i} w^{b'hat_i} yhh^{b'hh_i}
            let yhh = hathat_coords(sing, nvars, fast_off, &eps);
            let mut fast = Vec::with_capacity(sing.m_prime);
            for i in 0..sing.m_prime {
                let t1 =
                    singular_monomial(&x, sing, &sing.x_fwd, &sing.y_fwd, i, nvars, fast_off, &yhh);
                let t2 =
                    singular_monomial(&x, sing, &sing.x_bwd, &sing.y_bwd, i, nvars, fast_off, &yhh);
                fast.push(t1.sub(&t2));
            }
            let fast_be = beta_hat_apply(sing, &fast, nvars);
            Ok(LocalSystem {
                n_slow: r,
                n_fast: sing.m_prime,
                n_param: p,
                slow,
                fast_times_eps: fast_be,
            })
        }
        StepKind::E6(sing) => {
            let x = coupled_x(&z, sing, nvars, fast_off, &eps);
            let v: Vec<Poly<S>> = (0..base_net.n_reactions())
                .map(|j| monomial(j, &x))
                .collect();
            let slow = lambda_combine(&v);
            let yhh = hathat_coords(sing, nvars, fast_off, &eps);
            let mut fast = Vec::with_capacity(sing.m_prime);
            for (i, &j) in sing.splits.iter().enumerate() {
                // v_j(x,kappa) - x^{s_i} w^{beta_hat_i} yhh^{beta_hathat_i}
                let t2 =
                    singular_monomial(&x, sing, &sing.x_fwd, &sing.y_fwd, i, nvars, fast_off, &yhh);
                fast.push(v[j].sub(&t2));
            }
            let fast_be = beta_hat_apply(sing, &fast, nvars);
            Ok(LocalSystem {
                n_slow: r,
                n_fast: sing.m_prime,
                n_param: p,
                slow,
                fast_times_eps: fast_be,
            })
        }
    }
}

/// x(theta, w, eps) = z(theta) + eps * coupling * w
fn coupled_x<S: Scalar>(
    z: &[Poly<S>],
    sing: &SingularStep,
    nvars: usize,
    fast_off: usize,
    eps: &Poly<S>,
) -> Vec<Poly<S>> {
    z.iter()
        .enumerate()
        .map(|(i, zi)| {
            let mut x = zi.clone();
            for c in 0..sing.m_prime {
                let a = sing.coupling.get(i, c);
                if !Scalar::is_zero(a) {
                    let w = Poly::var(nvars, fast_off + c);
                    x = x.add(&eps.mul(&w).scale(&S::from_rat(a)));
                }
            }
            x
        })
        .collect()
}

/// yhathat_c = 1 - eps (delta^T w)_c
fn hathat_coords<S: Scalar>(
    sing: &SingularStep,
    nvars: usize,
    fast_off: usize,
    eps: &Poly<S>,
) -> Vec<Poly<S>> {
    (0..sing.k_extra)
        .map(|c| {
            let mut y = Poly::constant(nvars, S::one());
            for i in 0..sing.m_prime {
                let d = sing.delta.get(i, c);
                if !Scalar::is_zero(d) {
                    let w = Poly::var(nvars, fast_off + i);
                    y = y.sub(&eps.mul(&w).scale(&S::from_rat(d)));
                }
            }
            y
        })
        .collect()
}

/// x^{xs column i} * w^{ys hat-rows column i} * yhh^{ys hathat-rows column i}
#[allow(clippy::too_many_arguments)]
fn singular_monomial<S: Scalar>(
    x: &[Poly<S>],
    sing: &SingularStep,
    xs: &IMat,
    ys: &IMat,
    col: usize,
    nvars: usize,
    fast_off: usize,
    yhh: &[Poly<S>],
) -> Poly<S> {
    let mut t = Poly::constant(nvars, S::one());
    for (l, xl) in x.iter().enumerate() {
        let e = xs.get(l, col);
        if e > 0 {
            t = t.mul(&xl.pow(e as u32));
        }
    }
    for (hi, &row) in sing.hat.iter().enumerate() {
        let e = ys.get(row, col);
        if e > 0 {
            t = t.mul(&Poly::var(nvars, fast_off + hi).pow(e as u32));
        }
    }
    for (ci, &row) in sing.hathat.iter().enumerate() {
        let e = ys.get(row, col);
        if e > 0 {
            t = t.mul(&yhh[ci].pow(e as u32));
        }
    }
    t
}

fn beta_hat_apply<S: Scalar>(sing: &SingularStep, q: &[Poly<S>], nvars: usize) -> Vec<Poly<S>> {
    (0..sing.m_prime)
        .map(|i| {
            let mut acc = Poly::zero(nvars);
            for (j, qj) in q.iter().enumerate() {
                let b = sing.beta_hat.get(i, j);
                if !Scalar::is_zero(b) {
                    acc = acc.add(&qj.scale(&S::from_rat(b)));
                }
            }
            acc
        })
        .collect()
}

/// Render the enlarged network in the DSL with schedule annotations.
pub fn render_enlarged<S: Scalar>(enl: &EnlargedNet<S>) -> String {
    let net = &enl.network;
    let params = net.free_params();
    let mut out = String::new();
    out.push_str("species ");
    let names: Vec<&str> = net.species().iter().map(|s| s.name.as_str()).collect();
    out.push_str(&names.join(", "));
    out.push('\n');
    for (j, r) in net.reactions().iter().enumerate() {
        out.push_str(&format!(
            "{} -> {} @ {}\n",
            crate::parser::fmt_complex(&r.reactant, net),
            crate::parser::fmt_complex(&r.product, net),
            enl.schedule[j].display(&params),
        ));
    }
    out
}

/// Evaluate every schedule entry at (eps, kappa); used by positivity checks.
pub fn schedule_rates(enl: &EnlargedNet<f64>, eps: f64, kappa: &[f64]) -> Vec<f64> {
    enl.schedule.iter().map(|e| e.eval(&eps, kappa)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::massaction::make_chart;
    use crate::parser::{parse_file, parse_network};

    fn r0() -> Network {
        parse_network("X1 + 2 X2 -> 3 X2 @ 1 ; X2 -> X1 @ k").unwrap()
    }

    fn rat_base(net: &Network) -> (EnlargedNet<Rat>, Chart, Vec<Rat>) {
        let enl = EnlargedNet::<Rat>::base(net);
        let chart = make_chart(net, &vec![1.0; net.n_species()]).unwrap();
        let x_base = vec![rat(1); net.n_species()];
        (enl, chart, x_base)
    }

    /// Polynomial in [theta, (fast...), kappa, eps] for the R0 family:
    /// (1+theta)(1-kappa-theta^2) with given variable layout.
    fn r0_base_poly(nvars: usize, kappa_var: usize) -> Poly<Rat> {
        let t = Poly::<Rat>::var(nvars, 0);
        let k = Poly::<Rat>::var(nvars, kappa_var);
        let one = Poly::constant(nvars, rat(1));
        one.add(&t).mul(&one.sub(&k).sub(&t.pow(2)))
    }

    #[test]
    fn e1_reduced_field_matches_paper() {
        // R1: f_hat = (1+theta)(1-kappa-theta^2) + eps (1 - theta^2)
        let net = r0();
        let (base, chart, xb) = rat_base(&net);
        let spec = parse_file("X1 + 2 X2 -> 3 X2 @ 1 ; X2 -> X1 @ k\nenlarge E1: X1 + X2 -> 2 X2")
            .unwrap();
        let enl = apply_spec(&base, &spec.enlargements[0], None).unwrap();
        assert_eq!(enl.network.rank(), 1);
        let ls = local_system(&enl, &chart, &xb).unwrap();
        // vars: theta, kappa, eps
        let t = Poly::<Rat>::var(3, 0);
        let e = Poly::<Rat>::var(3, 2);
        let one = Poly::constant(3, rat(1));
        let target = r0_base_poly(3, 1).add(&e.mul(&one.sub(&t.pow(2))));
        assert_eq!(ls.slow[0], target);
    }

    #[test]
    fn e1_rejects_rank_increase() {
        let net = r0();
        let base = EnlargedNet::<f64>::base(&net);
        // 0 -> X1 has reaction vector (1,0), not in span{(-1,1)}
        let err = apply_e1(&base, Complex::empty(), Complex::from_pairs(&[(0, 1)])).unwrap_err();
        assert!(matches!(err, EnlargeError::NotInStoichiometricSubspace));
        // the reverse of an existing reaction is always valid
        let rev = apply_e1(
            &base,
            Complex::from_pairs(&[(0, 1)]),
            Complex::from_pairs(&[(1, 1)]),
        );
        assert!(rev.is_ok());
    }

    #[test]
    fn e2_reduced_field_matches_paper() {
        // R2: f_hat = f - eps theta; flows at rates (eps x_i~, eps)
        let net = r0();
        let (base, chart, xb) = rat_base(&net);
        let enl = apply_e2(&base, &xb).unwrap();
        assert_eq!(enl.network.rank(), 2);
        assert!(enl.network.is_fully_open());
        assert_eq!(enl.network.n_reactions(), 6);
        let ls = local_system(&enl, &chart, &xb).unwrap();
        let t = Poly::<Rat>::var(3, 0);
        let e = Poly::<Rat>::var(3, 2);
        let target = r0_base_poly(3, 1).sub(&e.mul(&t));
        assert_eq!(ls.slow[0], target);
    }

    #[test]
    fn e2_idempotent_on_existing_flows() {
        let net = parse_network("0 -> X @ 2 ; X -> 0 @ 3 ; X -> Y @ 1 ; Y -> X @ 1").unwrap();
        let base = EnlargedNet::<f64>::base(&net);
        let enl = apply_e2(&base, &[1.0, 1.0]).unwrap();
        // X flows exist: incremented, not duplicated; Y flows added
        assert_eq!(enl.network.n_reactions(), 6);
        // inflow of X now has rate 2 + eps * 1
        let rate = enl.schedule[0].eval(&0.5, &[]);
        assert!((rate - 2.5).abs() < 1e-15);
    }

    #[test]
    fn e3_reduced_field_matches_paper() {
        // R3: f_hat = (1+theta)(1-kappa-theta^2) - eps kappa (1+theta)^2
        let net = r0();
        let (base, chart, xb) = rat_base(&net);
        let enl = apply_e3(&base, "Y", &[(1, 0, 1), (2, 1, 0)]).unwrap();
        assert_eq!(enl.network.rank(), 1);
        // schedule: reaction 2 multiplied by eps
        assert_eq!(
            enl.schedule[1],
            RateExpr::<Rat>::param(0).scaled(&rat(1), 1)
        );
        let ls = local_system(&enl, &chart, &xb).unwrap();
        let t = Poly::<Rat>::var(3, 0);
        let k = Poly::<Rat>::var(3, 1);
        let e = Poly::<Rat>::var(3, 2);
        let one = Poly::constant(3, rat(1));
        let target = r0_base_poly(3, 1).sub(&e.mul(&k).mul(&one.add(&t).pow(2)));
        assert_eq!(ls.slow[0], target);
        // conservation: y - x2 constant => s = (0, 1)
        match &enl.steps[0].kind {
            StepKind::E3 { s, .. } => assert_eq!(s, &vec![rat(0), rat(1)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn e3_rejects_empty_and_rank_change() {
        let net = r0();
        let base = EnlargedNet::<f64>::base(&net);
        assert!(matches!(
            apply_e3(&base, "Y", &[]).unwrap_err(),
            EnlargeError::EmptySubset
        ));
        // Y only into reaction 1 reactant: row (-1, 0) is not in the row
        // space of Gamma (spanned by (1,-1) rows scaled)
        let err = apply_e3(&base, "Y", &[(1, 1, 0)]).unwrap_err();
        assert!(matches!(err, EnlargeError::RankChanged));
        // new species only on product sides with rank preserved: alpha = 0
        // and the schedule is unchanged. W mirrors the produced-only Z.
        let mirror = parse_network("X -> Y + Z @ 1 ; Y -> X @ a").unwrap();
        let mbase = EnlargedNet::<f64>::base(&mirror);
        let ok = apply_e3(&mbase, "W", &[(1, 0, 1)]).unwrap();
        assert_eq!(ok.schedule, mbase.schedule);
        assert_eq!(ok.network.rank(), mirror.rank());
        match &ok.steps[0].kind {
            StepKind::E3 { s, .. } => {
                assert_eq!(s, &vec![rat(0), rat(0), rat(1)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn e4_local_system_matches_paper() {
        // R4: slow (1+theta)(1 - kappa y - theta^2);
        //     eps ydot = -eps kappa (1+theta) y + (1 - y)
        let net = r0();
        let (base, chart, xb) = rat_base(&net);
        let enl = apply_e4(&base, "Y", &[(2, 1, 0)]).unwrap();
        assert_eq!(enl.network.rank(), 2);
        assert_eq!(enl.network.n_reactions(), 4);
        let ls = local_system(&enl, &chart, &xb).unwrap();
        // vars: theta, y, kappa, eps
        let t = Poly::<Rat>::var(4, 0);
        let y = Poly::<Rat>::var(4, 1);
        let k = Poly::<Rat>::var(4, 2);
        let e = Poly::<Rat>::var(4, 3);
        let one = Poly::constant(4, rat(1));
        let slow_target = one.add(&t).mul(&one.sub(&k.mul(&y)).sub(&t.pow(2)));
        assert_eq!(ls.slow[0], slow_target);
        let fast_target = one.sub(&y).sub(&e.mul(&k).mul(&one.add(&t)).mul(&y));
        assert_eq!(ls.fast_times_eps[0], fast_target);
        // D_y q(theta, y, kappa, 0) = -1 everywhere
        let num = apply_e4(&EnlargedNet::<f64>::base(&net), "Y", &[(2, 1, 0)]).unwrap();
        let fj = num.steps[0].fast_jacobian_at_limit(&[1.0, 1.0], &[1.0], 0.0);
        assert_eq!(fj[(0, 0)], -1.0);
    }

    #[test]
    fn e5_local_system_matches_paper() {
        // R5: slow (1+theta)(1-kappa-theta^2+eps w (1+theta));
        //     eps wdot = 1 - w(1-theta) - eps(w^2 + 4w - 4 eps w^2)
        let net = r0();
        let (base, chart, xb) = rat_base(&net);
        let spec = parse_file("X1 + 2 X2 -> 3 X2 @ 1 ; X2 -> X1 @ k\nenlarge E5: Y1 + X1 <-> 2 Y2")
            .unwrap();
        let enl = apply_spec(&base, &spec.enlargements[0], None).unwrap();
        assert_eq!(enl.network.rank(), 2);
        // forward rate eps^-1, backward rate 1
        assert_eq!(enl.schedule[2], RateExpr::<Rat>::eps_pow(-1));
        assert_eq!(enl.schedule[3], RateExpr::<Rat>::eps_pow(0));
        let ls = local_system(&enl, &chart, &xb).unwrap();
        let t = Poly::<Rat>::var(4, 0);
        let w = Poly::<Rat>::var(4, 1);
        let k = Poly::<Rat>::var(4, 2);
        let e = Poly::<Rat>::var(4, 3);
        let one = Poly::constant(4, rat(1));
        let slow_target = one
            .add(&t)
            .mul(&one.sub(&k).sub(&t.pow(2)).add(&e.mul(&w).mul(&one.add(&t))));
        assert_eq!(ls.slow[0], slow_target);
        let fast_target = one.sub(&w.mul(&one.sub(&t))).sub(
            &e.mul(
                &w.pow(2)
                    .add(&w.scale(&rat(4)))
                    .sub(&e.mul(&w.pow(2)).scale(&rat(4))),
            ),
        );
        assert_eq!(ls.fast_times_eps[0], fast_target);
        // w(0) = x^gamma = 1/x1 at the base point
        let num = apply_spec(&EnlargedNet::<f64>::base(&net), &spec.enlargements[0], None).unwrap();
        let w0 = num.steps[0].w_limit(&[1.0, 1.0], &[1.0], 0.1);
        assert!((w0[0] - 1.0).abs() < 1e-14);
        let w0b = num.steps[0].w_limit(&[2.0, 1.0], &[1.0], 0.1);
        assert!((w0b[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn e5_rejects_no_new_species_and_rank_deficiency() {
        let net = r0();
        let base = EnlargedNet::<f64>::base(&net);
        // reversible reaction touching no new species: beta cannot reach
        // rank m'
        let err = apply_e5(&base, &[(vec![(1, "X1".into())], vec![(1, "X2".into())])]).unwrap_err();
        assert!(matches!(
            err,
            EnlargeError::BetaRankDeficient { got: 0, need: 1 }
        ));
        // a reaction with no new species while others have them
        let err = apply_e5(
            &base,
            &[
                (
                    vec![(1, "X1".into())],
                    vec![(1, "Y1".into()), (1, "Y2".into())],
                ),
                (vec![(1, "X1".into())], vec![(1, "X2".into())]),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, EnlargeError::NoNewSpecies(2)));
        // two reactions with only one new species: beta is 1 x 2, rank < 2
        let err = apply_e5(
            &base,
            &[
                (vec![(1, "X1".into())], vec![(1, "Y".into())]),
                (vec![(1, "X2".into())], vec![(1, "Y".into())]),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, EnlargeError::BetaRankDeficient { .. }));
    }

    #[test]
    fn e6_local_system_matches_paper() {
        // R6: slow (1+theta)(1-kappa-theta^2-eps w(1+theta));
        //     eps wdot = kappa(1+theta) - w - eps w^2
        let net = r0();
        let (base, chart, xb) = rat_base(&net);
        let spec =
            parse_file("X1 + 2 X2 -> 3 X2 @ 1 ; X2 -> X1 @ k\nenlarge E6: split r2 with Y1 + Y2")
                .unwrap();
        let enl = apply_spec(&base, &spec.enlargements[0], None).unwrap();
        assert_eq!(enl.network.rank(), 2);
        assert_eq!(enl.network.n_reactions(), 3);
        // split reaction keeps its rate; second leg gets eps^-1
        assert_eq!(enl.schedule[1], RateExpr::<Rat>::param(0));
        assert_eq!(enl.schedule[2], RateExpr::<Rat>::eps_pow(-1));
        let ls = local_system(&enl, &chart, &xb).unwrap();
        let t = Poly::<Rat>::var(4, 0);
        let w = Poly::<Rat>::var(4, 1);
        let k = Poly::<Rat>::var(4, 2);
        let e = Poly::<Rat>::var(4, 3);
        let one = Poly::constant(4, rat(1));
        let slow_target = one
            .add(&t)
            .mul(&one.sub(&k).sub(&t.pow(2)).sub(&e.mul(&w).mul(&one.add(&t))));
        assert_eq!(ls.slow[0], slow_target);
        let fast_target = k.mul(&one.add(&t)).sub(&w).sub(&e.mul(&w.pow(2)));
        assert_eq!(ls.fast_times_eps[0], fast_target);
        // w(0) = V(x, kappa) o x^gamma = kappa x2 at the base point
        let num = apply_spec(&EnlargedNet::<f64>::base(&net), &spec.enlargements[0], None).unwrap();
        let w0 = num.steps[0].w_limit(&[1.0, 1.0], &[1.0], 0.1);
        assert!((w0[0] - 1.0).abs() < 1e-14);
        // fast jacobian at the limit: -beta diag(v) beta^T diag(1/w0) = -1
        let fj = num.steps[0].fast_jacobian_at_limit(&[1.0, 1.0], &[1.0], 0.1);
        assert!((fj[(0, 0)] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn e6_split_with_s_equal_b() {
        // intermediate = product + new species: alpha column is zero; valid
        let net = r0();
        let base = EnlargedNet::<f64>::base(&net);
        let enl = apply_e6(&base, &[(2, vec![(1, "X1".into()), (1, "Y1".into())])]).unwrap();
        match &enl.steps[0].kind {
            StepKind::E6(s) => {
                assert_eq!(s.coupling.get(0, 0), &rat(0));
                assert_eq!(s.coupling.get(1, 0), &rat(0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn e6_missing_reaction() {
        let net = r0();
        let base = EnlargedNet::<f64>::base(&net);
        let err = apply_e6(&base, &[(5, vec![(1, "Y".into())])]).unwrap_err();
        assert!(matches!(err, EnlargeError::MissingReaction(5)));
    }

    #[test]
    fn rank_bookkeeping_all_kinds() {
        let net = r0();
        let r = net.rank();
        let base = EnlargedNet::<f64>::base(&net);
        let e1 = apply_e1(
            &base,
            Complex::from_pairs(&[(0, 1), (1, 1)]),
            Complex::from_pairs(&[(1, 2)]),
        )
        .unwrap();
        assert_eq!(e1.network.rank(), r);
        let e2 = apply_e2(&base, &[1.0, 1.0]).unwrap();
        assert_eq!(e2.network.rank(), net.n_species());
        let e3 = apply_e3(&base, "Y", &[(1, 0, 1), (2, 1, 0)]).unwrap();
        assert_eq!(e3.network.rank(), r);
        let e4 = apply_e4(&base, "Y", &[(2, 1, 0)]).unwrap();
        assert_eq!(e4.network.rank(), r + 1);
        let e5 = apply_e5(
            &base,
            &[(
                vec![(1, "Y1".into()), (1, "X1".into())],
                vec![(2, "Y2".into())],
            )],
        )
        .unwrap();
        assert_eq!(e5.network.rank(), r + 1);
        let e6 = apply_e6(&base, &[(2, vec![(1, "Y1".into()), (1, "Y2".into())])]).unwrap();
        assert_eq!(e6.network.rank(), r + 1);
    }

    #[test]
    fn schedule_positive_on_unit_interval() {
        let net = r0();
        let base = EnlargedNet::<f64>::base(&net);
        let variants: Vec<EnlargedNet<f64>> = vec![
            apply_e1(
                &base,
                Complex::from_pairs(&[(0, 1), (1, 1)]),
                Complex::from_pairs(&[(1, 2)]),
            )
            .unwrap(),
            apply_e2(&base, &[1.0, 1.0]).unwrap(),
            apply_e3(&base, "Y", &[(1, 0, 1), (2, 1, 0)]).unwrap(),
            apply_e4(&base, "Y", &[(2, 1, 0)]).unwrap(),
            apply_e5(
                &base,
                &[(
                    vec![(1, "Y1".into()), (1, "X1".into())],
                    vec![(2, "Y2".into())],
                )],
            )
            .unwrap(),
            apply_e6(&base, &[(2, vec![(1, "Y1".into()), (1, "Y2".into())])]).unwrap(),
        ];
        for enl in &variants {
            for i in 0..=20 {
                let eps = 1e-6 + (1.0 - 1e-6) * i as f64 / 20.0;
                let rates = schedule_rates(enl, eps, &[0.7]);
                assert!(
                    rates.iter().all(|&v| v > 0.0),
                    "nonpositive rate at eps={eps} in {:?}",
                    enl.chain_names()
                );
            }
        }
    }

    #[test]
    fn compose_identity_and_abort_index() {
        let net = r0();
        let empty = compose::<f64>(&net, &[], None).unwrap();
        assert_eq!(empty.network, net);
        assert!(empty.steps.is_empty());
        // invalid second step aborts with its index
        let specs = vec![
            EnlargeSpec::E3 {
                species: "Y".into(),
                rows: vec![(1, 0, 1), (2, 1, 0)],
            },
            EnlargeSpec::E1 {
                reactant: vec![],
                product: vec![(1, "X1".into())],
            },
        ];
        let err = compose::<f64>(&net, &specs, None).unwrap_err();
        match err {
            EnlargeError::ComposeStep { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn compose_e2_after_e3_unsupported() {
        let net = r0();
        let specs = vec![
            EnlargeSpec::E3 {
                species: "Y".into(),
                rows: vec![(1, 0, 1), (2, 1, 0)],
            },
            EnlargeSpec::E2,
        ];
        let err = compose::<f64>(&net, &specs, Some(&[1.0, 1.0])).unwrap_err();
        match err {
            EnlargeError::ComposeStep { index, source } => {
                assert_eq!(index, 1);
                assert!(matches!(*source, EnlargeError::UnsupportedComposition));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn e3_lift_and_e4_lift() {
        let net = r0();
        let base = EnlargedNet::<f64>::base(&net);
        let e3 = apply_e3(&base, "Y", &[(1, 0, 1), (2, 1, 0)]).unwrap();
        let lifted = e3.steps[0].lift(&[1.0, 1.0], &[1.0], 0.01);
        // y = s.x + 1/eps = 1 + 100
        assert_eq!(lifted, vec![1.0, 1.0, 101.0]);
        let e4 = apply_e4(&base, "Y", &[(2, 1, 0)]).unwrap();
        assert_eq!(
            e4.steps[0].lift(&[1.0, 1.0], &[1.0], 0.01),
            vec![1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn e5_lift_positive_and_on_class() {
        let net = r0();
        let base = EnlargedNet::<f64>::base(&net);
        let enl = apply_e5(
            &base,
            &[(
                vec![(1, "Y1".into()), (1, "X1".into())],
                vec![(2, "Y2".into())],
            )],
        )
        .unwrap();
        let eps = 0.05;
        let p = enl.steps[0].lift(&[1.0, 1.0], &[1.0], eps);
        assert!(p.iter().all(|&v| v > 0.0));
        // class constants: x1 + x2 - y1 = 2 and 2 y1 + y2 = 1
        assert!((p[0] + p[1] - p[2] - 2.0).abs() < 1e-12);
        assert!((2.0 * p[2] + p[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn render_annotated_schedule() {
        let net = r0();
        let base = EnlargedNet::<f64>::base(&net);
        let enl = apply_e6(&base, &[(2, vec![(1, "Y1".into()), (1, "Y2".into())])]).unwrap();
        let text = render_enlarged(&enl);
        assert!(text.contains("X2 -> Y1 + Y2 @ k"));
        assert!(text.contains("Y1 + Y2 -> X1 @ eps^-1"));
    }
}
