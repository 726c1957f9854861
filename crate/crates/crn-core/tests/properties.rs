//! Randomized structural properties: DSL round trips and the induced
//! subnetwork partial order.

use proptest::prelude::*;

use crn_core::exact::rat_frac;
use crn_core::network::{is_induced_subnetwork, Complex, Network, RateConstant, Reaction, Species};
use crn_core::parser::{parse_network, serialize_network};

const NAMES: [&str; 5] = ["A", "B", "C", "D", "E_1"];

fn complex_strategy(n_species: usize) -> impl Strategy<Value = Complex> {
    prop::collection::vec(0u32..3, n_species).prop_map(|coeffs| {
        let mut c = Complex::empty();
        for (i, k) in coeffs.into_iter().enumerate() {
            c.add_species(i, k);
        }
        c
    })
}

fn rate_strategy() -> impl Strategy<Value = RateConstant> {
    prop_oneof![
        (1i64..40, 1i64..12).prop_map(|(n, d)| RateConstant::Fixed(rat_frac(n, d))),
        prop_oneof![Just("p".to_string()), Just("q".to_string())].prop_map(RateConstant::Param),
    ]
}

fn network_strategy() -> impl Strategy<Value = Network> {
    (2usize..=4).prop_flat_map(|n| {
        let reactions = prop::collection::vec(
            (complex_strategy(n), complex_strategy(n), rate_strategy()),
            1..6,
        );
        reactions.prop_filter_map("valid network", move |rs| {
            let species: Vec<Species> = NAMES
                .iter()
                .take(n)
                .map(|s| Species {
                    name: s.to_string(),
                })
                .collect();
            let mut seen: Vec<(Complex, Complex)> = Vec::new();
            let mut reactions = Vec::new();
            for (reactant, product, rate) in rs {
                if reactant == product {
                    continue;
                }
                if seen.iter().any(|(a, b)| a == &reactant && b == &product) {
                    continue;
                }
                seen.push((reactant.clone(), product.clone()));
                reactions.push(Reaction {
                    reactant,
                    product,
                    rate,
                });
            }
            if reactions.is_empty() {
                return None;
            }
            Network::new(species, reactions).ok()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_serialize_round_trip(net in network_strategy()) {
        let text = serialize_network(&net);
        let again = parse_network(&text).unwrap();
        prop_assert_eq!(&net, &again);
        // serialization is a fixed point
        prop_assert_eq!(serialize_network(&again), text);
    }

    #[test]
    fn induced_subnetwork_reflexive(net in network_strategy()) {
        let w = is_induced_subnetwork(&net, &net);
        prop_assert!(w.is_some());
        let w = w.unwrap();
        prop_assert!(w.deleted_species.is_empty());
        prop_assert_eq!(w.reaction_map, (0..net.n_reactions()).collect::<Vec<_>>());
    }

    #[test]
    fn induced_subnetwork_transitive(
        net in network_strategy(),
        drop_reactions in prop::collection::vec(any::<bool>(), 6),
        drop_species in prop::collection::vec(any::<bool>(), 5),
        drop_more in prop::collection::vec(any::<bool>(), 6),
    ) {
        // build sub by deleting per the definition, then subsub from sub
        let Some(sub) = delete(&net, &drop_reactions, &drop_species) else {
            return Ok(());
        };
        let Some(subsub) = delete(&sub, &drop_more, &[]) else {
            return Ok(());
        };
        prop_assert!(is_induced_subnetwork(&sub, &net).is_some());
        prop_assert!(is_induced_subnetwork(&subsub, &sub).is_some());
        // transitivity
        prop_assert!(is_induced_subnetwork(&subsub, &net).is_some());
    }
}

/// Delete the flagged reactions and species from a network, dropping
/// reactions that become null; None when nothing is left.
fn delete(net: &Network, drop_reactions: &[bool], drop_species: &[bool]) -> Option<Network> {
    let keep_species: Vec<usize> = (0..net.n_species())
        .filter(|&i| !drop_species.get(i).copied().unwrap_or(false))
        .collect();
    let map: Vec<Option<usize>> = (0..net.n_species())
        .map(|i| keep_species.iter().position(|&k| k == i))
        .collect();
    let species: Vec<Species> = keep_species
        .iter()
        .map(|&i| net.species()[i].clone())
        .collect();
    if species.is_empty() {
        return None;
    }
    let mut reactions = Vec::new();
    for (j, r) in net.reactions().iter().enumerate() {
        if drop_reactions.get(j).copied().unwrap_or(false) {
            continue;
        }
        let reactant = r.reactant.remap(&map);
        let product = r.product.remap(&map);
        if reactant == product {
            continue;
        }
        if reactions
            .iter()
            .any(|x: &Reaction| x.reactant == reactant && x.product == product)
        {
            continue;
        }
        reactions.push(Reaction {
            reactant,
            product,
            rate: r.rate.clone(),
        });
    }
    Network::new(species, reactions).ok()
}

/// Every gallery report that PASSes also satisfies the per-point invariants
/// and the monotone-deviation property.
#[test]
fn gallery_pass_reports_satisfy_invariants() {
    for id in crn_core::gallery::CASE_IDS {
        let rep = crn_core::gallery::run_case(id).unwrap();
        assert_eq!(rep.verdict, crn_core::inherit::Verdict::Pass, "{id}");
        assert!(rep.monotone_ok, "{id}: deviations not monotone");
        for rec in &rep.records {
            let bp = rec.point.as_ref().unwrap();
            assert!(bp.residual <= 1e-10, "{id}");
            for v in &bp.test_values {
                assert!(v.abs() <= 1e-8, "{id}: test value {v}");
            }
            assert!(bp.sigma_min_scaled > 1e-6, "{id}");
            assert!(rec.x_full.iter().all(|&x| x > 0.0), "{id}");
            assert!(bp.kappa.iter().all(|&k| k > 0.0), "{id}");
        }
    }
}
