//! Built-in verification gallery: the worked fold example and its six
//! enlargements, the Brusselator family, the degenerate-Hopf family, and the
//! Bautin-network chain, together with the analysis pipeline the CLI uses.

use serde::{Deserialize, Serialize};

use crate::bifurcation::{
    find_equilibrium, locate_bifurcation, scan_and_bisect, BifKind, BifPoint, ContinuationOptions,
    Tolerances,
};
use crate::enlarge::{compose, EnlargedNet};
use crate::error::AnalysisError;
use crate::inherit::{track_inherited_bifurcation, InheritanceReport, SweepConfig};
use crate::massaction::{make_chart, reduced_field, Chart, ReducedField};
use crate::network::Network;
use crate::parser::{parse_network, EnlargeSpec};

pub const R0_DSL: &str = "X1 + 2 X2 -> 3 X2 @ 1\nX2 -> X1 @ k";
pub const RB0_DSL: &str = "X -> Y @ k1\n2 X + Y -> 3 X @ 1";
pub const RB1_DSL: &str = "0 -> X @ k1\nX -> 0 @ k2\nX -> Y @ k3\n2 X + Y -> 3 X @ k4";
/// R_B2 with the rates produced by E5 on R_B0 at eps0 = 1/4 (fold base).
pub const RB2_FOLD_DSL: &str = "X -> Y @ kf\n2 X + Y -> 3 X @ 1\nX -> Z @ 1\nZ -> X @ 4";
/// R_B2 with the rates produced by E3 on R_B1 at eps0 = 1/20 (Hopf base).
pub const RB2_HOPF_DSL: &str =
    "species X, Y, Z\nZ -> X @ 1/20\nX -> Z @ 1\nX -> Y @ kh\n2 X + Y -> 3 X @ 1";
pub const RA0_DSL: &str = "0 -> X @ k1\nX + Y -> 2 Y @ k2\nY -> 2 Z @ k3\nX + Z -> 0 @ k4";
pub const RC0_DSL: &str =
    "species X, Y, Z\nZ + X -> 2 X @ k1\nX + Y -> 2 Y @ k2\nY + Z -> 0 @ k3\n0 -> 2 Z @ k4";
pub const RC1_DSL: &str =
    "species X, Y, Z, W\nZ + X -> 2 X @ c1\nX + Y -> 2 Y @ c2\nY + Z -> 2 W @ c3\n2 W -> 2 Z @ c4";

/// Identifiers of the tracked gallery cases, in run order.
pub const CASE_IDS: [&str; 12] = [
    "r0-e1",
    "r0-e2",
    "r0-e3",
    "r0-e4",
    "r0-e5",
    "r0-e6",
    "rb0-e5",
    "rb1-e3",
    "rb2-e1e2-fold",
    "rb2-e1e2-hopf",
    "ra0-e6e3",
    "rc0-e3",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<InheritanceReport>,
    pub passed: usize,
    pub failed: usize,
}

/// A prepared gallery case: base bifurcation, enlarged network, sweep config.
pub struct PreparedCase {
    pub id: String,
    pub base_network: Network,
    pub base_chart: Chart,
    pub base_point: BifPoint,
    pub enlarged: EnlargedNet<f64>,
    pub config: SweepConfig,
}

impl PreparedCase {
    pub fn run(&self) -> InheritanceReport {
        track_inherited_bifurcation(
            &self.base_chart,
            &self.base_point,
            &self.enlarged,
            &self.config,
            &self.id,
        )
    }
}

/// Run one gallery case by id.
pub fn run_case(id: &str) -> Result<InheritanceReport, AnalysisError> {
    Ok(prepare_case(id)?.run())
}

/// Run the whole gallery (optionally a subset), sequentially.
pub fn verify_paper_gallery(only: Option<&[String]>) -> Result<SuiteReport, AnalysisError> {
    let mut reports = Vec::new();
    for id in CASE_IDS {
        if let Some(filter) = only {
            if !filter.iter().any(|f| f == id) {
                continue;
            }
        }
        reports.push(run_case(id)?);
    }
    let passed = reports
        .iter()
        .filter(|r| r.verdict == crate::inherit::Verdict::Pass)
        .count();
    let failed = reports.len() - passed;
    Ok(SuiteReport {
        reports,
        passed,
        failed,
    })
}

fn e(msg: &str) -> AnalysisError {
    AnalysisError::Other(msg.to_string())
}

/// Build a gallery case: locate its base bifurcation and apply its chain.
pub fn prepare_case(id: &str) -> Result<PreparedCase, AnalysisError> {
    let (base_network, base_chart, base_point, specs, config) = match id {
        "r0-e1" | "r0-e2" | "r0-e3" | "r0-e4" | "r0-e5" | "r0-e6" => {
            let (net, chart, bp) = r0_fold_base()?;
            let spec = match id {
                "r0-e1" => EnlargeSpec::E1 {
                    reactant: vec![(1, "X1".into()), (1, "X2".into())],
                    product: vec![(2, "X2".into())],
                },
                "r0-e2" => EnlargeSpec::E2,
                "r0-e3" => EnlargeSpec::E3 {
                    species: "Y".into(),
                    rows: vec![(1, 0, 1), (2, 1, 0)],
                },
                "r0-e4" => EnlargeSpec::E4 {
                    species: "Y".into(),
                    rows: vec![(2, 1, 0)],
                },
                "r0-e5" => EnlargeSpec::E5 {
                    reactions: vec![(
                        vec![(1, "Y1".into()), (1, "X1".into())],
                        vec![(2, "Y2".into())],
                    )],
                },
                "r0-e6" => EnlargeSpec::E6 {
                    splits: vec![(2, vec![(1, "Y1".into()), (1, "Y2".into())])],
                },
                _ => unreachable!(),
            };
            (net, chart, bp, vec![spec], SweepConfig::default())
        }
        "rb0-e5" => {
            let (net, chart, bp) = rb0_fold_base()?;
            let spec = EnlargeSpec::E5 {
                reactions: vec![(vec![(1, "X".into())], vec![(1, "Z".into())])],
            };
            (net, chart, bp, vec![spec], SweepConfig::default())
        }
        "rb1-e3" => {
            let (net, chart, bp) = rb1_hopf_base()?;
            let spec = EnlargeSpec::E3 {
                species: "Z".into(),
                rows: vec![(1, 1, 0), (2, 0, 1)],
            };
            (net, chart, bp, vec![spec], SweepConfig::default())
        }
        "rb2-e1e2-fold" => {
            let (net, chart, bp) = rb2_fold_base()?;
            // at eps >= 5e-2 the cold seed escapes to a nonpositive branch
            let config = SweepConfig {
                eps_max: 2.5e-2,
                eps_min: 2.5e-5,
                ..Default::default()
            };
            (net, chart, bp, rb3_chain(), config)
        }
        "rb2-e1e2-hopf" => {
            let (net, chart, bp) = rb2_hopf_base()?;
            (net, chart, bp, rb3_chain(), SweepConfig::default())
        }
        "ra0-e6e3" => {
            let (net, chart, bp) = ra0_hopf_base()?;
            let specs = vec![
                EnlargeSpec::E6 {
                    splits: vec![(2, vec![(1, "W".into())])],
                },
                EnlargeSpec::E3 {
                    species: "V".into(),
                    rows: vec![(1, 1, 0), (2, 0, 1), (3, 1, 0), (4, 0, 2), (5, 1, 0)],
                },
            ];
            // at eps >= 1e-2 the composed Hopf sits outside the cold-seed
            // Newton basin; sweep a smaller grid
            let config = SweepConfig {
                eps_max: 5e-3,
                eps_min: 5e-6,
                ..Default::default()
            };
            (net, chart, bp, specs, config)
        }
        "rc0-e3" => {
            let (net, chart, bp) = rc0_hopf_base()?;
            let spec = EnlargeSpec::E3 {
                species: "W".into(),
                rows: vec![(3, 0, 2), (4, 2, 0)],
            };
            (net, chart, bp, vec![spec], SweepConfig::default())
        }
        other => return Err(e(&format!("unknown gallery case `{other}`"))),
    };
    let enlarged = compose::<f64>(&base_network, &specs, Some(&base_point.x))
        .map_err(|err| e(&format!("compose failed for {id}: {err}")))?;
    Ok(PreparedCase {
        id: id.to_string(),
        base_network,
        base_chart,
        base_point,
        enlarged,
        config,
    })
}

fn rb3_chain() -> Vec<EnlargeSpec> {
    vec![
        EnlargeSpec::E1 {
            reactant: vec![(1, "Y".into())],
            product: vec![(1, "X".into())],
        },
        EnlargeSpec::E1 {
            reactant: vec![(1, "Y".into())],
            product: vec![(1, "Z".into())],
        },
        EnlargeSpec::E1 {
            reactant: vec![(1, "Z".into())],
            product: vec![(1, "Y".into())],
        },
        EnlargeSpec::E2,
    ]
}

/// Fold of the worked example at (theta, kappa) = (0, 1), chart at (1, 1).
pub fn r0_fold_base() -> Result<(Network, Chart, BifPoint), AnalysisError> {
    let net = parse_network(R0_DSL).expect("builtin network");
    let chart = make_chart(&net, &[1.0, 1.0])?;
    let field = reduced_field(&net, &chart);
    let tol = Tolerances::default();
    let bp = locate_bifurcation(&field, BifKind::Fold, &[0.2], &[0.8], &[0], &tol)?;
    Ok((net, chart, bp))
}

/// Fold of R_B0 at x = (1,1), k1 = 1 on the class x + y = 2.
pub fn rb0_fold_base() -> Result<(Network, Chart, BifPoint), AnalysisError> {
    let net = parse_network(RB0_DSL).expect("builtin network");
    let chart = make_chart(&net, &[1.0, 1.0])?;
    let field = reduced_field(&net, &chart);
    let tol = Tolerances::default();
    let bp = locate_bifurcation(&field, BifKind::Fold, &[0.3], &[0.8], &[0], &tol)?;
    Ok((net, chart, bp))
}

/// Supercritical Hopf of the Brusselator at x = (1, 2), k3 = 2.
pub fn rb1_hopf_base() -> Result<(Network, Chart, BifPoint), AnalysisError> {
    let net = parse_network(RB1_DSL).expect("builtin network");
    let chart = make_chart(&net, &[1.0, 2.0])?;
    let field = reduced_field(&net, &chart);
    let tol = Tolerances::default();
    let kappa = [1.0, 1.0, 1.8, 1.0];
    let th = find_equilibrium(&field, &[0.0, 0.0], &kappa, &tol)?;
    let k3 = field.param_index("k3").expect("k3");
    let bp = locate_bifurcation(&field, BifKind::Hopf, &th, &kappa, &[k3], &tol)?;
    Ok((net, chart, bp))
}

/// Fold of the homogenised Brusselator (concrete rates from E5 at eps0=1/20)
/// on the class through the lifted base point.
pub fn rb2_fold_base() -> Result<(Network, Chart, BifPoint), AnalysisError> {
    let net = parse_network(RB2_FOLD_DSL).expect("builtin network");
    // lift of (1,1) through E5 at eps0: (1 - eps0 w0, 1, eps0 w0), w0 = 1
    let eps0 = 0.25;
    let chart = make_chart(&net, &[1.0 - eps0, 1.0, eps0])?;
    let field = reduced_field(&net, &chart);
    let tol = Tolerances::default();
    let kf = field.param_index("kf").expect("kf");
    let bp = locate_bifurcation(&field, BifKind::Fold, &[0.0, 0.0], &[0.85], &[kf], &tol)?;
    Ok((net, chart, bp))
}

/// Hopf of the homogenised Brusselator (concrete rates from E3 at eps0=1/20)
/// on the class x + y + z = 1/eps0.
pub fn rb2_hopf_base() -> Result<(Network, Chart, BifPoint), AnalysisError> {
    let net = parse_network(RB2_HOPF_DSL).expect("builtin network");
    let eps0 = 0.05;
    let chart = make_chart(&net, &[1.0, 2.0, 1.0 / eps0 - 3.0])?;
    let field = reduced_field(&net, &chart);
    let tol = Tolerances::default();
    let kh = field.param_index("kh").expect("kh");
    let kappa = [1.9];
    let th = find_equilibrium(&field, &[0.0, 0.0], &kappa, &tol)?;
    let bp = locate_bifurcation(&field, BifKind::Hopf, &th, &kappa, &[kh], &tol)?;
    Ok((net, chart, bp))
}

/// Closed-form positive equilibrium of R_A0.
fn ra0_equilibrium(k: &[f64]) -> [f64; 3] {
    [
        k[2] / k[1],
        k[0] / (3.0 * k[2]),
        2.0 * k[1] * k[0] / (3.0 * k[2] * k[3]),
    ]
}

/// Hopf of the Bautin network R_A0 with l1 < 0, located by grid search over
/// k4 with bisection on the eigenvalue crossing (k1 = k3 = 1, k2 = 0.35).
pub fn ra0_hopf_base() -> Result<(Network, Chart, BifPoint), AnalysisError> {
    ra0_hopf_at_k2(0.35)
}

/// Locate the R_A0 Hopf point on the branch parametrized by k2.
pub fn ra0_hopf_at_k2(k2: f64) -> Result<(Network, Chart, BifPoint), AnalysisError> {
    let net = parse_network(RA0_DSL).expect("builtin network");
    let kappa = [1.0, k2, 1.0, 0.4];
    let base = ra0_equilibrium(&kappa);
    let chart = make_chart(&net, &base)?;
    let field = reduced_field(&net, &chart);
    let tol = Tolerances::default();
    let k4 = field.param_index("k4").expect("k4");
    let (th, k4h) = scan_and_bisect(
        &field,
        BifKind::Hopf,
        &[0.0, 0.0, 0.0],
        &kappa,
        k4,
        0.1,
        0.7,
        60,
        &tol,
    )?;
    let mut kap = kappa.to_vec();
    kap[k4] = k4h;
    let bp = locate_bifurcation(&field, BifKind::Hopf, &th, &kap, &[k4], &tol)?;
    Ok((net, chart, bp))
}

/// A (k2, l1) pair on the continued Hopf branch of R_A0.
pub type BranchL1 = (f64, f64);

/// Witnesses of the first Lyapunov coefficient changing sign along the
/// continued Hopf branch of R_A0 (the Bautin substitute property):
/// ((k2, l1) with l1 > 0, (k2, l1) with l1 < 0).
pub fn ra0_l1_sign_change() -> Result<(BranchL1, BranchL1), AnalysisError> {
    let mut positive: Option<(f64, f64)> = None;
    let mut negative: Option<(f64, f64)> = None;
    for i in 0..=8 {
        let k2 = 0.10 + 0.025 * i as f64;
        let Ok((_, _, bp)) = ra0_hopf_at_k2(k2) else {
            continue;
        };
        let Some(l1) = bp.l1 else { continue };
        if l1 > 0.0 && positive.is_none() {
            positive = Some((k2, l1));
        }
        if l1 < 0.0 && negative.is_none() {
            negative = Some((k2, l1));
        }
        if positive.is_some() && negative.is_some() {
            break;
        }
    }
    match (positive, negative) {
        (Some(p), Some(n)) => Ok((p, n)),
        _ => Err(AnalysisError::NoBracket),
    }
}

/// Degenerate Hopf of R_C0: with k2 = k3 = k4 = 1 the Hopf sits at k1 = 2
/// with l1 = 0 (vertical bifurcation).
pub fn rc0_hopf_base() -> Result<(Network, Chart, BifPoint), AnalysisError> {
    let net = parse_network(RC0_DSL).expect("builtin network");
    let kappa: [f64; 4] = [1.9, 1.0, 1.0, 1.0];
    // closed-form equilibrium: z = sqrt(k2 k4/(k1 k3)), x = k3 z/k2, y = k1 z/k2
    let z = (kappa[1] * kappa[3] / (kappa[0] * kappa[2])).sqrt();
    let base = [kappa[2] * z / kappa[1], kappa[0] * z / kappa[1], z];
    let chart = make_chart(&net, &base)?;
    let field = reduced_field(&net, &chart);
    let tol = Tolerances::default();
    let th = find_equilibrium(&field, &[0.0, 0.0, 0.0], &kappa, &tol)?;
    let k1 = field.param_index("k1").expect("k1");
    let bp = locate_bifurcation(&field, BifKind::Hopf, &th, &kappa, &[k1], &tol)?;
    Ok((net, chart, bp))
}

/// One parameter-probe result for R_C1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbePoint {
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c1_hopf: f64,
    pub l1: f64,
}

/// Probe R_C1 rate constants for the sign of the first Lyapunov coefficient
/// at its Hopf points (class x+y+z+w = 1; free parameter c1). The paper's
/// claim is that supercritical, subcritical and degenerate cases all occur.
pub fn rc1_l1_probe() -> Result<Vec<ProbePoint>, AnalysisError> {
    let net = parse_network(RC1_DSL).expect("builtin network");
    let chart = make_chart(&net, &[0.25, 0.25, 0.25, 0.25])?;
    let field = reduced_field(&net, &chart);
    let tol = Tolerances::default();
    let c1 = field.param_index("c1").expect("c1");
    let grid = [
        (1.0, 1.0, 1.0),
        (2.0, 2.0, 1.0),
        (0.5, 1.0, 1.0),
        (3.0, 0.2, 0.1),
        (4.0, 0.3, 0.1),
        (2.0, 0.2, 0.1),
    ];
    let mut out = Vec::new();
    for &(c2, c3, c4) in &grid {
        let kappa = [1.0, c2, c3, c4];
        let Ok((th, c1h)) = scan_and_bisect(
            &field,
            BifKind::Hopf,
            &[0.0, 0.0, 0.0],
            &kappa,
            c1,
            0.5,
            20.0,
            80,
            &tol,
        ) else {
            continue;
        };
        let mut kap = kappa.to_vec();
        kap[c1] = c1h;
        let Ok(bp) = locate_bifurcation(&field, BifKind::Hopf, &th, &kap, &[c1], &tol) else {
            continue;
        };
        if let Some(l1) = bp.l1 {
            out.push(ProbePoint {
                c2,
                c3,
                c4,
                c1_hopf: bp.kappa[c1],
                l1,
            });
        }
    }
    Ok(out)
}

/// Analysis pipeline used by the CLI: locate a bifurcation in a network,
/// first by direct Newton from the seed, then by continuation bracketing.
#[allow(clippy::too_many_arguments)]
pub fn analyze(
    net: &Network,
    kind: BifKind,
    free_names: &[String],
    chart_base: &[f64],
    kappa_seed: &[f64],
    range: (f64, f64),
    tol: &Tolerances,
) -> Result<(Chart, BifPoint), AnalysisError> {
    let chart = make_chart(net, chart_base)?;
    let field = reduced_field(net, &chart);
    let free: Vec<usize> = free_names
        .iter()
        .map(|f| {
            field
                .param_index(f)
                .ok_or_else(|| AnalysisError::UnknownParam(f.clone()))
        })
        .collect::<Result<_, _>>()?;
    if free.len() != kind.codim() {
        return Err(AnalysisError::WrongFreeParamCount {
            expected: kind.codim(),
            codim: kind.codim(),
            got: free.len(),
        });
    }
    // equilibrium seed at the given kappa, then direct Newton on h
    let direct = find_equilibrium(&field, &vec![0.0; field.dim], kappa_seed, tol)
        .and_then(|th| locate_bifurcation(&field, kind, &th, kappa_seed, &free, tol));
    if let Ok(bp) = direct {
        if bp.pass.all() {
            return Ok((chart, bp));
        }
    }
    // continuation bracketing on the first free parameter
    if kind.codim() == 1 {
        let seed_th = find_equilibrium(&field, &vec![0.0; field.dim], kappa_seed, tol)
            .unwrap_or_else(|_| vec![0.0; field.dim]);
        let branch = crate::bifurcation::continue_equilibrium(
            &field,
            &seed_th,
            kappa_seed,
            free[0],
            range,
            &ContinuationOptions::default(),
            tol,
        );
        for bracket in &branch.brackets {
            if bracket.kind != kind {
                continue;
            }
            let pt = &branch.points[bracket.index];
            let mut kap = kappa_seed.to_vec();
            kap[free[0]] = pt.kappa_free;
            if let Ok(bp) = locate_bifurcation(&field, kind, &pt.theta, &kap, &free, tol) {
                if bp.pass.all() {
                    return Ok((chart, bp));
                }
            }
        }
    }
    Err(AnalysisError::NoBracket)
}

/// Pipeline behind `inherit` on user files: locate the base bifurcation,
/// compose the enlargement specs anchored at it, and run the sweep.
#[allow(clippy::too_many_arguments)]
pub fn inherit_from_network(
    net: &Network,
    specs: &[EnlargeSpec],
    kind: BifKind,
    free_names: &[String],
    chart_base: &[f64],
    kappa_seed: &[f64],
    range: (f64, f64),
    cfg: &SweepConfig,
) -> Result<(InheritanceReport, EnlargedNet<f64>), crate::error::EnlargeError> {
    let (chart, bp) = analyze(
        net, kind, free_names, chart_base, kappa_seed, range, &cfg.tol,
    )
    .map_err(|e| {
        crate::error::EnlargeError::Network(crate::error::NetworkError::BadSpeciesName(format!(
            "base analysis failed: {e}"
        )))
    })?;
    let enlarged = compose::<f64>(net, specs, Some(&bp.x))?;
    let report = track_inherited_bifurcation(&chart, &bp, &enlarged, cfg, "inherit");
    Ok((report, enlarged))
}

/// Expose the reduced field of a prepared base for diagnostics.
pub fn base_field(net: &Network, chart: &Chart) -> ReducedField {
    reduced_field(net, chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inherit::Verdict;

    #[test]
    fn r0_base_is_the_worked_fold() {
        let (_, _, bp) = r0_fold_base().unwrap();
        assert!(bp.theta[0].abs() < 1e-10);
        assert!((bp.kappa[0] - 1.0).abs() < 1e-10);
        assert!(bp.quad_coeff.unwrap() < 0.0);
        assert!(bp.param_slope.unwrap() < 0.0);
        assert!(bp.pass.all());
    }

    #[test]
    fn rb0_fold_and_rb1_hopf_bases() {
        let (_, _, fold) = rb0_fold_base().unwrap();
        assert!((fold.kappa[0] - 1.0).abs() < 1e-9);
        let (_, _, hopf) = rb1_hopf_base().unwrap();
        let k3 = hopf.param_names.iter().position(|p| p == "k3").unwrap();
        assert!((hopf.kappa[k3] - 2.0).abs() < 1e-9);
        assert!(hopf.l1.unwrap() < 0.0, "Brusselator Hopf is supercritical");
    }

    #[test]
    fn rb2_bases_exist_near_their_seeds() {
        let (_, _, fold) = rb2_fold_base().unwrap();
        assert!(fold.pass.all());
        assert!((fold.kappa[0] - 1.0).abs() < 0.3, "kf = {}", fold.kappa[0]);
        let (_, _, hopf) = rb2_hopf_base().unwrap();
        assert!(hopf.pass.all());
        assert!((hopf.kappa[0] - 2.0).abs() < 0.5, "kh = {}", hopf.kappa[0]);
    }

    #[test]
    fn rc0_hopf_is_degenerate_at_two() {
        let (_, _, bp) = rc0_hopf_base().unwrap();
        assert!((bp.kappa[0] - 2.0).abs() < 1e-8, "k1 = {}", bp.kappa[0]);
        assert!(bp.l1.unwrap().abs() < 1e-8, "l1 = {:?}", bp.l1);
        assert!(bp.pass.all());
    }

    #[test]
    fn ra0_hopf_base_is_supercritical() {
        let (_, _, bp) = ra0_hopf_base().unwrap();
        assert!(bp.pass.all());
        assert!((bp.kappa[3] - 0.487).abs() < 0.05, "k4 = {}", bp.kappa[3]);
        assert!(bp.l1.unwrap() < 0.0, "l1 = {:?}", bp.l1);
    }

    #[test]
    fn single_case_r0_e3_passes() {
        let report = run_case("r0-e3").unwrap();
        assert_eq!(
            report.verdict,
            Verdict::Pass,
            "{:?}",
            report.first_failing_eps
        );
        assert!(report.fits.as_ref().unwrap().kappa_slope >= 0.9);
    }

    #[test]
    fn analyze_pipeline_r0() {
        let net = parse_network(R0_DSL).unwrap();
        let tol = Tolerances::default();
        let (_, bp) = analyze(
            &net,
            BifKind::Fold,
            &["k".to_string()],
            &[1.0, 1.0],
            &[1.0],
            (0.1, 10.0),
            &tol,
        )
        .unwrap();
        assert!(bp.theta[0].abs() < 1e-10);
        assert!((bp.kappa[0] - 1.0).abs() < 1e-10);
    }
}
