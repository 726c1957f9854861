//! The inheritance verification harness: track the bifurcation point of an
//! enlarged network over a decreasing eps grid, certify convergence to the
//! base point, transversality, positivity, and negative transverse
//! eigenvalues.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{locate_bifurcation, BifKind, BifPoint, Tolerances};
use crate::enlarge::{EnlargedNet, StepKind};
use crate::massaction::{make_chart, reduced_field_scheduled, Chart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Seeding {
    /// seed each eps from the previous solution (default)
    Continuation,
    /// seed every eps from the singular-limit prediction
    ColdStart,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub eps_max: f64,
    pub eps_min: f64,
    pub count: usize,
    pub seeding: Seeding,
    pub tol: Tolerances,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            eps_max: 1e-1,
            eps_min: 1e-4,
            count: 12,
            seeding: Seeding::Continuation,
            tol: Tolerances::default(),
        }
    }
}

impl SweepConfig {
    /// Strictly decreasing geometric grid from eps_max to eps_min.
    pub fn grid(&self) -> Vec<f64> {
        assert!(self.count >= 2 && self.eps_max > self.eps_min && self.eps_min > 0.0);
        let ratio = (self.eps_min / self.eps_max).powf(1.0 / (self.count - 1) as f64);
        (0..self.count)
            .map(|i| self.eps_max * ratio.powi(i as i32))
            .collect()
    }
}

/// Result of tracking at a single grid eps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsRecord {
    pub eps: f64,
    pub ok: bool,
    pub fail_reason: Option<String>,
    pub point: Option<BifPoint>,
    /// full species state of the enlarged network at the located point
    pub x_full: Vec<f64>,
    /// base-chart coordinates of the base species at the located point
    pub theta_base: Vec<f64>,
    pub kappa_dev: f64,
    pub theta_dev: f64,
    /// eigenvalues matched to the base spectrum, in base order
    pub matched_eigs: Vec<(f64, f64)>,
    /// the remaining (transverse) eigenvalues
    pub extra_eigs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub kappa_slope: f64,
    pub kappa_intercept: f64,
    pub theta_slope: f64,
    pub theta_intercept: f64,
    pub points_used: usize,
    /// deviations at the numerical floor count as converged
    pub kappa_at_floor: bool,
    pub theta_at_floor: bool,
}

impl ConvergenceFit {
    pub fn kappa_ok(&self) -> bool {
        self.kappa_at_floor || self.kappa_slope >= 0.9
    }
    pub fn theta_ok(&self) -> bool {
        self.theta_at_floor || self.theta_slope >= 0.9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InheritanceReport {
    pub case_id: String,
    pub chain: Vec<String>,
    pub kind: BifKind,
    pub base: BifPoint,
    pub grid: Vec<f64>,
    pub records: Vec<EpsRecord>,
    pub fits: Option<ConvergenceFit>,
    pub monotone_ok: bool,
    /// chains containing E2/E4/E5/E6 must exhibit negative transverse spectra
    pub requires_negative_extras: bool,
    pub verdict: Verdict,
    pub first_failing_eps: Option<f64>,
}

impl InheritanceReport {
    /// CSV rows (eps, kappa deviation, theta deviation, min transverse real part).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,kappa_dev,theta_dev,min_extra_re\n");
        for r in &self.records {
            let min_re = r
                .extra_eigs
                .iter()
                .map(|e| e.0)
                .fold(f64::INFINITY, f64::min);
            let min_re_str = if min_re.is_finite() {
                format!("{min_re:.12e}")
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{}\n",
                r.eps, r.kappa_dev, r.theta_dev, min_re_str
            ));
        }
        out
    }
}

/// Track the base bifurcation through the enlarged network over the eps grid.
///
/// For each eps the enlarged network's reduced system is built on its own
/// positive stoichiometric class (selected via the proof's singular-limit
/// constants by lifting the base point through the enlargement chain), and
/// the bifurcation is relocated with the same kind and unfolding parameters.
pub fn track_inherited_bifurcation(
    base_chart: &Chart,
    base_bp: &BifPoint,
    enl: &EnlargedNet<f64>,
    cfg: &SweepConfig,
    case_id: &str,
) -> InheritanceReport {
    let grid = cfg.grid();
    let net = &enl.network;
    let n_base = enl
        .steps
        .first()
        .map(|s| s.pre_network.n_species())
        .unwrap_or(net.n_species());
    // free parameter indices in the enlarged network, matched by name
    let enl_params = net.free_params();
    let free: Vec<usize> = base_bp
        .free_params
        .iter()
        .map(|f| {
            enl_params
                .iter()
                .position(|p| p == f)
                .expect("free param present")
        })
        .collect();
    let requires_negative_extras = enl.steps.iter().any(|s| {
        matches!(
            s.kind,
            StepKind::E2 { .. } | StepKind::E4 { .. } | StepKind::E5(_) | StepKind::E6(_)
        )
    });

    let mut records: Vec<EpsRecord> = Vec::with_capacity(grid.len());
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (x_full, kappa)
    for &eps in &grid {
        let record = track_one(
            base_chart,
            base_bp,
            enl,
            cfg,
            eps,
            n_base,
            &free,
            prev.as_ref(),
        );
        if record.ok {
            if let Some(bp) = &record.point {
                prev = match cfg.seeding {
                    Seeding::Continuation => Some((record.x_full.clone(), bp.kappa.clone())),
                    Seeding::ColdStart => None,
                };
            }
        }
        records.push(record);
    }

    let fits = convergence_fit(&records);
    let monotone_ok = monotone_check(&records);
    let mut verdict = Verdict::Pass;
    let mut first_failing_eps = None;
    for r in &records {
        if !r.ok {
            verdict = Verdict::Fail;
            first_failing_eps = Some(r.eps);
            break;
        }
        if requires_negative_extras && r.extra_eigs.iter().any(|e| e.0 >= 0.0) {
            verdict = Verdict::Fail;
            first_failing_eps = Some(r.eps);
            break;
        }
    }
    if verdict == Verdict::Pass {
        match &fits {
            Some(f) => {
                if !(f.kappa_ok() && f.theta_ok()) {
                    verdict = Verdict::Fail;
                }
            }
            None => verdict = Verdict::Inconclusive,
        }
    }
    InheritanceReport {
        case_id: case_id.to_string(),
        chain: enl.chain_names().iter().map(|s| s.to_string()).collect(),
        kind: base_bp.kind,
        base: base_bp.clone(),
        grid,
        records,
        fits,
        monotone_ok,
        requires_negative_extras,
        verdict,
        first_failing_eps,
    }
}

#[allow(clippy::too_many_arguments)]
fn track_one(
    base_chart: &Chart,
    base_bp: &BifPoint,
    enl: &EnlargedNet<f64>,
    cfg: &SweepConfig,
    eps: f64,
    n_base: usize,
    free: &[usize],
    prev: Option<&(Vec<f64>, Vec<f64>)>,
) -> EpsRecord {
    let fail = |reason: String| EpsRecord {
        eps,
        ok: false,
        fail_reason: Some(reason),
        point: None,
        x_full: Vec::new(),
        theta_base: Vec::new(),
        kappa_dev: f64::NAN,
        theta_dev: f64::NAN,
        matched_eigs: Vec::new(),
        extra_eigs: Vec::new(),
    };
    // anchor: the base bifurcation point lifted through the chain
    let kappa_seed: Vec<f64> = match prev {
        Some((_, k)) => k.clone(),
        None => base_bp.kappa.clone(),
    };
    let mut anchor = base_bp.x.clone();
    for step in &enl.steps {
        anchor = step.lift(&anchor, &kappa_seed, eps);
    }
    if anchor.iter().any(|&v| v <= 0.0) {
        return fail("lifted class anchor not positive".into());
    }
    let chart = match make_chart(&enl.network, &anchor) {
        Ok(c) => c,
        Err(e) => return fail(format!("chart construction failed: {e}")),
    };
    let field = reduced_field_scheduled(&enl.network, &enl.schedule, &chart, eps);
    // the lifted anchor already sits O(eps) from the solution on the right
    // class; seeding theta from the previous solution would project across
    // classes (whose constants move with eps), so theta starts at zero and
    // continuation carries over the parameter values
    let theta_seed = vec![0.0; chart.dim()];
    let bp = match locate_bifurcation(
        &field,
        base_bp.kind,
        &theta_seed,
        &kappa_seed,
        free,
        &cfg.tol,
    ) {
        Ok(bp) => bp,
        Err(e) => return fail(format!("locate failed: {e}")),
    };
    let x_full = chart.x_of_theta(&bp.theta);
    // deviations measured on the base species in base-chart coordinates
    let x_old: Vec<f64> = x_full[..n_base].to_vec();
    let theta_base = base_chart.theta_of_x(&x_old);
    let theta_dev = theta_base
        .iter()
        .zip(base_bp.theta.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let kappa_dev = bp
        .kappa
        .iter()
        .zip(base_bp.kappa.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    // eigenvalue bookkeeping: match r base eigenvalues by minimal total distance
    let enl_eigs: Vec<Complex<f64>> = bp
        .eigenvalues
        .iter()
        .map(|&(re, im)| Complex::new(re, im))
        .collect();
    let base_eigs: Vec<Complex<f64>> = base_bp
        .eigenvalues
        .iter()
        .map(|&(re, im)| Complex::new(re, im))
        .collect();
    let (matched, extra) = match_spectra(&base_eigs, &enl_eigs);
    let ok = bp.pass.all() && x_full.iter().all(|&v| v > 0.0);
    EpsRecord {
        eps,
        ok,
        fail_reason: if ok {
            None
        } else {
            Some(format!("point flags: {:?}", bp.pass))
        },
        point: Some(bp),
        x_full,
        theta_base,
        kappa_dev,
        theta_dev,
        matched_eigs: matched.iter().map(|l| (l.re, l.im)).collect(),
        extra_eigs: extra.iter().map(|l| (l.re, l.im)).collect(),
    }
}

/// Minimal-total-distance assignment of the base spectrum into the enlarged
/// spectrum; returns (matched in base order, leftover transverse values).
pub fn match_spectra(
    base: &[Complex<f64>],
    enlarged: &[Complex<f64>],
) -> (Vec<Complex<f64>>, Vec<Complex<f64>>) {
    let r = base.len();
    let m = enlarged.len();
    assert!(m >= r);
    // enumerate injections r -> m (dimensions here are tiny)
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut assignment = vec![0usize; r];
    fn recurse(
        base: &[Complex<f64>],
        enlarged: &[Complex<f64>],
        pos: usize,
        used: &mut Vec<bool>,
        assignment: &mut Vec<usize>,
        cost: f64,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if let Some((bc, _)) = best {
            if cost >= *bc {
                return;
            }
        }
        if pos == base.len() {
            *best = Some((cost, assignment.clone()));
            return;
        }
        for j in 0..enlarged.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            assignment[pos] = j;
            recurse(
                base,
                enlarged,
                pos + 1,
                used,
                assignment,
                cost + (base[pos] - enlarged[j]).norm(),
                best,
            );
            used[j] = false;
        }
    }
    let mut used = vec![false; m];
    recurse(
        base,
        enlarged,
        0,
        &mut used,
        &mut assignment,
        0.0,
        &mut best,
    );
    let assignment = best.map(|(_, a)| a).unwrap_or_default();
    let matched: Vec<Complex<f64>> = assignment.iter().map(|&j| enlarged[j]).collect();
    let extra: Vec<Complex<f64>> = (0..m)
        .filter(|j| !assignment.contains(j))
        .map(|j| enlarged[j])
        .collect();
    (matched, extra)
}

const DEVIATION_FLOOR: f64 = 1e-13;

/// Least-squares slopes of log(deviation) against log(eps) over successful
/// grid points; requires at least 4 of them, otherwise None (INCONCLUSIVE).
pub fn convergence_fit(records: &[EpsRecord]) -> Option<ConvergenceFit> {
    let ok: Vec<&EpsRecord> = records.iter().filter(|r| r.ok).collect();
    if ok.len() < 4 {
        return None;
    }
    let fit = |select: fn(&EpsRecord) -> f64| -> (f64, f64, bool, usize) {
        let pts: Vec<(f64, f64)> = ok
            .iter()
            .filter(|r| select(r) > DEVIATION_FLOOR)
            .map(|r| (r.eps.ln(), select(r).ln()))
            .collect();
        if pts.len() < 4 {
            // deviations at the floor: converged beyond measurement
            return (f64::INFINITY, f64::NEG_INFINITY, true, pts.len());
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        (slope, intercept, false, pts.len())
    };
    let (ks, ki, kf, kn) = fit(|r| r.kappa_dev);
    let (ts, ti, tf, tn) = fit(|r| r.theta_dev);
    Some(ConvergenceFit {
        kappa_slope: ks,
        kappa_intercept: ki,
        theta_slope: ts,
        theta_intercept: ti,
        points_used: kn.min(tn),
        kappa_at_floor: kf,
        theta_at_floor: tf,
    })
}

/// Deviations must decrease along the decreasing grid, with 5% slack at the
/// two largest eps and an allowance once values reach the numerical floor.
fn monotone_check(records: &[EpsRecord]) -> bool {
    let ok: Vec<&EpsRecord> = records.iter().filter(|r| r.ok).collect();
    let check = |select: fn(&EpsRecord) -> f64| -> bool {
        for i in 1..ok.len() {
            let (prev, cur) = (select(ok[i - 1]), select(ok[i]));
            if cur <= DEVIATION_FLOOR {
                continue;
            }
            let slack = if i <= 1 { 1.05 } else { 1.0 + 1e-9 };
            if cur > prev * slack {
                return false;
            }
        }
        true
    };
    check(|r| r.kappa_dev) && check(|r| r.theta_dev)
}

/// Recover the fast-coordinate values w = y_hat / eps of the final singular
/// step (E5/E6) from a record's full state; used for reporting.
pub fn fast_coordinates(enl: &EnlargedNet<f64>, record: &EpsRecord) -> Vec<f64> {
    let Some(step) = enl.steps.last() else {
        return Vec::new();
    };
    match &step.kind {
        StepKind::E5(s) | StepKind::E6(s) => {
            let n_pre = step.pre_network.n_species();
            s.hat
                .iter()
                .map(|&slot| record.x_full[n_pre + slot] / record.eps)
                .collect()
        }
        StepKind::E4 { y_index, .. } => vec![record.x_full[*y_index]],
        _ => Vec::new(),
    }
}
