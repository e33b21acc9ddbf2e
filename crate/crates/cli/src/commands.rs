//! One handler per subcommand.

use std::path::Path;

use serde::Serialize;

use ejm_core::linalg::{tetrahedron_vectors, BlochVector};
use ejm_core::local::{
    anneal_search, asymmetric_model, bell_lp_check, chsh_value, evaluate_model, exhaustive_search,
    q_model, q_model_all_equal_closed_form, q_model_bit_rows, AnnealOptions, BellTarget,
    BitCombinationRow, ExhaustiveOptions, LocalityCertificate, Objective, RingLocalModel,
    SearchResult, Target, Verdict,
};
use ejm_core::measurements::{basis_diagnostics, BasisLabel, StateDiagnostics, TwoQubitBasis};
use ejm_core::network::{
    closed_form_line, closed_form_polygon, coincidence_stats, confirmed_dyadic, event_probability,
    joint_distribution_naive, table2, CoincidenceStats, DistributionReport, DyadicProbability,
    Event, JointDistribution, NetworkTopology, PatternClass, Table2Row, TopologyKind,
};
use ejm_core::{Error, Result};

use crate::output::{distribution_csv, dyadic_cells, opt, Csv, Emitted};
use crate::{
    io_error, BasisChoice, BellTargetChoice, ChainArgs, CmdResult, Command, ObjectiveChoice,
    RunConfig, SearchMode, TargetChoice, TopologyChoice,
};

pub(crate) fn dispatch(config: &RunConfig) -> CmdResult {
    let tol = config.tolerance;
    match &config.command {
        Command::Validate { basis, basis_file } => validate(*basis, basis_file.as_deref(), tol),
        Command::Triangle { basis } => triangle(*basis),
        Command::Line(args) => chain(TopologyKind::OpenLine, args),
        Command::Polygon(args) => chain(TopologyKind::Polygon, args),
        Command::Table2 { max_n } => table2_report(*max_n),
        Command::Stats { topology, n, basis } => stats(*topology, *n, *basis),
        Command::Qmodel { scan } => qmodel(scan),
        Command::Asym => asym(),
        Command::Search {
            mode,
            cardinality,
            objective,
            target,
            n,
            bijective,
            optimize_weights,
            steps,
        } => search(&SearchArgs {
            mode: *mode,
            cardinality: *cardinality,
            objective: *objective,
            target: *target,
            n: *n,
            bijective: *bijective,
            optimize_weights: *optimize_weights,
            steps: *steps,
            seed: config.seed,
        }),
        Command::BellCheck { target, basis } => bell_check(*target, *basis),
        Command::VerifyAll { basis_file } => {
            crate::verify::verify_report(tol, basis_file.as_deref())
        }
    }
}

pub(crate) fn load_basis(path: &Path) -> Result<TwoQubitBasis> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    TwoQubitBasis::from_json(&text)
}

pub(crate) fn builtin_basis(choice: BasisChoice) -> Result<TwoQubitBasis> {
    TwoQubitBasis::from_label(choice.label())
}

/// Largest deviation of the EJM partial Bloch vectors from ±(√3/2)·m̂_j and
/// of their norms from √3/2. Only meaningful for a basis labelled EJM.
pub(crate) fn tetrahedral_residual(states: &[StateDiagnostics]) -> f64 {
    let half_root3 = 3f64.sqrt() / 2.0;
    states
        .iter()
        .zip(tetrahedron_vectors())
        .map(|(s, m)| {
            let expected: BlochVector = m.scale(half_root3);
            s.partial_bloch_first
                .max_abs_diff(&expected)
                .max(s.partial_bloch_second.max_abs_diff(&-expected))
                .max((s.partial_bloch_norms.0 - half_root3).abs())
                .max((s.partial_bloch_norms.1 - half_root3).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct ValidateReport {
    anchor: &'static str,
    basis: BasisLabel,
    tolerance: f64,
    passed: bool,
    max_gram_residual: f64,
    worst_pair: (usize, usize),
    max_consistency_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tetrahedral_residual: Option<f64>,
    states: Vec<StateDiagnostics>,
}

fn validate(choice: BasisChoice, file: Option<&Path>, tol: f64) -> CmdResult {
    let basis = match file {
        Some(path) => load_basis(path)?,
        None => builtin_basis(choice)?,
    };
    let diag = basis_diagnostics(&basis);
    let tetra = (basis.label() == BasisLabel::Ejm).then(|| tetrahedral_residual(&diag.states));
    let passed = diag.max_gram_residual <= tol && tetra.is_none_or(|r| r <= tol);
    let report = ValidateReport {
        anchor: "two-qubit basis: orthonormality and partial Bloch vectors",
        basis: basis.label(),
        tolerance: tol,
        passed,
        max_gram_residual: diag.max_gram_residual,
        worst_pair: diag.worst_pair,
        max_consistency_residual: diag.max_consistency_residual,
        tetrahedral_residual: tetra,
        states: diag.states,
    };
    let mut csv = Csv::new(&[
        "state", "bloch1_x", "bloch1_y", "bloch1_z", "bloch2_x", "bloch2_y", "bloch2_z",
        "schmidt1", "schmidt2",
    ]);
    for (j, s) in report.states.iter().enumerate() {
        let (a, b) = (
            s.partial_bloch_first.to_array(),
            s.partial_bloch_second.to_array(),
        );
        csv.row(
            [
                (j + 1) as f64,
                a[0],
                a[1],
                a[2],
                b[0],
                b[1],
                b[2],
                s.schmidt.0,
                s.schmidt.1,
            ]
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if i == 0 {
                    (j + 1).to_string()
                } else {
                    v.to_string()
                }
            }),
        );
    }
    Emitted::new(&report, csv.finish(), passed)
}

#[derive(Serialize)]
struct DistributionOutput {
    anchor: &'static str,
    #[serde(flatten)]
    distribution: DistributionReport,
    all_equal: f64,
    patterns: Vec<PatternClass>,
}

fn distribution_output(anchor: &'static str, d: &JointDistribution) -> CmdResult {
    let report = DistributionOutput {
        anchor,
        distribution: d.report(),
        all_equal: d.all_equal(),
        patterns: coincidence_stats(d).patterns,
    };
    let csv = distribution_csv(d.n_parties(), &report.distribution.probabilities);
    Emitted::new(&report, csv, true)
}

fn triangle(basis: BasisChoice) -> CmdResult {
    let d = joint_distribution_naive(NetworkTopology::triangle(), &builtin_basis(basis)?)?;
    distribution_output(
        "triangle of singlets: pattern values 25/256, 1/256, 5/256 for the EJM",
        &d,
    )
}

#[derive(Serialize)]
struct EventReport {
    anchor: &'static str,
    topology: TopologyKind,
    n: usize,
    basis: BasisLabel,
    event: String,
    method: &'static str,
    p: f64,
    dyadic: Option<DyadicProbability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<f64>,
}

/// Grid for exact reconstruction of network probabilities: 2^-(4·sources),
/// capped so that the confirming grid stays inside 64-bit numerators.
pub(crate) fn network_exponent(top: NetworkTopology) -> u32 {
    (4 * top.n_sources() as u32).min(52)
}

fn chain(kind: TopologyKind, args: &ChainArgs) -> CmdResult {
    let top = NetworkTopology::new(kind, args.n)?;
    let basis = builtin_basis(args.basis)?;
    let anchor = match kind {
        TopologyKind::OpenLine => "open line of singlets with dangling ends",
        TopologyKind::Polygon => "polygon of singlets",
    };
    let Some(event) = &args.event else {
        let d = joint_distribution_naive(top, &basis)?;
        return distribution_output(anchor, &d);
    };
    let event: Event = event.parse()?;
    let p = event_probability(top, &basis, &event)?;
    let closed_form = match (&event, args.basis) {
        (Event::AllEqual, BasisChoice::Ejm | BasisChoice::EjmZ) => Some(match kind {
            TopologyKind::OpenLine => closed_form_line(args.n)?,
            TopologyKind::Polygon => closed_form_polygon(args.n)?,
        }),
        _ => None,
    };
    let report = EventReport {
        anchor,
        topology: kind,
        n: args.n,
        basis: basis.label(),
        event: event.to_string(),
        method: "transfer matrices",
        p,
        dyadic: confirmed_dyadic(p, network_exponent(top)),
        closed_form,
    };
    let mut csv = Csv::new(&[
        "topology",
        "n",
        "basis",
        "event",
        "p",
        "numerator",
        "denominator",
        "closed_form",
    ]);
    let [num, den] = dyadic_cells(report.dyadic);
    csv.row([
        format!("{kind:?}"),
        args.n.to_string(),
        report.basis.to_string(),
        report.event.clone(),
        p.to_string(),
        num,
        den,
        opt(closed_form),
    ]);
    Emitted::new(&report, csv.finish(), true)
}

#[derive(Serialize)]
struct Table2Report {
    anchor: &'static str,
    rows: Vec<Table2Row>,
}

fn table2_report(max_n: usize) -> CmdResult {
    let rows = table2(max_n)?;
    let mut csv = Csv::new(&[
        "n",
        "line",
        "line_exact",
        "polygon",
        "polygon_exact",
        "conditional",
        "conditional_exact",
    ]);
    for r in &rows {
        csv.row([
            r.n.to_string(),
            r.line.to_string(),
            opt(r.line_exact),
            opt(r.polygon),
            opt(r.polygon_exact),
            opt(r.conditional),
            opt(r.conditional_exact),
        ]);
    }
    let report = Table2Report {
        anchor: "all-equal probabilities for N parties on a line and on a polygon, and their ratio",
        rows,
    };
    Emitted::new(&report, csv.finish(), true)
}

#[derive(Serialize)]
struct StatsReport {
    anchor: &'static str,
    topology: TopologyKind,
    basis: BasisLabel,
    #[serde(flatten)]
    stats: CoincidenceStats,
}

fn stats(topology: TopologyChoice, n: usize, basis: BasisChoice) -> CmdResult {
    let top = NetworkTopology::new(topology.kind(), n)?;
    let basis = builtin_basis(basis)?;
    let d = joint_distribution_naive(top, &basis)?;
    let report = StatsReport {
        anchor: "coincidence statistics: p(a=b) = 7/16, p(a=b=c) = 25/64, p(a=k|b=c=k) = 25/28 on the EJM triangle",
        topology: top.kind(),
        basis: basis.label(),
        stats: coincidence_stats(&d),
    };
    let s = &report.stats;
    let mut csv = Csv::new(&["quantity", "value"]);
    csv.row(["p_all_equal".to_string(), s.p_all_equal.to_string()]);
    csv.row(["p_pair_equal".to_string(), opt(s.p_pair_equal)]);
    for k in 0..4 {
        if let Some(c) = s.p_cond_pair {
            csv.row([format!("p_cond_pair_{}", k + 1), c[k].to_string()]);
        }
        if let Some(c) = s.p_cond_triple {
            csv.row([format!("p_cond_triple_{}", k + 1), c[k].to_string()]);
        }
    }
    for (i, m) in s.marginals.iter().enumerate() {
        for (k, p) in m.iter().enumerate() {
            csv.row([format!("marginal_{}_{}", i + 1, k + 1), p.to_string()]);
        }
    }
    for c in &s.patterns {
        csv.row([format!("pattern_{}", c.pattern), c.total.to_string()]);
    }
    Emitted::new(&report, csv.finish(), true)
}

pub(crate) fn parse_scan(scan: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = scan.split(':').collect();
    let bad = || Error::Domain(format!("scan {scan:?} is not LO:HI:STEP"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::Range(format!(
            "scan bounds {lo}..{hi} must lie in [0, 1]"
        )));
    }
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Range(format!("scan step {step} must be positive")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 100_001 {
        return Err(Error::capacity("scan points", count as u128, 100_001));
    }
    Ok((0..count)
        .map(|i| (lo + i as f64 * step).min(1.0))
        .collect())
}

#[derive(Serialize)]
struct QRow {
    q: f64,
    p_all_equal: f64,
    closed_form: f64,
    dyadic: Option<DyadicProbability>,
}

#[derive(Serialize)]
struct QReport {
    anchor: &'static str,
    rows: Vec<QRow>,
    peak_q: f64,
    peak_p: f64,
    peak_dyadic: Option<DyadicProbability>,
    bit_combinations: Vec<BitCombinationRow>,
}

fn qmodel(scan: &str) -> CmdResult {
    let mut rows = Vec::new();
    for q in parse_scan(scan)? {
        let p = evaluate_model(&q_model(q)?)?.all_equal();
        rows.push(QRow {
            q,
            p_all_equal: p,
            closed_form: q_model_all_equal_closed_form(q),
            dyadic: confirmed_dyadic(p, 30),
        });
    }
    let peak = rows.iter().fold(&rows[0], |best, r| {
        if r.p_all_equal > best.p_all_equal {
            r
        } else {
            best
        }
    });
    let report = QReport {
        anchor: "symmetric q-model: p(a=b=c) = (13+9q-9q^2)/64, maximal 61/256 at q = 1/2",
        peak_q: peak.q,
        peak_p: peak.p_all_equal,
        peak_dyadic: peak.dyadic,
        bit_combinations: q_model_bit_rows()?,
        rows,
    };
    let mut csv = Csv::new(&[
        "q",
        "p_all_equal",
        "closed_form",
        "numerator",
        "denominator",
    ]);
    for r in &report.rows {
        let [num, den] = dyadic_cells(r.dyadic);
        csv.row([
            r.q.to_string(),
            r.p_all_equal.to_string(),
            r.closed_form.to_string(),
            num,
            den,
        ]);
    }
    Emitted::new(&report, csv.finish(), true)
}

#[derive(Serialize)]
struct AsymReport {
    anchor: &'static str,
    p_all_equal: f64,
    p_pair_equal: f64,
    p_all_equal_given_bc: f64,
    all_distinct_zero: usize,
    all_distinct_total: usize,
    model: RingLocalModel,
}

fn asym() -> CmdResult {
    let model = asymmetric_model();
    let d = evaluate_model(&model)?;
    let distinct = |o: &[u8]| o[0] != o[1] && o[1] != o[2] && o[0] != o[2];
    let p_bc = d.event(|o| o[1] == o[2]);
    let report = AsymReport {
        anchor: "asymmetric 3-local model: p(a=b=c) = 1/2, p(a=b) = 1/2, 20 of 24 all-distinct patterns vanish",
        p_all_equal: d.all_equal(),
        p_pair_equal: d.event(|o| o[0] == o[1]),
        p_all_equal_given_bc: d.all_equal() / p_bc,
        all_distinct_zero: d.entries().filter(|(o, p)| distinct(o) && *p == 0.0).count(),
        all_distinct_total: d.entries().filter(|(o, _)| distinct(o)).count(),
        model,
    };
    let mut csv = Csv::new(&["quantity", "value"]);
    csv.row(["p_all_equal".to_string(), report.p_all_equal.to_string()]);
    csv.row(["p_pair_equal".to_string(), report.p_pair_equal.to_string()]);
    csv.row([
        "p_all_equal_given_bc".to_string(),
        report.p_all_equal_given_bc.to_string(),
    ]);
    csv.row([
        "all_distinct_zero".to_string(),
        report.all_distinct_zero.to_string(),
    ]);
    csv.row([
        "all_distinct_total".to_string(),
        report.all_distinct_total.to_string(),
    ]);
    Emitted::new(&report, csv.finish(), true)
}

struct SearchArgs {
    mode: SearchMode,
    cardinality: usize,
    objective: ObjectiveChoice,
    target: TargetChoice,
    n: usize,
    bijective: bool,
    optimize_weights: bool,
    steps: u64,
    seed: u64,
}

#[derive(Serialize)]
struct SearchReport {
    anchor: &'static str,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    reevaluated: f64,
    #[serde(flatten)]
    result: SearchResult,
}

fn search(args: &SearchArgs) -> CmdResult {
    let objective = match args.objective {
        ObjectiveChoice::AllEqual => Objective::MaxAllEqual,
        ObjectiveChoice::L1 => Objective::MinL1ToTarget,
        ObjectiveChoice::Linf => Objective::MinLinfToTarget,
    };
    let top = NetworkTopology::polygon(args.n)?;
    let target = if objective.needs_target() {
        let d = joint_distribution_naive(top, &builtin_basis(BasisChoice::Ejm)?)?;
        Some(match args.target {
            TargetChoice::Fine => Target::new(&d),
            TargetChoice::Coarse => Target::coarse_grained(&d),
        })
    } else {
        None
    };
    let (mode, result, seed) = match args.mode {
        SearchMode::Exhaustive => {
            if !top.is_triangle() {
                return Err(Error::Domain(
                    "exhaustive search runs on the triangle only (--n 3)".into(),
                ));
            }
            let mut opts = ExhaustiveOptions::new(args.cardinality, objective);
            opts.target = target.clone();
            opts.bijective_responses = args.bijective;
            opts.optimize_weights = args.optimize_weights;
            ("exhaustive", exhaustive_search(&opts)?, None)
        }
        SearchMode::Anneal => {
            let mut opts = AnnealOptions::new(top, args.cardinality, objective);
            opts.target = target.clone();
            opts.seed = args.seed;
            opts.schedule.steps = args.steps;
            ("anneal", anneal_search(&opts)?, Some(args.seed))
        }
    };
    let reevaluated = result.reevaluate(target.as_ref())?;
    let report = SearchReport {
        anchor: "classical N-local models probing the all-equal correlation",
        mode,
        target: target.as_ref().map(|t| t.label().to_string()),
        seed,
        reevaluated,
        result,
    };
    let mut csv = Csv::new(&[
        "mode",
        "objective",
        "cardinality",
        "value",
        "reevaluated",
        "candidates",
    ]);
    csv.row([
        mode.to_string(),
        report.result.objective.to_string(),
        report.result.cardinality.to_string(),
        report.result.value.to_string(),
        reevaluated.to_string(),
        report.result.candidates.to_string(),
    ]);
    let ok = (reevaluated - report.result.value).abs() <= 1e-12;
    Emitted::new(&report, csv.finish(), ok)
}

#[derive(Serialize)]
struct BellReport {
    anchor: &'static str,
    chsh: f64,
    verified: bool,
    #[serde(flatten)]
    certificate: LocalityCertificate,
}

pub(crate) fn bell_target(choice: BellTargetChoice, basis: BasisChoice) -> Result<BellTarget> {
    Ok(match choice {
        BellTargetChoice::EjmLine => {
            let d =
                joint_distribution_naive(NetworkTopology::open_line(4)?, &builtin_basis(basis)?)?;
            BellTarget::from_open_line(&d)?
        }
        BellTargetChoice::Uniform => BellTarget::uniform(),
        BellTargetChoice::PrBox => BellTarget::pr_box(),
    })
}

fn bell_check(choice: BellTargetChoice, basis: BasisChoice) -> CmdResult {
    let target = bell_target(choice, basis)?;
    let certificate = bell_lp_check(&target);
    let verified = certificate.verify(&target);
    let report = BellReport {
        anchor: "four-party line read as a two-party Bell scenario p(a2,a3|a1,a4)",
        chsh: chsh_value(&target),
        verified,
        certificate,
    };
    let c = &report.certificate;
    let mut csv = Csv::new(&[
        "target",
        "verdict",
        "verified",
        "residual",
        "classical_bound",
        "target_value",
        "margin",
        "iterations",
    ]);
    csv.row([
        c.target.clone(),
        format!("{:?}", c.verdict).to_uppercase(),
        verified.to_string(),
        opt(c.residual),
        opt(c.classical_bound),
        opt(c.target_value),
        opt(c.margin),
        c.iterations.to_string(),
    ]);
    let ok = c.verdict != Verdict::Inconclusive && verified;
    Emitted::new(&report, csv.finish(), ok)
}
