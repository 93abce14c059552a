use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use skorokhod::analysis::{
    extrema_cdf_at, law_dominance, loynes_check, monotonicity_audit, objective_vector, refine_with_midpoints,
    AuxiliaryFunction, DominanceVerdict, Extremum, COMPARE_TOL,
};
use skorokhod::calibration::{
    calibrate_with, rule_law, rule_law_refined, rule_levels, AtomFamily, ExampleCase, ExampleFamily, LevelUse,
};
use skorokhod::rules::{exact_stopped_law, exact_stopped_law_refined, mc_stopped_law, mc_stopped_law_refined};
use skorokhod::{
    azema_yor_boundary, convex_order, CalibrationOptions, CalibrationResult, DiscreteMeasure, McConfig, Orientation,
    StoppedLaw, StoppingRule, VhBarrier,
};

use crate::error::CliError;
use crate::instance::{create_dir, read_json, to_json, write_file, InstanceFile, Overrides, Settings};
use crate::render::barrier_svg;

/// Tolerance of the duration identity `E[τ] = m₂(μ) - m₂(λ)` for exact laws.
pub const DURATION_TOL: f64 = 1e-8;

/// Cap on the shared-randomness paths of the self-union check.
const LOYNES_PATHS: u64 = 10_000;

/// Result and warning streams of a command.
pub struct Console<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Console<'_> {
    fn say(&mut self, line: &str) -> Result<(), CliError> {
        writeln!(self.out, "{line}").map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })
    }

    fn warn(&mut self, line: &str) -> Result<(), CliError> {
        writeln!(self.err, "warning: {line}").map_err(|source| CliError::Io {
            path: "<stderr>".into(),
            source,
        })
    }

    fn emit(&mut self, out: Option<&Path>, contents: &str) -> Result<(), CliError> {
        match out {
            Some(path) => write_file(path, contents),
            None => self.out.write_all(contents.as_bytes()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
        }
    }
}

fn energy(lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> f64 {
    mu.moment(2) - lambda.moment(2)
}

/// CSVs of the running-max and running-min CDFs, on the recorded levels
/// and the midpoints between them.
pub fn extrema_csvs(law: &StoppedLaw) -> (String, String) {
    let mut levels: Vec<f64> = law.joint.iter().flat_map(|a| [a.max, a.min]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let levels = refine_with_midpoints(&levels);
    (
        extrema_cdf_at(law, Extremum::Max, &levels).to_csv(),
        extrema_cdf_at(law, Extremum::Min, &levels).to_csv(),
    )
}

pub fn cmd_calibrate(
    instance: &Path,
    orientation: Orientation,
    out: Option<&Path>,
    overrides: &Overrides,
    console: &mut Console,
) -> Result<CalibrationResult, CliError> {
    let inst = InstanceFile::read(instance)?;
    let settings = Settings::resolve(&inst.options, overrides)?;
    let opts = CalibrationOptions {
        tol: settings.tol,
        orientation,
        ..CalibrationOptions::default()
    };
    let result = calibrate_with(&inst.lambda, &inst.mu, &opts)?;
    console.emit(out, &to_json(&result))?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleReport {
    pub alpha: f64,
    pub case: ExampleCase,
    pub label: &'static str,
    pub residual_tv: Option<f64>,
    pub iterations: Option<usize>,
    pub expected_duration: Option<f64>,
    /// `m₂(μ) - m₂(λ)`, which equals `4(1 - α) - 1/2` for this family.
    pub second_moment_gap: f64,
    pub zero_level: Option<LevelUse>,
    pub barrier: Option<VhBarrier>,
    pub audit_violations: usize,
}

/// Runs the three-atom example family at `alpha`.
pub fn cmd_example(
    alpha: f64,
    out_dir: Option<&Path>,
    overrides: &Overrides,
    console: &mut Console,
) -> Result<ExampleReport, CliError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CliError::Input(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let family = ExampleFamily;
    let inst = InstanceFile::new(family.lambda(), family.member(alpha)?);
    let settings = Settings::resolve(&inst.options, overrides)?;
    let dir = out_dir.map(create_dir).transpose()?;
    if let Some(dir) = &dir {
        write_file(&dir.join("instance.json"), &to_json(&inst))?;
    }
    let mut report = ExampleReport {
        alpha,
        case: ExampleCase::NotInConvexOrder,
        label: ExampleCase::NotInConvexOrder.label(),
        residual_tv: None,
        iterations: None,
        expected_duration: None,
        second_moment_gap: energy(&inst.lambda, &inst.mu),
        zero_level: None,
        barrier: None,
        audit_violations: 0,
    };
    if !convex_order(&inst.lambda, &inst.mu) {
        console.say(&format!("case: {}", report.label))?;
        if let Some(dir) = &dir {
            write_file(&dir.join("report.json"), &to_json(&report))?;
        }
        return Err(CliError::ConvexOrder);
    }
    let result = calibrate_with(&inst.lambda, &inst.mu, &CalibrationOptions::with_tol(settings.tol))?;
    let law = &result.certificate;
    report.case = ExampleCase::from_certificate(law, COMPARE_TOL);
    report.label = report.case.label();
    report.residual_tv = Some(result.residual_tv);
    report.iterations = Some(result.iterations);
    report.expected_duration = Some(law.expected_duration);
    report.zero_level = Some(skorokhod::calibration::level_use(law, 0.0, COMPARE_TOL));
    report.barrier = Some(result.barrier().clone());
    report.audit_violations = monotonicity_audit(law).len();

    console.say(&format!("case: {}", report.label))?;
    console.say(&format!("residual_tv: {:e}", result.residual_tv))?;
    console.say(&format!("expected_duration: {}", law.expected_duration))?;
    console.say(&format!("second_moment_gap: {}", report.second_moment_gap))?;
    if let Some(dir) = &dir {
        let (max_csv, min_csv) = extrema_csvs(law);
        write_file(&dir.join("calibration.json"), &to_json(&result))?;
        write_file(
            &dir.join("barrier.svg"),
            &barrier_svg(result.barrier(), &inst.lambda, &inst.mu),
        )?;
        write_file(&dir.join("max_cdf.csv"), &max_csv)?;
        write_file(&dir.join("min_cdf.csv"), &min_csv)?;
        write_file(&dir.join("joint_law.csv"), &law.to_csv())?;
        write_file(&dir.join("report.json"), &to_json(&report))?;
    }
    if result.residual_tv > settings.tol {
        return Err(CliError::Verification(format!(
            "residual {:e} above {:e}",
            result.residual_tv, settings.tol
        )));
    }
    if (law.expected_duration - report.second_moment_gap).abs() > DURATION_TOL {
        return Err(CliError::Verification("duration identity".into()));
    }
    if report.audit_violations > 0 {
        return Err(CliError::Verification("stops away from the running extrema".into()));
    }
    Ok(report)
}

/// Rules selectable in `compare`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RuleName {
    Perkins,
    Ay,
    Hp,
    Root,
    Rost,
}

impl RuleName {
    fn family(self) -> &'static str {
        match self {
            RuleName::Perkins => "perkins",
            RuleName::Ay => "azema_yor",
            RuleName::Hp => "hobson_pedersen",
            RuleName::Root => "root",
            RuleName::Rost => "rost",
        }
    }
}

/// Externally supplied rules for the families that are not calibrated here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleParams {
    pub rules: Vec<StoppingRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveRow {
    pub rule: String,
    pub phi: String,
    pub g: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationRow {
    pub rule: String,
    pub evaluation: &'static str,
    pub expected_duration: f64,
    pub endpoint_tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub rules: Vec<String>,
    /// `max_law[i][j]` compares the running-max laws of rules `i` and `j`.
    pub max_law: Vec<Vec<DominanceVerdict>>,
    pub min_law: Vec<Vec<DominanceVerdict>>,
    pub objectives: Vec<ObjectiveRow>,
    pub durations: Vec<DurationRow>,
    pub second_moment_gap: f64,
}

enum Contender {
    Calibrated(Box<CalibrationResult>),
    Exact(StoppingRule),
    Sampled(StoppingRule),
}

impl Contender {
    fn levels(&self) -> Vec<f64> {
        match self {
            Contender::Calibrated(r) => rule_levels(r),
            Contender::Exact(rule) | Contender::Sampled(rule) => rule.coordinates(),
        }
    }
}

pub fn cmd_compare(
    instance: &Path,
    rules: &[RuleName],
    params: Option<&Path>,
    out: Option<&Path>,
    overrides: &Overrides,
    console: &mut Console,
) -> Result<CompareReport, CliError> {
    let inst = InstanceFile::read(instance)?;
    let settings = Settings::resolve(&inst.options, overrides)?;
    if !convex_order(&inst.lambda, &inst.mu) {
        return Err(CliError::ConvexOrder);
    }
    let params: Option<RuleParams> = params.map(read_json).transpose()?;
    let mut names = Vec::new();
    let mut contenders = Vec::new();
    for &name in rules {
        if names.iter().any(|n| n == name.family()) {
            continue;
        }
        let contender = match name {
            RuleName::Perkins => Contender::Calibrated(Box::new(calibrate_with(
                &inst.lambda,
                &inst.mu,
                &CalibrationOptions::with_tol(settings.tol),
            )?)),
            RuleName::Ay if inst.lambda.len() == 1 => Contender::Exact(StoppingRule::AzemaYor {
                boundary: azema_yor_boundary(&inst.mu),
            }),
            RuleName::Ay => {
                console.warn("ay needs a point-mass starting law; skipped")?;
                continue;
            }
            _ => match params
                .as_ref()
                .and_then(|p| p.rules.iter().find(|r| r.name() == name.family()))
            {
                Some(rule) => Contender::Sampled(rule.clone()),
                None => {
                    console.warn(&format!("no parameters for {}; skipped", name.family()))?;
                    continue;
                }
            },
        };
        names.push(name.family().to_string());
        contenders.push(contender);
    }

    let mut levels: Vec<f64> = contenders.iter().flat_map(Contender::levels).collect();
    levels.extend(inst.lambda.locations().chain(inst.mu.locations()));
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let laws = contenders
        .iter()
        .map(|c| match c {
            Contender::Calibrated(r) => rule_law_refined(r, &levels),
            Contender::Exact(rule) => exact_stopped_law_refined(rule, &inst.lambda, &levels),
            Contender::Sampled(rule) => mc_stopped_law_refined(rule, &inst.lambda, &levels, &settings.mc),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let matrix = |which: Extremum| -> Vec<Vec<DominanceVerdict>> {
        laws.iter()
            .map(|a| laws.iter().map(|b| law_dominance(a, b, which)).collect())
            .collect()
    };
    let support: Vec<f64> = inst.lambda.locations().chain(inst.mu.locations()).collect();
    let battery = AuxiliaryFunction::battery(&support);
    let mut objectives = Vec::new();
    for (name, law) in names.iter().zip(&laws) {
        for phi in &battery {
            objectives.push(ObjectiveRow {
                rule: name.clone(),
                phi: phi.name(),
                g: objective_vector(law, phi).as_array(),
            });
        }
    }
    let durations = names
        .iter()
        .zip(&contenders)
        .zip(&laws)
        .map(|((name, c), law)| DurationRow {
            rule: name.clone(),
            evaluation: if matches!(c, Contender::Sampled(_)) {
                "monte_carlo"
            } else {
                "exact"
            },
            expected_duration: law.expected_duration,
            endpoint_tv: law.endpoint_law().tv_distance(&inst.mu),
        })
        .collect();
    let report = CompareReport {
        max_law: matrix(Extremum::Max),
        min_law: matrix(Extremum::Min),
        rules: names,
        objectives,
        durations,
        second_moment_gap: energy(&inst.lambda, &inst.mu),
    };
    console.emit(out, &to_json(&report))?;
    Ok(report)
}

/// One line of the verification report; `pass` is `None` for checks that
/// do not apply to the rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: String,
    pub pass: Option<bool>,
}

impl Check {
    fn new(name: &'static str, value: String, pass: bool) -> Self {
        Check {
            name,
            value,
            pass: Some(pass),
        }
    }

    fn skipped(name: &'static str, why: &str) -> Self {
        Check {
            name,
            value: why.to_string(),
            pass: None,
        }
    }
}

enum RuleDoc {
    Bare(StoppingRule),
    Calibrated(Box<CalibrationResult>),
}

fn read_rule(path: &Path) -> Result<RuleDoc, CliError> {
    let value: serde_json::Value = read_json(path)?;
    let parse_err = |source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    };
    if value.get("rule").is_some_and(serde_json::Value::is_object) {
        Ok(RuleDoc::Calibrated(Box::new(
            serde_json::from_value(value).map_err(parse_err)?,
        )))
    } else {
        Ok(RuleDoc::Bare(serde_json::from_value(value).map_err(parse_err)?))
    }
}

fn exact_checks(law: &StoppedLaw, inst: &InstanceFile, tol: f64, checks: &mut Vec<Check>) {
    let tv = law.endpoint_law().tv_distance(&inst.mu);
    checks.push(Check::new("residual_tv", format!("{tv:e}"), tv <= tol));
    let gap = (law.expected_duration - energy(&inst.lambda, &inst.mu)).abs();
    checks.push(Check::new("duration_identity", format!("{gap:e}"), gap <= DURATION_TOL));
}

fn self_union_check(
    barrier: &VhBarrier,
    lambda: &DiscreteMeasure,
    atom_stop: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    tol: f64,
    mc: &McConfig,
) -> Result<Check, CliError> {
    let cfg = McConfig {
        n_paths: mc.n_paths.min(LOYNES_PATHS),
        ..*mc
    };
    let report = loynes_check(barrier, barrier, lambda, atom_stop, &cfg)?;
    let tv = report.union_law.endpoint_law().tv_distance(mu);
    let pass = report.violations == 0 && report.endpoint_tv_r_union == 0.0 && tv <= tol;
    Ok(Check::new(
        "loynes_self_union",
        format!(
            "{} violations in {} paths, union residual {tv:e}",
            report.violations, report.paths
        ),
        pass,
    ))
}

/// Largest deviation of a sampled endpoint law from `mu`, in binomial
/// standard errors.
fn endpoint_z(sampled: &DiscreteMeasure, mu: &DiscreteMeasure, n_paths: u64) -> f64 {
    let n = n_paths as f64;
    sampled
        .locations()
        .chain(mu.locations())
        .map(|x| {
            let (p, q) = (mu.mass_at(x), sampled.mass_at(x));
            let se = (p * (1.0 - p) / n).sqrt();
            if se > 0.0 {
                (q - p).abs() / se
            } else if (q - p).abs() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Standard errors allowed per atom when a rule is checked by sampling.
pub const MC_Z_MAX: f64 = 4.0;

/// Relative tolerance of the sampled duration identity.
pub const MC_DURATION_RTOL: f64 = 0.02;

pub fn cmd_verify(
    instance: &Path,
    rule_path: &Path,
    overrides: &Overrides,
    console: &mut Console,
) -> Result<Vec<Check>, CliError> {
    let inst = InstanceFile::read(instance)?;
    let settings = Settings::resolve(&inst.options, overrides)?;
    let doc = read_rule(rule_path)?;
    let mut checks = Vec::new();
    match &doc {
        RuleDoc::Calibrated(r) => {
            let same = r.lambda == inst.lambda && r.mu == inst.mu;
            checks.push(Check::new(
                "instance",
                if same { "matches" } else { "differs" }.into(),
                same,
            ));
            let law = rule_law(r)?;
            exact_checks(&law, &inst, settings.tol, &mut checks);
            let tv = law.joint_tv(&r.certificate, 0.0);
            checks.push(Check::new("certificate", format!("{tv:e}"), tv <= 1e-12));
            let bad = monotonicity_audit(&law).len() + monotonicity_audit(&r.certificate).len();
            checks.push(Check::new("monotonicity_audit", format!("{bad} violations"), bad == 0));
            let (lambda, mu) = match r.orientation {
                Orientation::MaxPriority => (inst.lambda.clone(), inst.mu.clone()),
                Orientation::MinPriority => (inst.lambda.reflected(), inst.mu.reflected()),
            };
            checks.push(self_union_check(
                r.barrier(),
                &lambda,
                r.atom_stop(),
                &mu,
                settings.tol,
                &settings.mc,
            )?);
        }
        RuleDoc::Bare(rule @ StoppingRule::Perkins { barrier, atom_stop }) => {
            let law = exact_stopped_law(rule, &inst.lambda)?;
            exact_checks(&law, &inst, settings.tol, &mut checks);
            let bad = monotonicity_audit(&law).len();
            checks.push(Check::new("monotonicity_audit", format!("{bad} violations"), bad == 0));
            checks.push(self_union_check(
                barrier,
                &inst.lambda,
                atom_stop,
                &inst.mu,
                settings.tol,
                &settings.mc,
            )?);
        }
        RuleDoc::Bare(rule @ StoppingRule::AzemaYor { .. }) => {
            let law = exact_stopped_law(rule, &inst.lambda)?;
            exact_checks(&law, &inst, settings.tol, &mut checks);
            checks.push(Check::skipped("monotonicity_audit", "not a vh-barrier rule"));
            checks.push(Check::skipped("loynes_self_union", "not a vh-barrier rule"));
        }
        RuleDoc::Bare(rule) => {
            let law = mc_stopped_law(rule, &inst.lambda, &settings.mc)?;
            let end = law.endpoint_law();
            let z = endpoint_z(&end, &inst.mu, settings.mc.n_paths);
            checks.push(Check::new(
                "residual_tv",
                format!(
                    "{:e} (largest deviation {z:.2} standard errors)",
                    end.tv_distance(&inst.mu)
                ),
                z <= MC_Z_MAX,
            ));
            let target = energy(&inst.lambda, &inst.mu);
            let gap = (law.expected_duration - target).abs();
            checks.push(Check::new(
                "duration_identity",
                format!("{gap:e}"),
                gap <= MC_DURATION_RTOL * target.abs().max(1.0),
            ));
            checks.push(Check::skipped("monotonicity_audit", "not a vh-barrier rule"));
            checks.push(Check::skipped("loynes_self_union", "not a vh-barrier rule"));
        }
    }
    for c in &checks {
        let verdict = match c.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        console.say(&format!("{}: {} {verdict}", c.name, c.value))?;
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c.pass == Some(false))
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        Ok(checks)
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
