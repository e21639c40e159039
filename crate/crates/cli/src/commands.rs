use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use zstab::algebra::{GroupDirection, RootDatumLite, Scene};
use zstab::charge::CentralCharge;
use zstab::exec::Execution;
use zstab::graded::{charges_dimension_bg, grad_components_bg, GradComponent};
use zstab::harness::{charge_sweep, kempf_ness_verify, InstanceSpec};
use zstab::moment::{self, solve_critical, z_flow, FlowStatus};
use zstab::num::CValue;
use zstab::scenario::ScenarioFile;
use zstab::stability::{brute_force_classify, classify as classify_scene, classify_allowing_mixed, optimal_destabiliser};
use zstab::{Error, Result};

use crate::failure::Failure;
use crate::table;

pub const THREADS_VAR: &str = "ZSTAB_THREADS";

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|source| Failure::Read { path: path.to_owned(), source })
}

fn write(path: &Path, text: &str) -> std::result::Result<(), Failure> {
    fs::write(path, text).map_err(|source| Failure::Write { path: path.to_owned(), source })
}

fn load(path: &Path, charge: &str) -> std::result::Result<(Scene, CentralCharge), Failure> {
    let file = ScenarioFile::from_json(&read(path)?)?;
    Ok((file.scene()?, file.charge(charge)?))
}

fn emit<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("report serialises");
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

#[derive(Serialize)]
struct OracleCheck {
    bound: i64,
    class: zstab::stability::StabilityClass,
    agrees: bool,
}

#[derive(Serialize)]
struct ClassifyReport {
    #[serde(flatten)]
    verdict: zstab::stability::Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
}

pub fn classify(
    path: &Path,
    charge: &str,
    oracle_bound: Option<i64>,
    allow_mixed: bool,
    strict: bool,
) -> std::result::Result<(), Failure> {
    let (scene, charge) = load(path, charge)?;
    let verdict = if allow_mixed {
        classify_allowing_mixed(&scene, &charge, oracle_bound.unwrap_or(1 + scene.weight_spread()))?
    } else {
        classify_scene(&scene, &charge)?
    };
    let oracle = match oracle_bound {
        Some(b) => {
            let o = brute_force_classify(&scene, &charge, b, Execution::Parallel)?;
            Some(OracleCheck { bound: b, class: o.class, agrees: o.class == verdict.class })
        }
        None => None,
    };
    let disagree = oracle.as_ref().is_some_and(|o| !o.agrees);
    let unstable = verdict.class == zstab::stability::StabilityClass::Unstable;
    emit(&ClassifyReport { verdict, oracle });
    if disagree {
        return Err(Failure::Disagreement("classification and oracle differ".into()));
    }
    if strict && unstable {
        return Err(Failure::Unstable);
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveReport {
    status: FlowStatus,
    sigma: Option<GroupDirection>,
    last_sigma: GroupDirection,
    residual_norm: f64,
    residual_floor: f64,
    iterations: usize,
}

pub fn solve(path: &Path, charge: &str, tol: f64, max_iter: usize, trace: Option<&Path>) -> std::result::Result<(), Failure> {
    let (scene, charge) = load(path, charge)?;
    let out = solve_critical(&scene, &charge, &GroupDirection::zero(scene.rank()), tol, max_iter)?;
    if let Some(p) = trace {
        write(p, &out.trace.to_csv())?;
    }
    emit(&SolveReport {
        status: out.status,
        sigma: out.sigma,
        last_sigma: out.last_sigma,
        residual_norm: out.residual_norm,
        residual_floor: out.residual_floor,
        iterations: out.iterations,
    });
    Ok(())
}

pub fn flow(path: &Path, charge: &str, t_end: f64, tol: f64, out: Option<&Path>) -> std::result::Result<(), Failure> {
    let (scene, charge) = load(path, charge)?;
    let trace = z_flow(&scene, &charge, &GroupDirection::zero(scene.rank()), t_end, tol)?;
    let csv = trace.to_csv();
    match out {
        Some(p) => write(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn destabilise(path: &Path, charge: &str) -> std::result::Result<(), Failure> {
    let (scene, charge) = load(path, charge)?;
    emit(&optimal_destabiliser(&scene, &charge)?);
    Ok(())
}

fn parse_sigma(s: &str) -> Result<GroupDirection> {
    let parts = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad sigma entry {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if parts.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse("sigma entries must be finite".into()));
    }
    Ok(GroupDirection(parts))
}

pub fn energy(path: &Path, charge: &str, sigma: &str) -> std::result::Result<(), Failure> {
    let (scene, charge) = load(path, charge)?;
    let sigma = parse_sigma(sigma)?;
    emit(&moment::energy(&scene, &charge, &sigma)?);
    Ok(())
}

#[derive(Serialize)]
struct GradReport {
    group: String,
    bound: i64,
    count: usize,
    charges_dimension: usize,
    components: Vec<GradComponent>,
}

pub fn grad_bg(group: &str, bound: i64) -> std::result::Result<(), Failure> {
    let datum = RootDatumLite::parse(group)?;
    let components = grad_components_bg(&datum, bound, Execution::Parallel)?;
    emit(&GradReport {
        group: datum.name.clone(),
        bound,
        count: components.len(),
        charges_dimension: charges_dimension_bg(&datum),
        components,
    });
    Ok(())
}

pub fn validate_charge(path: &Path) -> std::result::Result<(), Failure> {
    let t = table::parse(&read(path)?)?;
    emit(&zstab::charge::validate_tabulated(&t));
    Ok(())
}

/// `--threads` wins over the environment; neither means one per logical core.
fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_VAR) {
            Ok(v) => Some(v.trim().parse().map_err(|_| Error::Parse(format!("{THREADS_VAR}={v:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(Error::Precondition("thread count must be positive".into()));
    }
    Ok(n)
}

pub fn verify_kn(seed: u64, count: usize, threads: Option<usize>, tol: f64) -> std::result::Result<(), Failure> {
    let spec = InstanceSpec::new(seed, count);
    let mode = match thread_count(threads)? {
        Some(1) => Execution::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Precondition(e.to_string()))?;
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let report = kempf_ness_verify(&spec, tol, mode)?;
    emit(&report);
    if !report.all_agree() {
        return Err(Failure::Disagreement(format!("{} of {} instances", report.summary.disagreements, report.summary.total)));
    }
    Ok(())
}

pub fn sweep(path: &Path, from: &str, to: &str, steps: usize) -> std::result::Result<(), Failure> {
    let file = ScenarioFile::from_json(&read(path)?)?;
    let scene = file.scene()?;
    let (a, b) = (file.charge(from)?, file.charge(to)?);
    if a.phase() != b.phase() {
        return Err(Error::Precondition(format!("charges {from:?} and {to:?} have different phases")).into());
    }
    let direction: Vec<CValue> = b.coefficients().iter().zip(a.coefficients()).map(|(x, y)| x - y).collect();
    emit(&charge_sweep(&scene, &a, &direction, steps)?);
    Ok(())
}
