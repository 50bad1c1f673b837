use serde::Serialize;
use serde_json::{json, Value};

use singcert::catalog::{self, CatalogEntry};
use singcert::certified_implicit::{smooth_implicit_certificate, verify_implicit, ImplicitVerifyOptions};
use singcert::certified_inverse::{smooth_inverse_certificate, verify_inverse, InverseVerifyOptions};
use singcert::jets::{estimate_ck_norm, inverse_bound_narrow, max_variable_index, parse_polynomial_map, Ball, CkNormBound, PolynomialMap};
use singcert::morse_suite::{
    find_critical_points, openness_certificate, perturb_to_morse, verify_openness, EtaOptions, OpennessVerifyOptions,
    PerturbOptions,
};
use singcert::rank_charts::{rank_certificate, verify_rank, RankVerifyOptions, StraighteningCharts};
use singcert::report::VerificationReport;
use singcert::splitting::{build_split_chart, verify_split, SplitOptions, SplitVerifyOptions};
use singcert::Error;

use crate::args::{Command, MorseAction, Theorem};

/// Everything a run depends on, after defaults are filled in.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub expr: String,
    pub catalog: Option<String>,
    pub n: usize,
    pub at: Vec<f64>,
    pub k: usize,
    pub grid: usize,
    pub tol: Option<f64>,
    pub seed: u64,
    pub c_entropy: f64,
    #[serde(rename = "K")]
    pub k_norm: Option<f64>,
    pub radius: f64,
    pub m: Option<usize>,
    pub p: Option<usize>,
    pub eps: Option<f64>,
    pub fbar: Option<String>,
    pub samples: Option<usize>,
    pub search_grid: Option<usize>,
}

pub enum Failure {
    /// Bad flags or unparsable input.
    Usage(String),
    /// The library declined to issue a certificate.
    Refused(Error),
    /// A check failed or the verifier itself broke down.
    Verification(Error),
}

pub struct Outcome {
    pub result: Value,
    pub verification: Option<VerificationReport>,
}

type Run = Result<Outcome, Failure>;

fn usage(e: Error) -> Failure {
    if e.is_refusal() {
        Failure::Refused(e)
    } else {
        Failure::Usage(e.to_string())
    }
}

fn during_verification(e: Error) -> Failure {
    match e {
        Error::Parse(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::OrderTooHigh { .. } => {
            Failure::Usage(e.to_string())
        }
        other => Failure::Verification(other),
    }
}

fn parse_point(text: &str, n: usize) -> Result<Vec<f64>, Failure> {
    let vals = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad coordinate {s:?} in --at"))))
        .collect::<Result<Vec<f64>, _>>()?;
    match vals.len() {
        1 => Ok(vec![vals[0]; n]),
        l if l == n => Ok(vals),
        l => Err(Failure::Usage(format!("--at has {l} coordinates, expected {n}"))),
    }
}

pub fn resolve(cmd: &Command) -> Result<(RunConfig, PolynomialMap<f64>), Failure> {
    let (name, c, theorem, samples, eps, fbar, search_grid) = match cmd {
        Command::Bounds { theorem, common } => (format!("bounds {}", theorem_name(*theorem)), common, Some(*theorem), None, None, None, None),
        Command::Verify { theorem, common, samples } => {
            (format!("verify {}", theorem_name(*theorem)), common, Some(*theorem), *samples, None, None, None)
        }
        Command::Morse { action, common, eps, fbar, search_grid } => {
            let e = matches!(action, MorseAction::Perturb).then_some(*eps);
            (format!("morse {}", morse_name(*action)), common, None, None, e, fbar.clone(), *search_grid)
        }
        Command::Catalog => unreachable!("catalog has no function"),
    };
    let entry: Option<&CatalogEntry> = match &c.catalog {
        Some(nm) => Some(catalog::lookup(nm).ok_or_else(|| Failure::Usage(format!("unknown catalog entry {nm:?}")))?),
        None => None,
    };
    let expr = match (&c.function, entry) {
        (Some(e), _) => e.clone(),
        (None, Some(en)) => en.expr.to_string(),
        (None, None) => return Err(Failure::Usage("one of --fn or --catalog is required".into())),
    };
    let n = c.dim.or(entry.map(|e| e.n)).unwrap_or_else(|| max_variable_index(&expr).max(1));
    let f = parse_polynomial_map::<f64>(&expr, n).map_err(|e| Failure::Usage(format!("{e}")))?;
    let at = match (&c.at, entry) {
        (Some(t), _) => parse_point(t, n)?,
        (None, Some(en)) if !en.at.is_empty() => en.at.to_vec(),
        _ => vec![0.0; n],
    };
    let default_k = match (theorem, cmd) {
        (Some(Theorem::Split), _) => 3,
        (Some(_), _) => 2,
        (None, Command::Morse { action: MorseAction::Perturb, .. }) => 3,
        _ => 2,
    };
    let k = c.k.or(entry.map(|e| e.k)).unwrap_or(default_k);
    let param = entry.map(|e| e.param).filter(|&p| p > 0);
    let m = c.m.or(if theorem == Some(Theorem::Implicit) { param } else { None });
    let p = c.p.or(if theorem == Some(Theorem::Rank) { param } else { None });
    let radius = c.radius.unwrap_or(if c.k_norm.is_some() { 1e6 } else { 1.0 });
    if c.grid < 2 {
        return Err(Failure::Usage("--grid must be at least 2".into()));
    }
    Ok((
        RunConfig {
            command: name,
            expr,
            catalog: c.catalog.clone(),
            n,
            at,
            k,
            grid: c.grid,
            tol: c.tol,
            seed: c.seed,
            c_entropy: c.c_entropy,
            k_norm: c.k_norm,
            radius,
            m,
            p,
            eps,
            fbar,
            samples,
            search_grid,
        },
        f,
    ))
}

pub fn theorem_name(t: Theorem) -> &'static str {
    match t {
        Theorem::Inverse => "inverse",
        Theorem::Implicit => "implicit",
        Theorem::Rank => "rank",
        Theorem::Split => "split",
    }
}

fn morse_name(a: MorseAction) -> &'static str {
    match a {
        MorseAction::Analyze => "analyze",
        MorseAction::Certify => "certify",
        MorseAction::Perturb => "perturb",
        MorseAction::CheckOpenness => "check-openness",
    }
}

/// Declared bound from `--K`, otherwise sampled on the grid.
fn kbound(f: &PolynomialMap<f64>, cfg: &RunConfig, center: &[f64]) -> Result<CkNormBound<f64>, Failure> {
    let ball = Ball::new(center.to_vec(), cfg.radius).map_err(usage)?;
    match cfg.k_norm {
        Some(v) => CkNormBound::certified(v, cfg.k, ball).map_err(usage),
        None => estimate_ck_norm(f, &ball, cfg.k, cfg.grid).map_err(usage),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn split_point(cfg: &RunConfig) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let m = cfg.m.ok_or_else(|| Failure::Usage("implicit needs --m (number of parameter variables)".into()))?;
    if m == 0 || m >= cfg.n {
        return Err(Failure::Usage(format!("--m must lie in 1..{}", cfg.n)));
    }
    Ok((cfg.at[..m].to_vec(), cfg.at[m..].to_vec()))
}

pub fn run_theorem(theorem: Theorem, verify: bool, cfg: &RunConfig, f: &PolynomialMap<f64>) -> Run {
    let kb = kbound(f, cfg, &cfg.at)?;
    let samples = cfg.samples;
    match theorem {
        Theorem::Inverse => {
            let cert = smooth_inverse_certificate(f, &cfg.at, &kb, cfg.k).map_err(usage)?;
            let mut result = json!({ "certificate": to_value(&cert), "K_bound": to_value(&kb) });
            let narrow = inverse_bound_narrow(cert.k_norm, 1.0 / cert.delta, cfg.k as u32);
            if Some(narrow) != cert.ck_inverse {
                result["ck_inverse_proof_range"] = json!(narrow);
            }
            let verification = if verify {
                let mut o = InverseVerifyOptions { seed: cfg.seed, ..Default::default() };
                if let Some(s) = samples {
                    o.pairs = s;
                    o.targets = s;
                    o.jacobian_samples = s;
                }
                Some(verify_inverse(f, &cert, &o).map_err(during_verification)?)
            } else {
                None
            };
            Ok(Outcome { result, verification })
        }
        Theorem::Implicit => {
            let (x0, y0) = split_point(cfg)?;
            let cert = smooth_implicit_certificate(f, &x0, &y0, &kb, cfg.k).map_err(usage)?;
            let result = json!({ "certificate": to_value(&cert), "K_bound": to_value(&kb) });
            let verification = if verify {
                let mut o = ImplicitVerifyOptions { seed: cfg.seed, ..Default::default() };
                if let Some(s) = samples {
                    o.points = s;
                }
                Some(verify_implicit(f, &cert, &o).map_err(during_verification)?)
            } else {
                None
            };
            Ok(Outcome { result, verification })
        }
        Theorem::Rank => {
            let p = cfg.p.ok_or_else(|| Failure::Usage("rank needs --p".into()))?;
            let cert = rank_certificate(f, &cfg.at, p, &kb, cfg.k).map_err(usage)?;
            let result = json!({ "certificate": to_value(&cert), "K_bound": to_value(&kb) });
            let verification = if verify {
                let charts = StraighteningCharts::new(f, cert).map_err(during_verification)?;
                let mut o = RankVerifyOptions { seed: cfg.seed, ..Default::default() };
                if let Some(s) = samples {
                    o.samples = s;
                    o.pairs = s;
                }
                Some(verify_rank(&charts, &o).map_err(during_verification)?)
            } else {
                None
            };
            Ok(Outcome { result, verification })
        }
        Theorem::Split => {
            let mut opts = SplitOptions::default();
            if let Some(t) = cfg.tol {
                opts.rank_rel_tol = t;
            }
            let chart = build_split_chart(f, &cfg.at, &kb, cfg.k, &opts).map_err(usage)?;
            let result = json!({ "chart": to_value(chart.summary()), "K_bound": to_value(&kb) });
            let verification = if verify {
                let mut o = SplitVerifyOptions { seed: cfg.seed, ..Default::default() };
                if let Some(s) = samples {
                    o.samples = s;
                }
                Some(verify_split(&chart, &o).map_err(during_verification)?)
            } else {
                None
            };
            Ok(Outcome { result, verification })
        }
    }
}

fn search_grid(cfg: &RunConfig) -> usize {
    cfg.search_grid.unwrap_or(match cfg.n {
        1 => 401,
        2 => 101,
        3 => 31,
        _ => 13,
    })
}

pub fn run_morse(action: MorseAction, cfg: &RunConfig, f: &PolynomialMap<f64>) -> Run {
    let origin = vec![0.0; cfg.n];
    let tol = cfg.tol.unwrap_or(1e-6);
    match action {
        MorseAction::Analyze => {
            let cps = find_critical_points(f, search_grid(cfg), tol).map_err(usage)?;
            Ok(Outcome { result: json!({ "critical_points": to_value(&cps) }), verification: None })
        }
        MorseAction::Certify | MorseAction::CheckOpenness => {
            let kb = kbound(f, cfg, &origin)?;
            let cps = find_critical_points(f, search_grid(cfg), tol).map_err(usage)?;
            let cert = openness_certificate(f, &kb, &cps, &EtaOptions::default()).map_err(usage)?;
            let mut result = json!({ "certificate": to_value(&cert), "K_bound": to_value(&kb) });
            if action == MorseAction::Certify {
                return Ok(Outcome { result, verification: None });
            }
            let text = cfg.fbar.as_deref().ok_or_else(|| Failure::Usage("check-openness needs --fbar".into()))?;
            let fbar = parse_polynomial_map::<f64>(text, cfg.n).map_err(|e| Failure::Usage(format!("--fbar: {e}")))?;
            let opts = OpennessVerifyOptions { critical_grid: Some(search_grid(cfg)), ..Default::default() };
            match verify_openness(f, &fbar, &cert, &opts) {
                Ok(rep) => Ok(Outcome { result, verification: Some(rep) }),
                Err(e @ Error::PerturbationTooLarge { .. }) => {
                    result["perturbation"] = json!("rejected");
                    Err(Failure::Refused(e))
                }
                Err(e) => Err(during_verification(e)),
            }
        }
        MorseAction::Perturb => {
            let eps = cfg.eps.unwrap_or(0.5);
            let kb = kbound(f, cfg, &origin)?;
            let opts = PerturbOptions { critical_grid: cfg.search_grid, ..Default::default() };
            let (pert, report) = perturb_to_morse(f, &kb, eps, cfg.c_entropy, cfg.seed, &opts).map_err(usage)?;
            Ok(Outcome {
                result: json!({ "perturbation": to_value(&pert), "K_bound": to_value(&kb) }),
                verification: Some(report),
            })
        }
    }
}

pub fn catalog_listing() -> Value {
    to_value(&catalog::CATALOG)
}
