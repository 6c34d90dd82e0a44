//! One function per subcommand. Each returns an exit code, a JSON body and
//! a short text rendering; nothing here prints.

use htensor::{
    bisection_fallback, decompose as split, default_bracket, is_h_plus, is_m_tensor, lower_bound_ddth,
    lower_bound_gddth, min_h_eigenvalue_conic, min_h_eigenvalue_oracle, sampled_upper_bound, tensor_from_poly,
    verify_certificate, verify_certificate_exact, EigResult, GddCertificate, HomogeneousPolynomial,
    MembershipVerdict, PowerConfig, SamplingConfig, SymmetricTensor, VerdictKind, VerifyReport,
};
use log::info;
use serde_json::{json, Map, Value};
use std::path::Path;

use crate::{Cone, Kind, Method, Mode, RunConfig};

pub const MEMBER: i32 = 0;
pub const NOT_MEMBER: i32 = 1;
pub const UNDECIDED: i32 = 2;

pub struct Outcome {
    pub code: i32,
    pub body: Map<String, Value>,
    pub text: String,
}

impl Outcome {
    fn new(code: i32, body: Value, text: String) -> Self {
        let Value::Object(body) = body else { panic!("report bodies are objects") };
        Self { code, body, text }
    }

    fn error(msg: impl std::fmt::Display) -> Self {
        Self::new(UNDECIDED, json!({ "error": msg.to_string() }), format!("error: {msg}"))
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return Outcome::error(e),
        }
    };
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn load_tensor(path: &Path) -> Result<SymmetricTensor, String> {
    SymmetricTensor::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_certificate(path: &Path) -> Result<GddCertificate, String> {
    GddCertificate::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn verdict_name(kind: VerdictKind) -> &'static str {
    match kind {
        VerdictKind::Member => "member",
        VerdictKind::NotMember => "not_member",
        VerdictKind::Marginal => "marginal",
    }
}

fn verdict_code(kind: VerdictKind) -> i32 {
    match kind {
        VerdictKind::Member => MEMBER,
        VerdictKind::NotMember => NOT_MEMBER,
        VerdictKind::Marginal => UNDECIDED,
    }
}

pub fn check(cfg: &RunConfig, kind: Kind, path: &Path, keep_cert: bool, cert_out: Option<&Path>) -> Outcome {
    let a = tri!(load_tensor(path));
    let kind_name = format!("{kind:?}").to_lowercase();
    let verdict: MembershipVerdict = match kind {
        Kind::Dd | Kind::Ddplus => {
            let ok = if kind == Kind::Dd { a.is_dd() } else { a.is_dd_plus() };
            let margins = a.dominance_margins();
            let v = if ok { VerdictKind::Member } else { VerdictKind::NotMember };
            return Outcome::new(
                verdict_code(v),
                json!({ "kind": kind_name, "verdict": verdict_name(v), "row_margins": margins }),
                format!("{kind_name}: {} (row margins {margins:?})", verdict_name(v)),
            );
        }
        Kind::Hplus => tri!(is_h_plus(&a, &cfg.solver)),
        Kind::M => tri!(is_m_tensor(&a, &cfg.solver)),
    };
    info!("{}: {:?} after {} iterations", path.display(), verdict.kind, verdict.iterations);
    if let (Some(out), Some(cert)) = (cert_out, verdict.certificate.as_ref()) {
        if let Err(e) = std::fs::write(out, cert.to_json()) {
            return Outcome::error(format!("cannot write {}: {e}", out.display()));
        }
    }
    let mut body = json!({
        "kind": kind_name,
        "verdict": verdict_name(verdict.kind),
        "iterations": verdict.iterations,
    });
    if let Some(m) = verdict.margin {
        body["margin"] = json!(m);
    }
    if let Some(n) = &verdict.note {
        body["note"] = json!(n);
    }
    if let (true, Some(cert)) = (keep_cert, &verdict.certificate) {
        body["certificate"] = serde_json::to_value(cert).expect("certificate serializes");
    }
    let mut text = format!("{kind_name}: {}", verdict_name(verdict.kind));
    if let Some(m) = verdict.margin {
        text.push_str(&format!(" (relative margin {m:.6e})"));
    }
    if let Some(n) = &verdict.note {
        text.push_str(&format!("\n{n}"));
    }
    Outcome::new(verdict_code(verdict.kind), body, text)
}

fn eig_json(r: &EigResult) -> Value {
    serde_json::to_value(r).expect("eigen result serializes")
}

pub fn mineig(cfg: &RunConfig, method: Method, bisect_tol: f64, path: &Path) -> Outcome {
    let a = tri!(load_tensor(path));
    let m = tri!(is_m_tensor(&a, &cfg.solver));
    if m.kind == VerdictKind::NotMember {
        return Outcome::error(format!("not an M-tensor: {}", m.note.unwrap_or_default()));
    }
    let wanted: &[Method] = match method {
        Method::All => &[Method::Conic, Method::Oracle, Method::Bisect],
        _ => std::slice::from_ref(&method),
    };
    let mut results = Map::new();
    let mut lambdas = Vec::new();
    let mut text = String::new();
    for &w in wanted {
        let (name, r) = match w {
            Method::Conic => ("conic", min_h_eigenvalue_conic(&a, &cfg.solver)),
            Method::Oracle => ("oracle", min_h_eigenvalue_oracle(&a, &PowerConfig::default())),
            _ => {
                let (lo, hi) = default_bracket(&a);
                ("bisect", bisection_fallback(&a, lo, hi, bisect_tol, &cfg.solver))
            }
        };
        let r = tri!(r);
        text.push_str(&format!("{name}: lambda = {:.12}\n", r.lambda));
        lambdas.push(r.lambda);
        results.insert(name.into(), eig_json(&r));
    }
    let mut body = json!({ "methods": results });
    if wanted.len() > 1 {
        let hi = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
        body["discrepancy"] = json!(hi - lo);
        text.push_str(&format!("max discrepancy: {:.3e}\n", hi - lo));
    }
    Outcome::new(MEMBER, body, text)
}

pub fn polybound(cfg: &RunConfig, cone: Cone, samples: usize, path: &Path) -> Outcome {
    let p = tri!(read(path).and_then(|s| HomogeneousPolynomial::from_json(&s).map_err(|e| e.to_string())));
    if p.degree() % 2 != 0 {
        return Outcome::error(format!("degree {} is odd; bounds need an even degree", p.degree()));
    }
    let a = tri!(tensor_from_poly(&p));
    let mut body = json!({ "cone": format!("{cone:?}").to_lowercase(), "degree": p.degree(), "nvars": p.nvars() });
    let mut text = String::new();
    let dd = if cone != Cone::Gddth { Some(tri!(lower_bound_ddth(&a))) } else { None };
    let gdd = if cone != Cone::Ddth { Some(tri!(lower_bound_gddth(&a, &cfg.solver))) } else { None };
    if let Some(v) = dd {
        body["ddth"] = json!(v);
        text.push_str(&format!("ddth: {v:.12}\n"));
    }
    if let Some(v) = gdd {
        body["gddth"] = json!(v);
        text.push_str(&format!("gddth: {v:.12}\n"));
    }
    let mut code = MEMBER;
    if let (Some(dd), Some(gdd)) = (dd, gdd) {
        let sc = SamplingConfig { samples, seed: cfg.seed, ..SamplingConfig::default() };
        let up = tri!(sampled_upper_bound(&a, &sc));
        // the conic value carries solver error, so compare with its tolerance
        let slack = 10.0 * cfg.solver.gap_tol * a.max_abs().max(1.0);
        let ordered = dd <= gdd + slack && gdd <= up + slack;
        body["sampled_upper_bound"] = json!(up);
        body["samples"] = json!(samples);
        body["ordered"] = json!(ordered);
        text.push_str(&format!("sampled upper bound: {up:.12}\nordered: {ordered}\n"));
        if !ordered {
            code = UNDECIDED;
        }
    }
    Outcome::new(code, body, text)
}

fn report_json(r: &VerifyReport) -> Value {
    serde_json::to_value(r).expect("report serializes")
}

fn checked(cfg: &RunConfig, t: &Path, c: &Path) -> Result<(SymmetricTensor, GddCertificate, VerifyReport), String> {
    let a = load_tensor(t)?;
    let cert = load_certificate(c)?;
    let report = match cfg.mode {
        Mode::Float => verify_certificate(&a, &cert, cfg.solver.feas_tol),
        Mode::Rational => verify_certificate_exact(&a, &cert),
    }
    .map_err(|e| e.to_string())?;
    Ok((a, cert, report))
}

pub fn verify(cfg: &RunConfig, t: &Path, c: &Path) -> Outcome {
    let (_, _, report) = tri!(checked(cfg, t, c));
    let mut text = format!(
        "{} (worst product margin {:.3e}, worst row margin {:.3e})",
        if report.ok { "certificate accepted" } else { "certificate rejected" },
        report.worst_product_margin,
        report.worst_row_margin
    );
    for v in &report.violations {
        text.push_str(&format!("\nviolated: {} (margin {:.3e})", v.constraint, v.margin));
    }
    let code = if report.ok { MEMBER } else { NOT_MEMBER };
    Outcome::new(code, json!({ "tensor": t.display().to_string(), "certificate": c.display().to_string(), "report": report_json(&report) }), text)
}

pub fn decompose(cfg: &RunConfig, t: &Path, c: &Path) -> Outcome {
    let (a, cert, report) = tri!(checked(cfg, t, c));
    if !report.ok {
        let first = report.violations.first().map(|v| v.constraint.clone()).unwrap_or_default();
        return Outcome::new(
            NOT_MEMBER,
            json!({ "report": report_json(&report) }),
            format!("certificate rejected: {first}"),
        );
    }
    let parts = tri!(split(&a, &cert, cfg.solver.feas_tol));
    let comps: Vec<Value> = parts.iter().map(|p| serde_json::to_value(p).expect("tensor serializes")).collect();
    let mut text = format!("{} components (last is the diagonal remainder)\n", parts.len());
    for p in &parts {
        text.push_str(&p.to_json());
        text.push('\n');
    }
    Outcome::new(MEMBER, json!({ "components": comps }), text)
}
