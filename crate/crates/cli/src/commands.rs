//! One function per subcommand, each producing a report and an exit code.

use std::fs;
use std::path::Path;
use std::time::Instant;

use fhm_core::blocking::BlockCertificate;
use fhm_core::dominance::{eene_violation, envies, ete_violation, ir_violator, is_sd_efficient, Efficiency};
use fhm_core::economy::{format_row, parse_allocation, parse_economy, serialize_allocation};
use fhm_core::equilibrium::{find_weak_core_ete, parse_utilities, EpsilonSchedule, FindCoreOptions, SolverOptions};
use fhm_core::fixtures;
use fhm_core::membership::{core_membership, CoreNotion, Verdict};
use fhm_core::scalar::format_rational;
use fhm_core::scenario::{certify_statement1, certify_statement3};
use fhm_core::{Allocation, Economy};

use crate::report::{digest, RunReport};
use crate::{Command, Exit, FindCoreArgs, Notion, Property, Statement};

pub struct Outcome {
    pub report: RunReport,
    pub exit: Exit,
}

/// Early exit carrying the code and the entry explaining it.
struct Stop(Exit, String);

type Step<T> = Result<T, Stop>;

fn read(report: &mut RunReport, role: &str, path: &Path) -> Step<String> {
    let text = fs::read_to_string(path).map_err(|err| Stop(Exit::Io, format!("cannot read {}: {err}", path.display())))?;
    report.input(role, text.as_bytes());
    Ok(text)
}

fn load_economy(report: &mut RunReport, path: &Path) -> Step<Economy> {
    let text = read(report, "economy", path)?;
    parse_economy(&text).map_err(|err| Stop(Exit::Invalid, err.to_string()))
}

fn load_allocation(report: &mut RunReport, path: &Path, e: &Economy) -> Step<Allocation> {
    let text = read(report, "allocation", path)?;
    let p = parse_allocation(&text).map_err(|err| Stop(Exit::Invalid, err.to_string()))?;
    if p.n() != e.n() {
        return Err(Stop(Exit::Invalid, format!("dimension mismatch: allocation has {} rows, economy has {} agents", p.n(), e.n())));
    }
    Ok(p)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn execute(command: &Command, timings: bool) -> Outcome {
    let start = Instant::now();
    let mut report = RunReport::new(match command {
        Command::Validate { .. } => "validate",
        Command::Check { .. } => "check",
        Command::Core { .. } => "core",
        Command::Reproduce { .. } => "reproduce",
        Command::FindCore(_) => "find-core",
    });
    let r = &mut report;
    let result = match command {
        Command::Validate { economy } => validate(r, economy),
        Command::Check { economy, allocation, properties } => check(r, economy, allocation, properties),
        Command::Core { economy, allocation, notion, max_size } => core(r, economy, allocation, *notion, *max_size),
        Command::Reproduce { statement, economy } => reproduce(r, *statement, economy.as_deref()),
        Command::FindCore(args) => find_core(r, args),
    };
    let exit = match result {
        Ok(exit) => exit,
        Err(Stop(exit, message)) => {
            report.push("error", message);
            exit
        }
    };
    if timings {
        report.timings.push(("total".into(), start.elapsed()));
    }
    Outcome { report, exit }
}

fn validate(r: &mut RunReport, path: &Path) -> Step<Exit> {
    let text = read(r, "economy", path)?;
    match parse_economy(&text) {
        Ok(e) => {
            r.push("valid", "yes");
            r.push("agents", e.n().to_string());
            r.push("classes", e.equal_class_partition().to_string());
            Ok(Exit::Success)
        }
        Err(err) => {
            r.push("valid", "no");
            r.push("violation", err.to_string());
            Ok(Exit::Invalid)
        }
    }
}

fn pair(p: Option<(usize, usize)>) -> String {
    match p {
        None => "yes".into(),
        Some((i, j)) => format!("no (agents {} and {})", i + 1, j + 1),
    }
}

fn check(r: &mut RunReport, economy: &Path, allocation: &Path, properties: &[Property]) -> Step<Exit> {
    let e = load_economy(r, economy)?;
    let p = load_allocation(r, allocation, &e)?;
    let internal = |err: fhm_core::DominanceError| Stop(Exit::Invalid, err.to_string());
    for prop in properties {
        match prop {
            Property::Ir => {
                let v = ir_violator(&e, &p).map_err(internal)?;
                r.push("ir", v.map_or("yes".into(), |i| format!("no (agent {})", i + 1)));
            }
            Property::Ete => r.push("ete", pair(ete_violation(&e, &p).map_err(internal)?)),
            Property::Eene => r.push("eene", pair(eene_violation(&e, &p).map_err(internal)?)),
            Property::Sdeff => match is_sd_efficient(&e, &p).map_err(internal)? {
                Efficiency::Efficient => r.push("sdeff", "yes"),
                Efficiency::Dominated(q) => {
                    r.push("sdeff", "no");
                    r.push("sdeff.dominating", serialize_allocation(&q));
                }
            },
            Property::Envy => {
                let mut pairs = Vec::new();
                for i in 0..e.n() {
                    for j in 0..e.n() {
                        if i != j && envies(&e, &p, i, j).map_err(internal)? {
                            pairs.push(format!("{}>{}", i + 1, j + 1));
                        }
                    }
                }
                r.push("envy", if pairs.is_empty() { "none".into() } else { pairs.join(" ") });
            }
        }
    }
    Ok(Exit::Success)
}

fn certificate_text(cert: &BlockCertificate) -> String {
    let mut lines = vec![format!("{} block by {}", cert.mode, cert.coalition)];
    for (k, &i) in cert.coalition.members().iter().enumerate() {
        lines.push(format!("agent {} receives {}", i + 1, format_row(&cert.rows[k])));
        lines.push(format!("agent {} prefix gains {}", i + 1, format_row(&cert.slacks[k])));
    }
    lines.join("\n")
}

fn core(r: &mut RunReport, economy: &Path, allocation: &Path, notion: Notion, max_size: Option<usize>) -> Step<Exit> {
    let e = load_economy(r, economy)?;
    let p = load_allocation(r, allocation, &e)?;
    let notion = match notion {
        Notion::Strong => CoreNotion::Strong,
        Notion::Weak => CoreNotion::Weak,
    };
    let max_size = max_size.unwrap_or(e.n());
    let report = core_membership(&e, &p, notion, max_size).map_err(|err| Stop(Exit::Invalid, err.to_string()))?;
    r.push("notion", notion.to_string());
    r.push("max-size", max_size.to_string());
    match &report.verdict {
        Verdict::Member { coalitions_checked } => {
            r.push("verdict", "member");
            r.push("coalitions-checked", coalitions_checked.to_string());
            Ok(Exit::Success)
        }
        Verdict::NotIndividuallyRational { agent } => {
            r.push("verdict", "non-member");
            r.push("ir-violator", (agent + 1).to_string());
            Ok(Exit::NonMember)
        }
        Verdict::Blocked(cert) => {
            r.push("verdict", "non-member");
            r.push("coalition", cert.coalition.to_string());
            r.push("certificate", certificate_text(cert));
            Ok(Exit::NonMember)
        }
    }
}

fn reproduce(r: &mut RunReport, statement: Statement, economy: Option<&Path>) -> Step<Exit> {
    let e = match economy {
        Some(path) => load_economy(r, path)?,
        None => {
            let (text, e) = match statement {
                Statement::Statement1 => (fixtures::E1, fixtures::e1()),
                Statement::Statement3 => (fixtures::E1_PRIME, fixtures::e1_prime()),
            };
            r.input("economy", text.as_bytes());
            e
        }
    };
    let (script, claim, run): (&str, &str, fn(&Economy, &str) -> _) = match statement {
        Statement::Statement1 => (fixtures::STATEMENT1_SCRIPT, "STRONG CORE EMPTY", certify_statement1),
        Statement::Statement3 => (fixtures::STATEMENT3_SCRIPT, "WEAK CORE \u{2229} EENE = \u{2205}", certify_statement3),
    };
    r.input("script", script.as_bytes());
    let scenario = run(&e, script).map_err(|err| Stop(Exit::Invalid, err.to_string()))?;
    let exit = match scenario.failed_step() {
        None => {
            r.push("verdict", format!("{claim}: certified"));
            Exit::Success
        }
        Some(step) => {
            r.push("verdict", format!("{claim}: not certified"));
            let reason = step.note.as_deref().unwrap_or("step failed");
            r.push("failed-step", format!("line {} {}: {reason}", step.line, step.name));
            Exit::Failure
        }
    };
    r.push("steps", scenario.to_string());
    Ok(exit)
}

fn find_core(r: &mut RunReport, args: &FindCoreArgs) -> Step<Exit> {
    let invalid = |err: &dyn std::fmt::Display| Stop(Exit::Invalid, err.to_string());
    let e = load_economy(r, &args.economy)?;
    r.seed = Some(args.seed);
    let utilities = match &args.utilities {
        Some(path) => Some(parse_utilities(&read(r, "utilities", path)?, &e).map_err(|err| invalid(&err))?),
        None => None,
    };
    if args.schedule == 0 {
        return Err(Stop(Exit::Invalid, "schedule length must be positive".into()));
    }
    if args.maxden == 0 || !args.tol.is_finite() || args.tol < 0.0 {
        return Err(Stop(Exit::Invalid, "maxden must be positive and tol a nonnegative number".into()));
    }
    let defaults = FindCoreOptions::default();
    let opts = FindCoreOptions {
        schedule: EpsilonSchedule::halving(args.schedule),
        maxden: args.maxden,
        maxden_limit: defaults.maxden_limit.max(args.maxden),
        tol: args.tol,
        solver: SolverOptions {
            seed: args.seed,
            tol: args.tol,
            ..SolverOptions::default()
        },
        utilities,
        ..defaults
    };
    let found = match find_weak_core_ete(&e, &opts) {
        Ok(found) => found,
        Err(err) => return Err(Stop(Exit::Failure, err.to_string())),
    };
    let text = serialize_allocation(&found.allocation);
    r.push("allocation", text.clone());
    r.push("source", format!("{} maxden {}", found.source, found.maxden));
    let stages: Vec<String> = found
        .stages
        .iter()
        .map(|s| format!("epsilon {:e} residual {:e} eta {:e} {}", s.epsilon, s.residual, s.eta, if s.converged { "converged" } else { "loose" }))
        .collect();
    r.push("stages", stages.join("\n"));
    r.push("limit-converged", yes_no(found.limit_converged));
    r.push("ir", yes_no(found.ir));
    r.push("ete", yes_no(found.ete));
    let coalitions = match found.membership.verdict {
        Verdict::Member { coalitions_checked } => coalitions_checked,
        _ => unreachable!("only verified members are returned"),
    };
    r.push("weak-core", format!("member ({coalitions} coalitions checked)"));
    r.push("eene", yes_no(found.eene));
    match &found.equilibrium {
        Some(ps) => {
            r.push("equilibrium.prices", format_row(&ps.prices));
            r.push("equilibrium.alpha", format_rational(&ps.alpha));
        }
        None => r.push("equilibrium", "none found at zero relaxation"),
    }
    if let Some(path) = &args.output {
        fs::write(path, &text).map_err(|err| Stop(Exit::Io, format!("cannot write {}: {err}", path.display())))?;
        r.push("output.sha256", digest(text.as_bytes()));
    }
    let verified = found.ir && found.ete && found.membership.is_member();
    Ok(if verified { Exit::Success } else { Exit::Failure })
}
