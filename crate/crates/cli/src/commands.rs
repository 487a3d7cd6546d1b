use std::path::Path;

use cop_core::analysis::{
    centeredness_all, centeredness_lp, certify_tpr_lower, golden_hard_instance, hard_instance_from_center,
    iid_hard_instance, most_centered_index, BoundMode,
};
use cop_core::engine::monte_carlo_eval;
use cop_core::io::{
    certificate_from_json, certificate_to_json, certificate_to_value, family_from_json, family_to_json,
    instance_from_json, instance_to_json,
};
use cop_core::permutations::{
    affine_family, sample_family, verify_almost_pi, verify_pairwise_independent, AlmostPiReport, PairwiseReport,
};
use cop_core::thresholds::{threshold_for, ThresholdTarget};
use cop_core::{
    e_threshold, golden_threshold, ratio_sweep, AugThreshold, EvaluationReport, FamilyEvaluator, GridSpec, Instance,
    PermutationFamily, Provenance,
};
use serde_json::{json, Map, Value};

use crate::oracle;
use crate::output::{num, pretty, sig, CliResult, Context, Failure};
use crate::{Command, FamilyKind, HardKind, Mode};

/// Standard errors allowed between Monte Carlo and exact values.
const ORACLE_SIGMAS: f64 = 4.0;
const ENUMERATION_TOLERANCE: f64 = 1e-9;

pub fn run(command: Command, ctx: &mut Context) -> CliResult<()> {
    match command {
        Command::Eval { inputs, threshold, out } => {
            let (inst, fam) = load_pair(ctx, &inputs.instance, &inputs.family)?;
            let t = resolve_threshold(&inst, &threshold)?;
            let eval = FamilyEvaluator::new(&inst, &fam)?;
            ctx.emit(out.as_deref(), &pretty(&flat_report(&eval.report(t))))
        }
        Command::Sweep { inputs, grid, ties, no_refine, out } => {
            let (inst, fam) = load_pair(ctx, &inputs.instance, &inputs.family)?;
            let spec = GridSpec { points: grid, refine_segments: !no_refine, tie_fractions: ties };
            let sweep = ratio_sweep(&inst, &fam, &spec)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Failure::Semantic(e.to_string());
            w.write_record(["theta", "tie", "gambler", "prophet", "ratio"]).map_err(csv_err)?;
            for p in &sweep.points {
                let ratio = p.ratio.map_or(String::new(), |r| sig(r).to_string());
                w.write_record([
                    sig(p.theta).to_string(),
                    sig(p.tie).to_string(),
                    sig(p.gambler).to_string(),
                    sig(p.prophet).to_string(),
                    ratio,
                ])
                .map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Semantic(e.to_string()))?;
            ctx.emit(out.as_deref(), &String::from_utf8(bytes).expect("csv is UTF-8"))?;
            let best = sweep.best();
            eprintln!(
                "best: theta={} tie={} ratio={}",
                sig(best.theta),
                sig(best.tie),
                best.ratio.map_or("undefined".into(), |r| sig(r).to_string())
            );
            Ok(())
        }
        Command::Construct { kind, n, epsilon, delta, seed, max_attempts, parent, dedup, out } => {
            let (fam, verification) = match kind {
                FamilyKind::Affine => {
                    let fam = affine_family(n)?;
                    let v = pairwise_summary(&verify_pairwise_independent(&fam));
                    (fam, v)
                }
                FamilyKind::ForwardReverse => {
                    let fam = PermutationFamily::forward_reverse(n)?;
                    (fam, json!({"kind": "none"}))
                }
                FamilyKind::Sampled => {
                    let eps = epsilon.ok_or_else(|| Failure::Semantic("sampled needs --epsilon".into()))?;
                    let del = delta.ok_or_else(|| Failure::Semantic("sampled needs --delta".into()))?;
                    ctx.set_seed(seed);
                    construct_sampled(n, eps, del, seed, max_attempts)?
                }
                FamilyKind::Padded => {
                    let path = parent.ok_or_else(|| Failure::Semantic("padded needs --parent".into()))?;
                    let parent = ctx.load(&path, family_from_json)?;
                    if n > parent.n() {
                        return Err(Failure::Semantic(format!("cannot restrict n = {} to {n}", parent.n())));
                    }
                    let mut fam = parent.restrict(n)?;
                    if dedup {
                        fam = fam.dedup();
                    }
                    let v = pairwise_summary(&verify_pairwise_independent(&fam));
                    (fam, v)
                }
            };
            let summary = json!({"n": fam.n(), "m": fam.len(), "verification": verification});
            ctx.emit(out.as_deref(), &family_to_json(&fam))?;
            if out.is_some() {
                println!("{}", pretty(&summary));
            } else {
                eprintln!("{}", pretty(&summary));
            }
            Ok(())
        }
        Command::Verify { family, epsilon, delta, out } => {
            let fam = ctx.load(&family, family_from_json)?;
            let (summary, passed) = match (epsilon, delta) {
                (Some(e), Some(d)) => {
                    let r = verify_almost_pi(&fam, e, d)?;
                    (almost_pi_summary(&r, e, d), r.passed)
                }
                _ => {
                    let r = verify_pairwise_independent(&fam);
                    (pairwise_summary(&r), r.independent)
                }
            };
            ctx.emit(out.as_deref(), &pretty(&summary))?;
            if passed {
                Ok(())
            } else {
                Err(Failure::Check("family does not meet the requested independence".into()))
            }
        }
        Command::Center { family, index, out } => {
            let fam = ctx.load(&family, family_from_json)?;
            match index {
                Some(j) => {
                    let cert = centeredness_lp(&fam, j)?;
                    ctx.emit(out.as_deref(), &certificate_to_json(&cert))
                }
                None => {
                    let certs = centeredness_all(&fam)?;
                    let best = certs.iter().reduce(|a, b| if b.epsilon < a.epsilon { b } else { a }).expect("n ≥ 2");
                    let doc = json!({
                        "best": best.j,
                        "epsilon": best.epsilon,
                        "certificates": certs.iter().map(certificate_to_value).collect::<Vec<_>>(),
                    });
                    ctx.emit(out.as_deref(), &pretty(&doc))
                }
            }
        }
        Command::HardInstance { kind, delta, n, h, family, certificate, out } => {
            let inst = match kind {
                HardKind::Golden => golden_hard_instance(require(delta, "--delta")?)?,
                HardKind::Iid => iid_hard_instance(require(n, "--n")?, require(h, "--H")?)?,
                HardKind::Center => {
                    let fam = ctx.load(&require(family, "--family")?, family_from_json)?;
                    let cert = match certificate {
                        Some(path) => ctx.load(&path, |t| certificate_from_json(t, fam.n()))?,
                        None => most_centered_index(&fam)?.1,
                    };
                    hard_instance_from_center(&fam, cert.j, &cert, require(delta, "--delta")?)?
                }
            };
            ctx.emit(out.as_deref(), &instance_to_json(&inst))
        }
        Command::Certify { inputs, mode, out } => {
            let (inst, fam) = load_pair(ctx, &inputs.instance, &inputs.family)?;
            let mode = match mode {
                Mode::Golden => BoundMode::Golden,
                Mode::E => BoundMode::E,
            };
            let c = certify_tpr_lower(&inst, &fam, mode)?;
            let mut doc = flat_report(&c.report);
            let obj = doc.as_object_mut().expect("report is an object");
            obj.insert("mode".into(), Value::from(mode.name()));
            obj.insert("bound".into(), num(c.bound));
            obj.insert("passed".into(), Value::from(c.passed));
            ctx.emit(out.as_deref(), &pretty(&doc))?;
            if c.passed {
                Ok(())
            } else {
                Err(Failure::Check(format!("ratio below {}", sig(c.bound))))
            }
        }
        Command::Oracle { inputs, threshold, samples, seed, out } => {
            let (inst, fam) = load_pair(ctx, &inputs.instance, &inputs.family)?;
            ctx.set_seed(seed);
            let t = resolve_threshold(&inst, &threshold)?;
            let exact = FamilyEvaluator::new(&inst, &fam)?.report(t);
            let mc = monte_carlo_eval(&inst, &fam, t, samples, seed)?;
            let z = |est: f64, se: f64, truth: f64| if se > 0.0 { (est - truth).abs() / se } else { 0.0 };
            let zg = z(mc.gambler, mc.gambler_se, exact.gambler);
            let zp = z(mc.prophet, mc.prophet_se, exact.prophet);
            let mut ok = zg <= ORACLE_SIGMAS && zp <= ORACLE_SIGMAS;
            let mut doc = json!({
                "theta": num(t.theta),
                "tie": num(t.tie),
                "exact": {"gambler": num(exact.gambler), "prophet": num(exact.prophet)},
                "monte_carlo": {
                    "samples": samples,
                    "seed": seed,
                    "gambler": num(mc.gambler),
                    "gambler_se": num(mc.gambler_se),
                    "prophet": num(mc.prophet),
                    "prophet_se": num(mc.prophet_se),
                    "gambler_z": num(zg),
                    "prophet_z": num(zp),
                },
            });
            if let Some((g, p)) = oracle::enumerate(&inst, &fam, t) {
                let err = (g - exact.gambler).abs().max((p - exact.prophet).abs());
                ok &= err <= ENUMERATION_TOLERANCE;
                doc["enumeration"] = json!({"gambler": num(g), "prophet": num(p), "max_abs_error": num(err)});
            }
            doc["passed"] = Value::from(ok);
            ctx.emit(out.as_deref(), &pretty(&doc))?;
            if ok {
                Ok(())
            } else {
                Err(Failure::Check("exact values disagree with the oracle".into()))
            }
        }
    }
}

fn require<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| Failure::Semantic(format!("missing {flag}")))
}

fn load_pair(ctx: &mut Context, instance: &Path, family: &Path) -> CliResult<(Instance, PermutationFamily)> {
    let inst = ctx.load(instance, instance_from_json)?;
    let fam = ctx.load(family, family_from_json)?;
    if inst.n() != fam.n() {
        return Err(Failure::Semantic(format!("instance has n = {} but family has n = {}", inst.n(), fam.n())));
    }
    Ok((inst, fam))
}

/// `golden`, `e`, `max-survival:P`, `product-survival:Q` or `THETA[,TIE]`.
pub fn resolve_threshold(inst: &Instance, spec: &str) -> CliResult<AugThreshold> {
    let bad = || Failure::Parse(format!("threshold spec {spec:?}: expected golden, e, max-survival:P, product-survival:Q or THETA[,TIE]"));
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let spec = spec.trim();
    Ok(match spec {
        "golden" => golden_threshold(inst)?,
        "e" => e_threshold(inst)?,
        _ => {
            if let Some(p) = spec.strip_prefix("max-survival:") {
                threshold_for(inst, ThresholdTarget::MaxSurvival(number(p)?))?
            } else if let Some(q) = spec.strip_prefix("product-survival:") {
                threshold_for(inst, ThresholdTarget::ProductSurvival(number(q)?))?
            } else {
                match spec.split_once(',') {
                    Some((theta, tie)) => AugThreshold::new(number(theta)?, number(tie)?)?,
                    None => AugThreshold::new(number(spec)?, 0.0)?,
                }
            }
        }
    })
}

/// The report without per-index diagnostics, at report precision.
fn flat_report(r: &EvaluationReport) -> Value {
    let mut m = Map::new();
    m.insert("theta".into(), num(r.theta));
    m.insert("tie".into(), num(r.tie));
    m.insert("gambler".into(), num(r.gambler));
    m.insert("prophet".into(), num(r.prophet));
    m.insert("ratio".into(), r.ratio.map_or(Value::Null, num));
    m.insert("p".into(), num(r.p));
    m.insert("q".into(), num(r.q));
    Value::Object(m)
}

fn pairwise_summary(r: &PairwiseReport) -> Value {
    json!({
        "kind": "pairwise_independent",
        "passed": r.independent,
        "worst_pair": r.worst_pair,
        "worst_min": r.worst_min,
        "worst_max": r.worst_max,
    })
}

fn almost_pi_summary(r: &AlmostPiReport, epsilon: f64, delta: f64) -> Value {
    json!({
        "kind": "almost_pairwise_independent",
        "epsilon": num(epsilon),
        "delta": num(delta),
        "passed": r.passed,
        "max_tv": num(r.max_tv),
        "worst_pair": r.worst_pair,
        "min_cell_mass": num(r.min_cell_mass),
    })
}

/// Tries `seed, seed+1, …` until the sampled family passes the bucketed
/// check. The recorded seed is the one that produced the members.
fn construct_sampled(n: usize, epsilon: f64, delta: f64, seed: u64, max_attempts: u32) -> CliResult<(PermutationFamily, Value)> {
    let mut last = None;
    for attempt in 0..max_attempts.max(1) {
        let s = seed.wrapping_add(u64::from(attempt));
        let fam = sample_family(n, epsilon, delta, s)?;
        let report = verify_almost_pi(&fam, epsilon, delta)?;
        if report.passed {
            let provenance = Provenance::Sampled { seed: s, epsilon, delta, m: fam.len(), attempts: attempt + 1 };
            let fam = PermutationFamily::new(fam.perms().to_vec(), provenance)?;
            let mut summary = almost_pi_summary(&report, epsilon, delta);
            summary["attempts"] = Value::from(attempt + 1);
            summary["seed"] = Value::from(s);
            return Ok((fam, summary));
        }
        last = Some(report);
    }
    let tv = last.map_or(f64::NAN, |r| r.max_tv);
    Err(Failure::Check(format!("no seed in {seed}..{} passed (last max_tv {})", seed + u64::from(max_attempts), sig(tv))))
}
