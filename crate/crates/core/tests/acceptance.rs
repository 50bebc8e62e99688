//! Acceptance criteria. Runs as a plain binary so that each criterion prints a
//! single PASS/FAIL line; exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use bestapprox::certify::{certify, is_classical_gne};
use bestapprox::cli;
use bestapprox::diagnostics::{check_fpt_lsc_at, check_lsc_at, check_quasiconcave, FptOptions, DEFAULT_RADII};
use bestapprox::examples;
use bestapprox::geometry::{ConvexSet, Halfspace, SemiNorm};
use bestapprox::model::{load_instance, own_var, public_var, CandidateSolution, GameInstance};
use bestapprox::oracle::{brute_force, cluster, max_coord_gap, DEFAULT_BUDGET};
use bestapprox::response::ResponseConfig;
use bestapprox::solver::{solve, SolveConfig, SolveReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SQRT2: f64 = std::f64::consts::SQRT_2;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    max_coord_gap(a, b)
}

fn config_for(inst: &GameInstance) -> SolveConfig {
    let mut cfg = SolveConfig::default();
    if let Some(d) = inst.metadata.get("damping").and_then(|v| v.as_f64()) {
        cfg.damping = d;
    }
    cfg
}

fn objective_value(inst: &GameInstance, i: usize, x: &[Vec<f64>], z: &[f64]) -> f64 {
    let mut env = std::collections::HashMap::new();
    for (j, xj) in x.iter().enumerate() {
        for (k, v) in xj.iter().enumerate() {
            env.insert(public_var(j, k), *v);
        }
    }
    for (k, v) in z.iter().enumerate() {
        env.insert(own_var(k), *v);
    }
    inst.players[i].objective.evaluate(&env).unwrap()
}

fn ac1_worked_example() -> Outcome {
    let inst = load_instance(examples::PAPER_GNEP).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let rep = solve(&inst, &SolveConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let x_star = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
    let y_star = vec![vec![1.0 + SQRT2, 1.0 + SQRT2], vec![2.0, 2.0]];
    ensure(rep.converged, "did not converge")?;
    ensure(gap(&rep.solution.x_tilde, &x_star) <= 1e-6, format!("x = {:?}", rep.solution.x_tilde))?;
    ensure(gap(&rep.solution.y_tilde, &y_star) <= 1e-6, format!("y = {:?}", rep.solution.y_tilde))?;
    ensure(rep.residuals.max <= 1e-6, format!("residual {:e}", rep.residuals.max))?;
    ensure(rep.iterations <= 5, format!("{} iterations", rep.iterations))?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;

    // the auxiliary ỹ against a plain grid search of F_i(x̃_{-i}) at resolution 201
    for (i, yi) in y_star.iter().enumerate() {
        let set = inst.realize_constraint(i, &x_star).map_err(|e| e.to_string())?;
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for g in set.sample_grid(201) {
            let v = objective_value(&inst, i, &x_star, &g);
            if v > best.0 {
                best = (v, g);
            }
        }
        ensure(
            gap(&[best.1.clone()], std::slice::from_ref(yi)) <= 1e-6,
            format!("grid argmax for player {} is {:?}", i + 1, best.1),
        )?;
    }
    Ok(format!("{} iterations in {elapsed:.2?}", rep.iterations))
}

fn ac2_no_classical_equilibrium() -> Outcome {
    let inst = load_instance(examples::PAPER_GNEP).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let g1 = inst.players[0].strategy_set.sample_grid(21);
    let g2 = inst.players[1].strategy_set.sample_grid(21);
    let cfg = ResponseConfig::default();
    let mut checked = 0;
    for a in &g1 {
        for b in &g2 {
            let x = vec![a.clone(), b.clone()];
            let c = is_classical_gne(&inst, &x, 1e-6, &cfg).map_err(|e| e.to_string())?;
            if c.is_gne {
                return Err(format!("{x:?} reported as an equilibrium"));
            }
            checked += 1;
        }
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("{checked} grid profiles, none an equilibrium, in {elapsed:.2?}"))
}

fn ac3_certificate_soundness() -> Outcome {
    let mut n = 0;
    for (name, text) in examples::ALL {
        let inst = load_instance(text).map_err(|e| e.to_string())?;
        let cfg = config_for(&inst);
        let rep = solve(&inst, &cfg).map_err(|e| format!("{name}: {e}"))?;
        if !rep.converged {
            continue;
        }
        let fresh = ResponseConfig {
            seed: 0x5eed_f00d,
            ..ResponseConfig::default()
        };
        let tol = 10.0 * cfg.tol_cert;
        let c = certify(&inst, &rep.solution, tol, &fresh).map_err(|e| format!("{name}: {e}"))?;
        ensure(c.passed, format!("{name}: recheck residual {:e}", c.max))?;
        n += 1;
    }
    ensure(n == examples::ALL.len(), format!("only {n} instances converged"))?;
    Ok(format!("{n} converged reports recertified"))
}

fn ac4_oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut notes = Vec::new();
    for (name, text) in [
        ("paper-gnep", examples::PAPER_GNEP),
        ("paper-quopt", examples::PAPER_QUOPT),
        ("selfmap-box", examples::SELFMAP_BOX),
    ] {
        let inst = load_instance(text).map_err(|e| e.to_string())?;
        let cfg = SolveConfig {
            exhaust_starts: true,
            ..config_for(&inst)
        };
        let rep: SolveReport = solve(&inst, &cfg).map_err(|e| format!("{name}: {e}"))?;
        let solutions: Vec<_> = rep
            .starts
            .iter()
            .filter(|s| s.converged)
            .map(|s| s.solution.x_tilde.clone())
            .collect();
        ensure(!solutions.is_empty(), format!("{name}: no converged start"))?;
        let oracle = brute_force(&inst, 41, None, DEFAULT_BUDGET).map_err(|e| format!("{name}: {e}"))?;
        let radius = 1.5 * oracle.spacing;
        for s in &solutions {
            let near = oracle.candidates.iter().any(|c| gap(&c.x, s) <= radius);
            ensure(near, format!("{name}: solver solution {s:?} has no oracle candidate nearby"))?;
        }
        let clusters = cluster(&oracle.candidates, radius);
        for members in &clusters {
            let hit = members
                .iter()
                .any(|&k| solutions.iter().any(|s| gap(&oracle.candidates[k].x, s) <= radius));
            ensure(
                hit,
                format!("{name}: oracle cluster at {:?} has no solver solution", oracle.candidates[members[0]].x),
            )?;
        }
        notes.push(format!("{name} {}/{}", solutions.len(), clusters.len()));
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("solutions/clusters {} in {elapsed:.2?}", notes.join(", ")))
}

fn ac5_reduction_laws() -> Outcome {
    let inst = load_instance(examples::SELFMAP_BOX).map_err(|e| e.to_string())?;
    let cfg = config_for(&inst);
    let rep = solve(&inst, &cfg).map_err(|e| e.to_string())?;
    ensure(rep.converged, "selfmap-box did not converge")?;
    for (i, p) in rep.residuals.players.iter().enumerate() {
        ensure(p.proj_residual <= 1e-9, format!("player {} projection residual {:e}", i + 1, p.proj_residual))?;
    }
    let gne = is_classical_gne(&inst, &rep.solution.x_tilde, cfg.tol_cert, &cfg.response).map_err(|e| e.to_string())?;
    ensure(gne.is_gne, format!("{:?} is not a classical equilibrium", rep.solution.x_tilde))?;

    let known = vec![vec![0.3], vec![0.3]];
    let known_check = is_classical_gne(&inst, &known, 1e-9, &cfg.response).map_err(|e| e.to_string())?;
    ensure(known_check.is_gne, "injected profile is not an equilibrium")?;
    let cand = CandidateSolution {
        x_tilde: known.clone(),
        y_tilde: known,
    };
    let c = certify(&inst, &cand, cfg.tol_cert, &cfg.response).map_err(|e| e.to_string())?;
    ensure(c.passed, format!("injected equilibrium fails certify ({:e})", c.max))?;
    Ok(format!("x = {:?}", rep.solution.x_tilde))
}

fn random_set(rng: &mut ChaCha8Rng, d: usize) -> ConvexSet {
    let lower: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..0.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.0..2.5)).collect();
    match rng.gen_range(0..3) {
        0 => ConvexSet::Box { lower, upper },
        1 => ConvexSet::Ball {
            center: (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            radius: rng.gen_range(0.0..2.0),
        },
        _ => {
            let c: Vec<f64> = lower.iter().zip(&upper).map(|(a, b)| 0.5 * (a + b)).collect();
            let halfspaces = (0..rng.gen_range(1..4))
                .map(|_| {
                    let normal: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let offset = normal.iter().zip(&c).map(|(n, x)| n * x).sum::<f64>() + rng.gen_range(0.0..1.0);
                    Halfspace { normal, offset }
                })
                .collect();
            ConvexSet::Polytope {
                lower,
                upper,
                halfspaces,
            }
        }
    }
}

fn ac6_projection_suite() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cases = 1000;
    for case in 0..cases {
        let d = rng.gen_range(1..=3);
        let set = random_set(&mut rng, d);
        let p = SemiNorm::new((0..d).map(|_| rng.gen_range(0.2..3.0)).collect());
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let pv = set.project(&p, &v).map_err(|e| e.to_string())?;
        let again = set.project(&p, &pv.point).map_err(|e| e.to_string())?;
        ensure(
            gap(std::slice::from_ref(&pv.point), &[again.point]) <= 1e-9,
            format!("case {case}: not idempotent on {set:?}"),
        )?;
        for g in set.sample_grid(50) {
            let dg = p.dist(&v, &g).map_err(|e| e.to_string())?;
            if pv.distance > dg + 1e-9 {
                return Err(format!("case {case}: grid point {g:?} is closer"));
            }
        }
        let pw = set.project(&p, &w).map_err(|e| e.to_string())?;
        let lhs = p.dist(&pv.point, &pw.point).map_err(|e| e.to_string())?;
        let rhs = p.dist(&v, &w).map_err(|e| e.to_string())?;
        ensure(lhs <= rhs + 1e-9, format!("case {case}: expansive {lhs} > {rhs}"))?;
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("{cases} cases in {elapsed:.2?}"))
}

fn ac7_diagnostics() -> Outcome {
    let run = || -> Result<String, String> {
        let cube = load_instance(examples::CUBE_QUASICONCAVE).map_err(|e| e.to_string())?;
        let p = &cube.players[0];
        let q = check_quasiconcave(&p.objective, &p.strategy_set, 10_000, 1e-12, 42).map_err(|e| e.to_string())?;
        ensure(q.quasiconcave, "z_1^3 flagged as not quasi-concave")?;
        let w = q.concavity_witness.clone().ok_or("no concavity witness for z_1^3")?;
        ensure(
            w.u == [0.0] && w.v == [1.0] && w.f_mid == 0.125 && w.f_avg == 0.5,
            format!("unexpected concavity witness {w:?}"),
        )?;

        let fpt = load_instance(examples::FPT_EXAMPLE).map_err(|e| e.to_string())?;
        let f = &fpt.players[0];
        let vars = ["x2_1", "z_1"];
        let lsc = check_lsc_at(&f.objective, &vars, &[0.0, 0.0], 0.5, &DEFAULT_RADII, 2000, 42).map_err(|e| e.to_string())?;
        ensure(lsc.violated, "lsc violation at (0,0) not detected")?;
        let opts = FptOptions {
            epsilon: 0.5,
            seed: 42,
            ..FptOptions::default()
        };
        let fp = check_fpt_lsc_at(&f.objective, &f.constraint_map, &["x2_1"], &["z_1"], &[0.0], &[0.0], &opts)
            .map_err(|e| e.to_string())?;
        ensure(fp.passed, "FPT-lsc sampling check failed at (0,0)")?;
        Ok(format!("{}|{:?}|{:?}|{:?}", q.pairs_tested, q, lsc, fp))
    };
    let a = run()?;
    let b = run()?;
    ensure(a == b, "diagnostics differ between runs with seed 42")?;
    Ok("x^3 witness u=0 v=1, lsc violated, FPT-lsc passed, repeatable".into())
}

fn corpus_run() -> Vec<String> {
    let mut out = Vec::new();
    for (name, text) in examples::ALL {
        let inst = load_instance(text).unwrap();
        let cfg = config_for(&inst);
        let rep = solve(&inst, &cfg).unwrap();
        let report = serde_json::json!({
            "converged": rep.converged,
            "x_tilde": rep.solution.x_tilde,
            "y_tilde": rep.solution.y_tilde,
            "residuals": rep.residuals,
            "iterations": rep.iterations,
            "seed": rep.seed,
        });
        out.push(format!("{name}\n{}", cli::render_report(report)));
    }
    out
}

fn ac8_determinism() -> Outcome {
    let a = corpus_run();
    let b = corpus_run();
    for (x, y) in a.iter().zip(&b) {
        ensure(x == y, format!("reports differ:\n{x}\n{y}"))?;
    }
    Ok(format!("{} reports byte-identical", a.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 worked example reproduction", ac1_worked_example),
        ("2 non-self detection", ac2_no_classical_equilibrium),
        ("3 certificate soundness", ac3_certificate_soundness),
        ("4 oracle equivalence", ac4_oracle_equivalence),
        ("5 reduction laws", ac5_reduction_laws),
        ("6 projection property suite", ac6_projection_suite),
        ("7 diagnostics fidelity", ac7_diagnostics),
        ("8 determinism", ac8_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        match f() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
