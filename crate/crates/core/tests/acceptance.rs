use std::process::ExitCode;
use std::time::Instant;

use crtractor::cli::{self, Check, Context, Params};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Vec<Check> + 'a>);

fn ctx(n: usize, signature: Option<&str>) -> Context {
    let mut p = Params::new(n);
    p.signature = signature.map(str::to_string);
    Context::new(&p).expect("valid parameters")
}

fn contexts() -> Vec<Context> {
    vec![ctx(1, None), ctx(2, None), ctx(2, Some("+-"))]
}

/// Runs `group` on each context and requires at least `min` checks per context.
fn on_all(group: fn(&Context) -> Vec<Check>, ctxs: &[Context], min: usize) -> Vec<Check> {
    ctxs.iter()
        .flat_map(|c| {
            let checks = group(c);
            let enough = Check::new(format!("at least {min} checks for n = {}", c.n()), "coverage", checks.len() >= min);
            checks.into_iter().chain(std::iter::once(enough))
        })
        .collect()
}

fn count(checks: &[Check], anchor: &str) -> usize {
    checks.iter().filter(|c| c.anchor == anchor).count()
}

fn criterion_operator_invariance(ctxs: &[Context]) -> Vec<Check> {
    let mut out = Vec::new();
    for c in ctxs {
        let checks = cli::operator_invariance(c);
        let per_k: Vec<usize> =
            (1..=3).map(|k| checks.iter().filter(|ch| ch.name.starts_with(&format!("P invariant, k = {k},"))).count()).collect();
        let enough = per_k.iter().all(|&m| m >= 3 * 4);
        out.push(
            Check::new(format!("3 rescalings x 4 weights per order for n = {}", c.n()), "coverage", enough)
                .with_witness(format!("{per_k:?}")),
        );
        out.extend(checks);
    }
    out
}

fn criterion_obstruction() -> Vec<Check> {
    let checks = cli::obstruction(&ctx(1, None));
    let k1: Vec<&Check> = checks.iter().filter(|c| c.name.contains("k = 1")).collect();
    let k2: Vec<&Check> = checks.iter().filter(|c| c.name.contains("k = 2")).collect();
    let mut out = checks.clone();
    out.push(Check::new("both orders covered", "coverage", !k1.is_empty() && !k2.is_empty()));
    out
}

fn main() -> ExitCode {
    let all = contexts();
    let n1 = [ctx(1, None)];
    let criteria: Vec<Criterion> = vec![
        ("density commutators on flat and rescaled structures", Box::new(|| on_all(cli::dencomm, &all, 4 * 3))),
        ("transformation-law coherence", Box::new(|| on_all(cli::transform_laws, &all, 10))),
        (
            "tractor algebra",
            Box::new(|| {
                let checks = on_all(cli::tractor_algebra, &all, 20);
                let dz = count(&checks, "DZ");
                let mut out = checks;
                out.push(Check::new("at least 6 DZ weights per structure", "coverage", dz >= 6 * 2 * 3));
                out
            }),
        ),
        (
            "flat identity suite",
            Box::new(|| {
                let mut out = on_all(cli::flat_identities, &all, 30);
                let prelim_n1 = count(&cli::flat_identities(&ctx(1, None)), "prelim");
                out.push(Check::new("every bar-splitting for k <= 3 at n = 1", "coverage", prelim_n1 == 1 + 2 + 3));
                out
            }),
        ),
        ("tractor curvature vanishing and synthetic symmetries", Box::new(|| on_all(cli::curvature_vanishing, &all, 20))),
        ("operator invariance", Box::new(|| criterion_operator_invariance(&all))),
        ("normalization and Folland-Stein factorization", Box::new(|| on_all(cli::normalization, &all, 20))),
        ("self-adjointness and pairing", Box::new(|| on_all(cli::self_adjointness, &all, 10))),
        ("second-order special operator", Box::new(|| on_all(cli::special_case, &all, 8))),
        ("Q-curvature transformation", Box::new(|| on_all(cli::q_curvature, &n1, 4))),
        ("ambient metric and Laplacian identities", Box::new(|| on_all(cli::ambient, &all, 10))),
        ("obstruction proportional to the invariant operator", Box::new(criterion_obstruction)),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run();
        let bad: Vec<&Check> = checks.iter().filter(|c| !c.passed()).collect();
        let status = if bad.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status}  {title}  ({} checks, {} ms)", i + 1, checks.len(), start.elapsed().as_millis());
        for c in &bad {
            println!("    failed: {} [{}] {}", c.name, c.anchor, c.witness.as_deref().unwrap_or(""));
        }
        if !bad.is_empty() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
