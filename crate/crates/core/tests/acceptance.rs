//! Acceptance suite: one PASS/FAIL line per criterion at the pinned
//! tolerances. Runs without the libtest harness so the lines always print.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lipfree::element::pairing;
use lipfree::generate::{self, Family, GeneratorSpec, Instance};
use lipfree::metric::{round_metric, separation_bounds, validate_metric, FiniteMetricSpace};
use lipfree::scalar::rational_from_int;
use lipfree::schur::{glue_witness, schur_certificate, BlockSequence, ElementSequence, WitnessCertificate};
use lipfree::transport::{exact_norm, free_norm, integer_potential};
use lipfree::tree::{density_interval, distortion_pair, subdominant_ultrametric, tree_cut_norm, tree_embed, IntervalUnion};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use common::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = generate::rng(101);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..500 {
        let n = rng.gen_range(2..=6);
        let space = random_rational_space(&mut rng, n);
        let element = random_rational_element(&mut rng, &space);
        let value = free_norm(&space, &element).unwrap().value;
        let oracle = dual_vertex_norm(&space, &element);
        let err = (value - oracle).abs();
        worst = worst.max(err);
        if err > 1e-9 {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(60),
        format!("500 instances, {failures} mismatches, max |Δ| = {worst:.2e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = generate::rng(202);
    let mut failures = 0;
    let mut worst_gap = 0.0f64;
    for i in 0..1000 {
        let n = rng.gen_range(2..=40);
        let space = if i % 2 == 0 {
            generate::uniform_discrete(&mut rng, n).unwrap()
        } else {
            let max = rng.gen_range(1..=8);
            generate::integer_metric(&mut rng, n, max).unwrap()
        };
        let k = rng.gen_range(0..n);
        let element = generate::random_element(&mut rng, &space, k);
        let cert = match free_norm(&space, &element) {
            Ok(cert) => cert,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let (cost, imbalance) = plan_cost_and_balance(&space, &element, &cert.plan.flows);
        let dual: f64 = element.iter().map(|(x, a)| a * cert.potential.values[x]).sum();
        let gap = (cost - dual).abs();
        worst_gap = worst_gap.max(gap / cert.value.max(1.0));
        let lip = max_ratio(&space, &cert.potential.values);
        let ok = gap <= 1e-9 * cert.value.max(1.0)
            && imbalance <= 1e-9 * element.total_mass().max(1.0)
            && (cost - cert.value).abs() <= 1e-9 * cert.value.max(1.0)
            && lip <= 1.0 + 1e-9
            && cert.potential.values[0] == 0.0;
        if !ok {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("1000 instances, {failures} failures, max relative gap = {worst_gap:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = generate::rng(303);
    let mut failures = 0;
    let mut routes = BTreeMap::new();
    for _ in 0..200 {
        let n = rng.gen_range(2..=20);
        let big_n = rng.gen_range(1..=6);
        let space = generate::integer_metric(&mut rng, n, big_n).unwrap();
        let k = rng.gen_range(0..n.min(8));
        let mut points: Vec<usize> = (1..n).collect();
        rand::seq::SliceRandom::shuffle(points.as_mut_slice(), &mut rng);
        let element = lipfree::RationalElement::from_pairs(points.into_iter().take(k).map(|x| {
            let num = rng.gen_range(-9..=9i64);
            let den = rng.gen_range(1..=7i64);
            (x, BigRational::new(num.into(), den.into()))
        }));
        let potential = integer_potential(&space, &element).unwrap();
        *routes.entry(format!("{:?}", potential.route)).or_insert(0) += 1;
        let values = &potential.values;
        let lipschitz = (0..n).all(|i| (0..n).all(|j| (values[i] - values[j]).abs() <= space.int_d(i, j).unwrap()));
        let paired = element
            .iter()
            .fold(BigRational::zero(), |acc, (x, a)| acc + a * rational_from_int(values[x]));
        let exact = exact_norm(&space, &element).unwrap().value;
        let float = free_norm(&space, &element.to_f64()).unwrap().value;
        let agrees_with_float = (lipfree::scalar::Scalar::to_f64(&exact) - float).abs() <= 1e-9 * float.max(1.0);
        if !(lipschitz && values[0] == 0 && paired == exact && paired == potential.norm && agrees_with_float) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("200 instances, {failures} failures, rounding routes {routes:?}"))
}

fn criterion_4() -> Outcome {
    let mut rng = generate::rng(404);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=30);
        let space = generate::uniform_discrete(&mut rng, n).unwrap();
        let k = rng.gen_range(0..n);
        let element = generate::random_element(&mut rng, &space, k);
        let bounds = separation_bounds(&space).unwrap();
        let norm = free_norm(&space, &element).unwrap().value;
        let mass = element.total_mass();
        let tol = 1e-9 * norm.max(1.0);
        if !(bounds.a / 2.0 * mass <= norm + tol && norm <= bounds.b * mass + tol) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("1000 instances, {failures} failures"))
}

fn criterion_5() -> Outcome {
    let mut rng = generate::rng(505);
    let mut failures = 0;
    for i in 0..200 {
        let n = rng.gen_range(2..=15);
        let space = match i % 3 {
            0 => generate::uniform_discrete(&mut rng, n).unwrap(),
            1 => generate::random_tree(&mut rng, n).unwrap(),
            _ => random_rational_space(&mut rng, n),
        };
        let c = rng.gen_range(1..=400) as f64 / 7.0;
        let rounded = round_metric(&space, c).unwrap();
        let sandwich = (0..n).all(|x| {
            (0..n).all(|y| {
                let cd = c * space.d(x, y);
                cd <= rounded.d(x, y) && rounded.d(x, y) <= cd + 1.0
            })
        });
        if !(sandwich && rounded.is_integer() && validate_metric(&rounded.rows()).unwrap().ok) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("200 spaces, {failures} failures"))
}

fn criterion_6() -> Outcome {
    let mut rng = generate::rng(606);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let n = rng.gen_range(2..=12);
        let space = generate::random_tree(&mut rng, n).unwrap();
        let tree = tree_embed(&space).unwrap();
        for _ in 0..3 {
            let k = rng.gen_range(0..n);
        let element = generate::random_element(&mut rng, &space, k);
            let cut = tree_cut_norm(&tree, &element).unwrap();
            let norm = free_norm(&space, &element).unwrap().value;
            let err = (cut - norm).abs();
            worst = worst.max(err);
            if err > 1e-9 {
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("300 trees × 3 elements, {failures} mismatches, max |Δ| = {worst:.2e}"))
}

struct BlockInstance {
    space: FiniteMetricSpace,
    blocks: BlockSequence,
}

fn block_instances() -> Vec<BlockInstance> {
    let mut rng = generate::rng(707);
    (0..100)
        .map(|i| {
            let family = if i % 2 == 0 { Family::BlockSequence } else { Family::ConflictBlock };
            let mut spec = GeneratorSpec::new(family);
            spec.blocks = rng.gen_range(20..=40);
            spec.support = rng.gen_range(1..=4);
            spec.max_distance = match family {
                Family::ConflictBlock => rng.gen_range(4..=5),
                _ => rng.gen_range(1..=5),
            };
            match generate::generate(&spec, rng.gen()).unwrap() {
                Instance::Blocks { space, blocks } => BlockInstance { space, blocks },
                Instance::Space(_) => unreachable!("block family"),
            }
        })
        .collect()
}

/// Test-side re-verification of a witness; returns the failed check.
fn audit_witness(instance: &BlockInstance, cert: &WitnessCertificate) -> Result<(), String> {
    let space = &instance.space;
    let n = space.len();
    let g = &cert.g_integer;
    if g[0] != 0 {
        return Err("g(0) ≠ 0".into());
    }
    for x in 0..n {
        for y in x + 1..n {
            if (g[x] - g[y]).abs() > 3 * space.int_d(x, y).unwrap() {
                return Err(format!("L(g) > 3 on ({x}, {y})"));
            }
        }
    }
    // V-sets against distinct earlier blocks are disjoint per key
    let mut seen: BTreeMap<(usize, (i64, i64, i64)), BTreeMap<usize, usize>> = BTreeMap::new();
    for set in &cert.dropped_sets {
        let owners = seen.entry((set.later, set.key)).or_default();
        for &y in &set.points {
            if let Some(&m) = owners.get(&y) {
                if m != set.earlier {
                    return Err(format!("V-sets of {m} and {} meet at {y}", set.earlier));
                }
            }
            owners.insert(y, set.earlier);
        }
    }
    let big_n = space.integer_diameter().unwrap() as f64;
    for (j, &b) in cert.retained.iter().enumerate() {
        let combined = instance.blocks.combined(b);
        let value = pairing(&cert.g, &combined).map_err(|e| e.to_string())?;
        let level = free_norm(space, &combined).map_err(|e| e.to_string())?.value;
        let dropped: BTreeSet<usize> = cert
            .dropped_sets
            .iter()
            .filter(|s| s.later == b)
            .flat_map(|s| s.points.iter().copied())
            .collect();
        let mass: f64 = dropped.iter().map(|&y| instance.blocks.blocks()[b].coeff(y).abs()).sum();
        if (value - cert.values[j]).abs() > 1e-9 * level.max(1.0) || (level - cert.norm_levels[j]).abs() > 1e-9 * level.max(1.0) {
            return Err(format!("reported value or level of block {b} does not recompute"));
        }
        if level - value > 4.0 * big_n * mass + 1e-9 * level.max(1.0) {
            return Err(format!("slack chain fails on block {b}"));
        }
    }
    Ok(())
}

fn criteria_7_and_8() -> (Outcome, Outcome) {
    let instances = block_instances();
    let mut hard_failures = Vec::new();
    let mut low_retention = 0;
    let mut small_slack = 0;
    let mut slowest = Duration::ZERO;
    let mut conflict_runs_with_drops = 0;
    let mut ratios = Vec::new();
    let mut ratio_failures = Vec::new();
    for (i, instance) in instances.iter().enumerate() {
        let start = Instant::now();
        let result = glue_witness(&instance.space, &instance.blocks, 0.0, None);
        slowest = slowest.max(start.elapsed());
        let cert = match result {
            Ok(cert) => cert,
            Err(e) => {
                hard_failures.push(format!("#{i}: {e}"));
                continue;
            }
        };
        if let Err(e) = audit_witness(instance, &cert) {
            hard_failures.push(format!("#{i}: {e}"));
        }
        if 4 * cert.retained.len() < instance.blocks.len() {
            low_retention += 1;
        }
        let min_level = cert.norm_levels.iter().cloned().fold(f64::INFINITY, f64::min);
        if cert.slack <= 0.05 * min_level {
            small_slack += 1;
        }
        if cert.dropped_mass > 0.0 {
            conflict_runs_with_drops += 1;
        }

        // the same instance as a sequence μ_n = γ_0 + γ_n
        let items = (0..instance.blocks.len()).map(|n| instance.blocks.combined(n)).collect();
        let seq = ElementSequence::new(instance.space.clone(), items).unwrap();
        match schur_certificate(&seq, 1e-6) {
            Ok(outcome) => {
                let report = &outcome.report;
                if outcome.witness.is_none() {
                    continue;
                }
                match report.ratio_certified {
                    Some(r) => {
                        ratios.push(r);
                        let bound = report.characterization.as_ref().and_then(|c| c.ratio_bound);
                        let consistent = report.de_lower <= report.de_upper + 1e-9
                            && report.de_upper <= report.ca + 1e-9
                            && bound.map_or(false, |b| r <= b * (1.0 + 1e-9));
                        if r > 3.0 * 1.06 || !consistent {
                            ratio_failures.push(format!("#{i}: ratio {r}"));
                        }
                    }
                    None => ratio_failures.push(format!("#{i}: no ratio certified")),
                }
            }
            Err(e) => ratio_failures.push(format!("#{i}: {e}")),
        }
    }
    let total = instances.len();
    let seven = outcome(
        hard_failures.is_empty()
            && low_retention == 0
            && small_slack * 10 >= total * 9
            && slowest < Duration::from_secs(10),
        format!(
            "{total} instances, {} verification failures{}, {low_retention} below 25% retention, \
             slack ≤ 0.05·min level on {small_slack}/{total}, {conflict_runs_with_drops} runs dropped mass, \
             slowest {:.2}s",
            hard_failures.len(),
            hard_failures.first().map(|e| format!(" (first: {e})")).unwrap_or_default(),
            slowest.as_secs_f64()
        ),
    );
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let eight = outcome(
        ratio_failures.is_empty() && max_ratio <= 3.2,
        format!(
            "{} certified runs, max ratio {max_ratio:.4} (threshold {:.2}), {} failures{}",
            ratios.len(),
            3.0 * 1.06,
            ratio_failures.len(),
            ratio_failures.first().map(|e| format!(" (first: {e})")).unwrap_or_default()
        ),
    );
    (seven, eight)
}

fn criterion_9() -> Outcome {
    let mut rng = generate::rng(909);
    let mut density_failures = 0;
    for _ in 0..100 {
        let count = rng.gen_range(1..=8);
        let mut cursor = BigRational::zero();
        let mut intervals = Vec::new();
        for _ in 0..count {
            cursor += BigRational::new(rng.gen_range(0..=20).into(), rng.gen_range(1..=9).into());
            let l = cursor.clone();
            cursor += BigRational::new(rng.gen_range(1..=20).into(), rng.gen_range(1..=9).into());
            intervals.push((l, cursor.clone()));
        }
        let k = IntervalUnion::new(intervals.clone()).unwrap();
        let epsilon = BigRational::new(rng.gen_range(1..=99).into(), 100.into());
        let window = density_interval(&k, &epsilon).unwrap();
        // measure of K ∩ [a, b] from the raw intervals
        let mut measure = BigRational::zero();
        for (l, r) in &intervals {
            let lo = if *l > window.a { l.clone() } else { window.a.clone() };
            let hi = if *r < window.b { r.clone() } else { window.b.clone() };
            if hi > lo {
                measure += hi - lo;
            }
        }
        let width = &window.b - &window.a;
        if !(measure > (BigRational::one() - &epsilon) * width) {
            density_failures += 1;
        }
    }

    let mut distortion_failures = 0;
    for _ in 0..100 {
        let n = rng.gen_range(3..=10);
        let (a, b) = (0.0, rng.gen_range(1..=8) as f64);
        let width = (b - a) / n as f64;
        // ticks of a tenth of a cell: one strictly inside each cell, plus extras
        let mut ticks: Vec<usize> = (0..n).map(|j| 10 * j + rng.gen_range(1..=9)).collect();
        for _ in 0..rng.gen_range(0..5) {
            let t = rng.gen_range(0..=10 * n);
            if !ticks.contains(&t) {
                ticks.push(t);
            }
        }
        let positions: Vec<f64> = ticks.iter().map(|&t| a + width * t as f64 / 10.0).collect();
        let euclid = FiniteMetricSpace::from_fn(positions.len(), |i, j| (positions[i] - positions[j]).abs()).unwrap();
        let metric = subdominant_ultrametric(&euclid).unwrap();
        match distortion_pair(&positions, &metric, n, a, b) {
            Ok(pair) => {
                let ratio = metric.d(pair.x, pair.y) / (positions[pair.x] - positions[pair.y]).abs();
                if ratio > 2.0 / (n as f64 - 2.0) + 1e-12 {
                    distortion_failures += 1;
                }
            }
            Err(_) => distortion_failures += 1,
        }
    }
    outcome(
        density_failures == 0 && distortion_failures == 0,
        format!("100 interval unions ({density_failures} failures), 100 ultrametric samples ({distortion_failures} failures)"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 norm oracle equivalence", criterion_1()),
        ("2 duality certificates", criterion_2()),
        ("3 integer potentials", criterion_3()),
        ("4 uniformly discrete sandwich", criterion_4()),
        ("5 metric rounding", criterion_5()),
        ("6 tree cut norm", criterion_6()),
    ];
    let (seven, eight) = criteria_7_and_8();
    results.push(("7 glued witness", seven));
    results.push(("8 finite Schur certificate", eight));
    results.push(("9 density window and distortion pair", criterion_9()));
    let mut all = true;
    for (name, result) in &results {
        all &= result.passed;
        println!("criterion {name}: {} ({})", if result.passed { "PASS" } else { "FAIL" }, result.detail);
    }
    println!("criterion 10 optimality of the constant 3: EXCLUDED (the extremal example is not part of this toolkit)");
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
