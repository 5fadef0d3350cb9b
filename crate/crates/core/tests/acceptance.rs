//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cpnunfold_core::approx::{fixed_point, restrict, subsumes, DEFAULT_BUDGET as APPROX_BUDGET};
use cpnunfold_core::color::{Color, ColorSet, Interval, RangeTuple};
use cpnunfold_core::expr::{eval_arc, eval_guard, Binding};
use cpnunfold_core::io::{ptpnml, text};
use cpnunfold_core::multiset::Multiset;
use cpnunfold_core::net::{ColoredNet, NetBuilder};
use cpnunfold_core::oracle::{bisimilar, reachable_isomorphic, IsoMode};
use cpnunfold_core::par::{map_collect, Exec};
use cpnunfold_core::pipeline::{run, PipelineOptions};
use cpnunfold_core::quotient::{
    is_stable_oracle, partition_union, quotient, stabilize, Partition, DEFAULT_BUDGET as QUOTIENT_BUDGET,
};
use cpnunfold_core::semantics::{bounded_marking_count, explore, DEFAULT_BOUNDED_CAP};
use cpnunfold_core::unfold::unfold;

const INHIBITOR: &str = include_str!("../fixtures/inhibitor.net");
const TWO_STAGE: &str = include_str!("../fixtures/two_stage.net");
const FEEDBACK: &str = include_str!("../fixtures/feedback.net");
const REFERENDUM5: &str = include_str!("../fixtures/referendum5.net");

/// Size of the random corpus shared by criteria 6 to 8.
const CORPUS: usize = 240;
const CORPUS_SEED: u64 = 0x5eed;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn parse(src: &str) -> ColoredNet {
    text::parse(src).expect("fixture parses")
}

fn set(arity: usize, tuples: &[&[(u32, u32)]]) -> ColorSet {
    ColorSet::from_tuples(
        arity,
        tuples
            .iter()
            .map(|t| RangeTuple::new(t.iter().map(|&(a, b)| Interval::new(a, b)))),
    )
    .unwrap()
}

fn classes(ranges: &[(u32, u32)]) -> Vec<ColorSet> {
    ranges.iter().map(|&r| set(1, &[&[r]])).collect()
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(
        start.elapsed() < limit,
        format!("took {:?}, limit {limit:?}", start.elapsed()),
    )
}

fn inhibitor_net_golden() -> Outcome {
    let start = Instant::now();
    let net = parse(INHIBITOR);
    let opts = PipelineOptions {
        quotient: false,
        approximate: false,
        ..Default::default()
    };
    let pt = run(&net, &opts).map_err(|e| e.to_string())?.net;
    ensure(pt.places.len() == 12, format!("{} places", pt.places.len()))?;
    ensure(
        pt.transitions.len() == 2,
        format!("{} transitions", pt.transitions.len()),
    )?;
    let sum = pt.place_index("p3__SUM").ok_or("no p3__SUM place")?;
    for t in &pt.transitions {
        ensure(
            t.inhibitors == vec![(sum, 1)],
            format!("inhibitors of {}: {:?}", t.name, t.inhibitors),
        )?;
    }
    let marked: Vec<(&str, u64)> = pt
        .places
        .iter()
        .filter(|p| p.initial > 0)
        .map(|p| (p.name.as_str(), p.initial))
        .collect();
    ensure(
        marked == [("p1__0", 2), ("p1__2", 3), ("p2__5", 2)],
        format!("initial marking {marked:?}"),
    )?;
    within(start, Duration::from_secs(1))?;
    Ok("12 places, 2 transitions, p3__SUM inhibits both".into())
}

fn expression_examples() -> Outcome {
    let net = parse(
        "domain A = [1,3]\nvar x : A\nvar y : A\nvar z : A\nplace p : A\n\
         transition t [(x > 2 && y == 2) || z+2 == 3]\narc t -> p : 1'(x-1) + 1'(y+1) + 1'(z)\n",
    );
    let t = &net.transitions[0];
    let binding = |x, y, z| Binding(t.variables.iter().copied().zip([x, y, z]).collect());
    let (b1, b2) = (binding(3, 3, 1), binding(1, 2, 2));
    let arc = &t.outputs[0].1;
    let ms = |pairs: &[(u32, u64)]| Multiset::from_pairs(pairs.iter().map(|&(c, n)| (Color::scalar(c), n))).unwrap();
    let w1 = eval_arc(arc, &b1, &net.variables).map_err(|e| e.to_string())?;
    let w2 = eval_arc(arc, &b2, &net.variables).map_err(|e| e.to_string())?;
    ensure(w1 == ms(&[(2, 1), (1, 2)]), format!("W(a,b1) = {w1}"))?;
    ensure(w2 == ms(&[(3, 2), (2, 1)]), format!("W(a,b2) = {w2}"))?;
    let g1 = eval_guard(&t.guard, &b1, &net.variables).map_err(|e| e.to_string())?;
    let g2 = eval_guard(&t.guard, &b2, &net.variables).map_err(|e| e.to_string())?;
    ensure(g1 && !g2, format!("guards {g1}/{g2}"))?;
    Ok(format!("W(a,b1) = {w1}, W(a,b2) = {w2}, G = {g1}/{g2}"))
}

fn quotient_golden() -> Outcome {
    let two_stage = parse(TWO_STAGE);
    let start = Instant::now();
    let d3 = stabilize(&two_stage, QUOTIENT_BUDGET);
    within(start, Duration::from_secs(5))?;
    ensure(
        d3.classes == vec![classes(&[(1, 1), (2, 2), (3, 5)]), classes(&[(1, 1), (2, 5)])],
        format!("two-stage partition {:?}", d3.classes),
    )?;
    let feedback = parse(FEEDBACK);
    let start = Instant::now();
    let d4 = stabilize(&feedback, QUOTIENT_BUDGET);
    within(start, Duration::from_secs(5))?;
    let expected = vec![
        classes(&[(1, 3), (4, 4)]),
        classes(&[(1, 1), (2, 2), (3, 3), (4, 4)]),
        classes(&[(1, 3), (4, 4)]),
        (1..=4).map(|y| set(2, &[&[(1, 4), (y, y)]])).collect(),
    ];
    ensure(d4.classes == expected, format!("feedback partition {:?}", d4.classes))?;
    let unstable = Partition::new(&two_stage, vec![classes(&[(1, 2), (3, 5)]), classes(&[(1, 1), (2, 5)])])
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    let rejects = !is_stable_oracle(&two_stage, &unstable, DEFAULT_BOUNDED_CAP).map_err(|e| e.to_string())?;
    let accepts = is_stable_oracle(&two_stage, &d3, DEFAULT_BOUNDED_CAP).map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(5))?;
    ensure(
        rejects && accepts,
        format!("oracle rejects unstable: {rejects}, accepts stable: {accepts}"),
    )?;
    Ok("two-stage and feedback partitions exact; oracle separates them".into())
}

fn approx_golden() -> Outcome {
    let net = parse(FEEDBACK);
    let start = Instant::now();
    let a = fixed_point(&net, APPROX_BUDGET);
    within(start, Duration::from_secs(1))?;
    let expected = vec![
        set(1, &[&[(1, 1)]]),
        set(1, &[&[(1, 1)], &[(3, 4)]]),
        set(1, &[&[(1, 1)]]),
        set(2, &[&[(1, 1), (1, 1)], &[(1, 1), (3, 4)]]),
    ];
    ensure(a.possible == expected, format!("fixed point {:?}", a.possible))?;
    Ok("fixed point exact".into())
}

fn union_example() -> Outcome {
    let mut b = NetBuilder::new();
    b.place("p", ColorSet::range(1, 5), Multiset::new());
    let net = b.build().map_err(|e| e.to_string())?;
    let d1 = Partition::new(&net, vec![classes(&[(1, 2), (3, 4), (5, 5)])]).map_err(|e| e.to_string())?;
    let d2 = Partition::new(&net, vec![classes(&[(1, 1), (2, 3), (4, 4), (5, 5)])]).map_err(|e| e.to_string())?;
    let u = partition_union(&d1, &d2);
    ensure(
        u.classes == vec![classes(&[(1, 4), (5, 5)])],
        format!("union {:?}", u.classes),
    )?;
    Ok("{[1,4]},{[5]}".into())
}

struct NetResult {
    seed: u64,
    unfold_ok: bool,
    quotient_ok: bool,
    oracle_checked: bool,
    oracle_ok: bool,
    approx_ok: bool,
}

fn check_net(seed: u64, net: &ColoredNet) -> Result<NetResult, String> {
    let fail = |what: &str, e: cpnunfold_core::Error| format!("seed {seed}: {what}: {e}");
    let base = explore(net, common::STATE_LIMIT, Exec::Sequential).map_err(|e| fail("explore", e))?;
    let complete = |l: &cpnunfold_core::semantics::Lts<_>, what: &str| {
        if l.truncated {
            Err(format!("seed {seed}: {what} state space truncated"))
        } else {
            Ok(())
        }
    };

    let pt = unfold(net).map_err(|e| fail("unfold", e))?.to_colored();
    let lts_u = explore(&pt, 4 * common::STATE_LIMIT, Exec::Sequential).map_err(|e| fail("explore unfolded", e))?;
    complete(&lts_u, "unfolded")?;
    let unfold_ok = bisimilar(&base, &lts_u, 0, 0);

    let partition = stabilize(net, QUOTIENT_BUDGET);
    let q = quotient(net, &partition).map_err(|e| fail("quotient", e))?;
    let lts_q = explore(&q.net, 4 * common::STATE_LIMIT, Exec::Sequential).map_err(|e| fail("explore quotient", e))?;
    complete(&lts_q, "quotient")?;
    let quotient_ok = bisimilar(&base, &lts_q, 0, 0);
    let oracle_checked = bounded_marking_count(net) <= DEFAULT_BOUNDED_CAP;
    let oracle_ok = !oracle_checked
        || is_stable_oracle(net, &partition, DEFAULT_BOUNDED_CAP).map_err(|e| fail("stability oracle", e))?;

    let a = fixed_point(net, APPROX_BUDGET);
    let restricted = restrict(net, &a).map_err(|e| fail("restrict", e))?;
    let lts_r =
        explore(&restricted, 4 * common::STATE_LIMIT, Exec::Sequential).map_err(|e| fail("explore restricted", e))?;
    complete(&lts_r, "restricted")?;
    let approx_ok =
        base.states.iter().all(|m| subsumes(&a, m)) && reachable_isomorphic(&base, &lts_r, IsoMode::SameStates);

    Ok(NetResult {
        seed,
        unfold_ok,
        quotient_ok,
        oracle_checked,
        oracle_ok,
        approx_ok,
    })
}

fn referendum(n: u32) -> ColoredNet {
    parse(&REFERENDUM5.replace("domain Voters = [1,5]", &format!("domain Voters = [1,{n}]")))
}

fn size_reduction() -> Outcome {
    let mut reduced = Vec::new();
    let mut naive = Vec::new();
    for n in [5, 10, 20] {
        let net = referendum(n);
        let out = run(&net, &PipelineOptions::default()).map_err(|e| e.to_string())?;
        reduced.push((out.net.places.len(), out.net.transitions.len()));
        let plain = PipelineOptions {
            quotient: false,
            approximate: false,
            ..Default::default()
        };
        let out = run(&net, &plain).map_err(|e| e.to_string())?;
        naive.push((out.net.places.len(), out.net.transitions.len()));
    }
    ensure(
        reduced.iter().all(|s| *s == reduced[0]),
        format!("reduced sizes {reduced:?}"),
    )?;
    let linear = naive
        .iter()
        .zip([5usize, 10, 20])
        .all(|(&(p, t), n)| p == 1 + 3 * n && t == 1 + 2 * n);
    ensure(linear, format!("naive sizes {naive:?}"))?;
    Ok(format!("reduced (places, transitions) {reduced:?}; naive {naive:?}"))
}

fn determinism() -> Outcome {
    let fixtures = [
        ("inhibitor_net", INHIBITOR),
        ("two_stage", TWO_STAGE),
        ("feedback", FEEDBACK),
        ("referendum5", REFERENDUM5),
    ];
    let pnml_fixture = include_str!("../fixtures/inhibitor.pnml");
    let mut nets: Vec<(&str, ColoredNet)> = fixtures.iter().map(|(n, s)| (*n, parse(s))).collect();
    nets.push((
        "inhibitor.pnml",
        cpnunfold_core::io::pnml::parse_colored_pnml(pnml_fixture).map_err(|e| e.to_string())?,
    ));
    for (name, net) in &nets {
        let render = || -> Result<(String, String, serde_json::Value), String> {
            let out = run(net, &PipelineOptions::default()).map_err(|e| e.to_string())?;
            let mut stats = serde_json::to_value(&out.report).map_err(|e| e.to_string())?;
            stats.as_object_mut().expect("object").remove("timings");
            Ok((
                ptpnml::write_pt_pnml(&out.net, name),
                text::write(&out.net.to_colored()),
                stats,
            ))
        };
        let (first, second) = (render()?, render()?);
        ensure(first == second, format!("{name}: outputs differ between runs"))?;
    }
    Ok(format!("{} fixtures byte-identical across runs", nets.len()))
}

fn report(n: usize, title: &str, outcome: Outcome) -> bool {
    match outcome {
        Ok(detail) => {
            println!("criterion {n:>2} PASS  {title}: {detail}");
            true
        }
        Err(why) => {
            println!("criterion {n:>2} FAIL  {title}: {why}");
            false
        }
    }
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()))
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= report(1, "inhibitor net unfolding", guarded(inhibitor_net_golden));
    ok &= report(2, "expression semantics", guarded(expression_examples));
    ok &= report(3, "quotienting golden tests", guarded(quotient_golden));
    ok &= report(4, "approximation golden test", guarded(approx_golden));
    ok &= report(5, "partition union", guarded(union_example));

    let start = Instant::now();
    let corpus = common::bounded_nets(CORPUS, CORPUS_SEED);
    let results = map_collect(Exec::Parallel, &corpus, |(seed, net)| check_net(*seed, net));
    let elapsed = start.elapsed();
    let mut errors = Vec::new();
    let mut done = Vec::new();
    for r in results {
        match r {
            Ok(r) => done.push(r),
            Err(e) => errors.push(e),
        }
    }
    let failing = |f: fn(&NetResult) -> bool| -> Vec<u64> { done.iter().filter(|r| !f(r)).map(|r| r.seed).collect() };
    let summary = |bad: Vec<u64>| -> Outcome {
        if !errors.is_empty() {
            return Err(format!("{} nets errored, first: {}", errors.len(), errors[0]));
        }
        if !bad.is_empty() {
            return Err(format!(
                "{} of {} nets fail, seeds {:?}",
                bad.len(),
                done.len(),
                &bad[..bad.len().min(10)]
            ));
        }
        if elapsed > Duration::from_secs(300) {
            return Err(format!("suite took {elapsed:?}"));
        }
        Ok(format!(
            "{} random nets, {elapsed:.1?} for the shared corpus",
            done.len()
        ))
    };
    ok &= report(6, "unfolding bisimilarity", summary(failing(|r| r.unfold_ok)));
    let checked = done.iter().filter(|r| r.oracle_checked).count();
    ok &= report(
        7,
        "quotient bisimilarity and stability",
        summary(failing(|r| r.quotient_ok && r.oracle_ok))
            .map(|s| format!("{s}; {checked} checked by the stability oracle")),
    );
    ok &= report(
        8,
        "approximation soundness and restriction",
        summary(failing(|r| r.approx_ok)),
    );

    ok &= report(9, "size reduction on the referendum family", guarded(size_reduction));
    ok &= report(10, "determinism", guarded(determinism));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
