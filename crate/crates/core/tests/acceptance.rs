//! Benchmark acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use obsrobust::chain::{build_pmc, build_tsimc, build_tsmc, region_for, repair_unreachable, IntervalChain, IntervalRow};
use obsrobust::io::benchmarks::{builtin, BenchmarkId};
use obsrobust::lifting::{pla_min, PlaConfig};
use obsrobust::robust::{ipe_min, vi_schedule};
use obsrobust::search::mbs;
use obsrobust::validate::{brute_force_min, monte_carlo, monte_carlo_chain, sweep, validate, Event};
use obsrobust::{fsc_value, run_query, Fsc, Horizon, Pomdp, RobustnessQuery, Threshold, Variant};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn e(x: impl std::fmt::Debug) -> String {
    format!("{x:?}")
}

fn toy() -> (Pomdp, Fsc) {
    let (m, pi) = builtin(BenchmarkId::ToyRover);
    (m.with_discount(1.0), pi)
}

fn toy_query(variant: Variant) -> RobustnessQuery {
    let (m, pi) = toy();
    let mut q = RobustnessQuery::new(m, pi, variant, Threshold::Relative(0.1), Horizon::Finite(5));
    q.eps_mbs = 1e-5;
    q.eps_p = Some(0.01);
    q
}

fn criterion_1() -> Outcome {
    let (m, pi) = toy();
    let c = build_pmc(&m, &pi);
    let r = region_for(&m, 0.1, 0.01).map_err(e)?;
    let out = pla_min(&c, &r, Horizon::Finite(5), &PlaConfig::default()).map_err(e)?;
    let mut argmin_ok = true;
    let mut listed = Vec::new();
    for (p, x) in out.argmin.iter().enumerate() {
        let name = c.table.name(&m, p);
        let want = if name.starts_with("Z(true|measure-size,large-") {
            Some(0.89)
        } else if name == "Z(true|measure-texture,large-angular)" {
            Some(0.11)
        } else {
            None
        };
        if let Some(w) = want {
            argmin_ok &= (x - w).abs() < 1e-9;
            listed.push(format!("{name}={x:.4}"));
        }
    }
    let ok = (out.value - 0.8521).abs() <= 1e-3 && argmin_ok && listed.len() == 3;
    check(ok, format!("value {:.6} (target 0.8521 ± 1e-3), argmin [{}]", out.value, listed.join(", ")))
}

fn criterion_2() -> Outcome {
    let (m, pi) = toy();
    let c = repair_unreachable(build_tsimc(&build_tsmc(&m, &pi), 0.1, 0.01).map_err(e)?).chain;
    let (t, w) = ipe_min(&c, Horizon::Finite(5), 1e-9, true).map_err(e)?;
    let q = c.labels.iter().position(|l| l == "large-angular|N3|1").ok_or("missing row")?;
    let k = w.kernel_at(3).ok_or("missing kernel")?;
    let i = c.rows[q].succ.iter().position(|&s| c.labels[s].contains("|N7|")).ok_or("missing successor")?;
    let p = k[q][i];
    let v = t.values[c.initial];
    let ok = (v - 0.8466).abs() <= 1e-3 && (p - 0.99).abs() < 1e-9;
    check(ok, format!("value {v:.6} (target 0.8466 ± 1e-3), witness Z(false|N3, large-angular) = {p}"))
}

fn criterion_3() -> Outcome {
    let ns = run_query(&toy_query(Variant::NonSticky)).map_err(e)?;
    let s = run_query(&toy_query(Variant::Sticky)).map_err(e)?;
    let ok = (ns.delta - 0.1006).abs() <= 1e-3 && (s.delta - 0.1078).abs() <= 1e-3 && ns.delta <= s.delta;
    check(ok, format!("δ_NS {:.6} (target 0.1006), δ_S {:.6} (target 0.1078)", ns.delta, s.delta))
}

fn criterion_4() -> Outcome {
    let (m, pi) = builtin(BenchmarkId::RoverNav);
    let m = m.with_discount(1.0);
    let h = 50;
    let mut q = RobustnessQuery::new(m.clone(), pi.clone(), Variant::NonSticky, Threshold::Relative(0.2), Horizon::Finite(h));
    q.eps_p = Some(0.0);
    let r = run_query(&q).map_err(e)?;

    let ts = build_tsmc(&m, &pi);
    let chain = repair_unreachable(build_tsimc(&ts, r.delta, 0.0).map_err(e)?).chain;
    let (_, w) = ipe_min(&chain, Horizon::Finite(h), 1e-9, true).map_err(e)?;
    let mut freqs = Vec::new();
    for (start, corridor, target) in [("large-smooth-3-1", "short-1", 0.6264), ("large-angular-3-1", "long-1", 0.6320)] {
        let s = m.state_index(start).ok_or("missing start state")?;
        let mut c: IntervalChain = chain.clone();
        c.rows[c.initial] = IntervalRow::point(&[(1 + (s * ts.n_nodes + pi.initial) * 2, 1.0)]);
        let tag = format!("|{corridor}|");
        let ev = Event::labels(corridor, &c, |l| l.contains(&tag));
        let rep = monte_carlo_chain(&c, &w, 10_000, h, 7, &[ev]);
        let f = rep.frequency(corridor).unwrap_or(f64::NAN);
        freqs.push((start, f, target));
    }
    let ok = (r.delta - 0.2).abs() <= 5e-3 && freqs.iter().all(|(_, f, t)| (f - t).abs() <= 0.02);
    let shown: Vec<String> = freqs.iter().map(|(s, f, t)| format!("{s}: {f:.4} (target {t})")).collect();
    check(ok, format!("δ {:.6} (target 0.2 ± 5e-3); witness corridor frequencies {}", r.delta, shown.join(", ")))
}

fn criterion_5() -> Outcome {
    let (m, pi) = builtin(BenchmarkId::Cancer);
    let v0 = fsc_value(&m, &pi, Horizon::Infinite, 1e-9).map_err(e)?.initial;
    let full = repair_unreachable(build_tsimc(&build_tsmc(&m, &pi), 1.0, 0.0).map_err(e)?).chain;
    let saturation = v0 - ipe_min(&full, Horizon::Infinite, 1e-9, false).map_err(e)?.0.values[0];
    let q = RobustnessQuery::new(m, pi, Variant::NonSticky, Threshold::Absolute(0.0), Horizon::Infinite);
    let grid: Vec<f64> = (1..=20).map(|k| 2.5 * k as f64).collect();
    let out = sweep(&q, &grid).map_err(e)?;
    let monotone = out.windows(2).all(|w| w[0].delta <= w[1].delta + q.eps_mbs);
    let first = out.iter().position(|r| r.saturated).map(|i| grid[i]);
    let consistent = out.iter().zip(&grid).all(|(r, &d)| r.saturated == (d >= saturation));
    let ok = (v0 - 98.53).abs() <= 0.05 && (saturation - 48.0).abs() <= 2.0 && monotone && consistent && first.is_some();
    check(
        ok,
        format!("nominal {v0:.4} (target 98.53 ± 0.05), δ reaches 1 at Δ = {saturation:.3} (target 48 ± 2), first saturated grid point {first:?}, monotone {monotone}"),
    )
}

fn criterion_6() -> Outcome {
    let (m, pi) = builtin(BenchmarkId::PartQcPolicy1);
    let nn = pi.n_nodes();
    let accept = pi.node_index("accept").ok_or("missing node")?;
    let failing = m.state_index("failing").ok_or("missing state")?;
    let mut mask = vec![false; m.n_states() * nn];
    mask[failing * nn + accept] = true;
    let rep = monte_carlo(&m, &pi, 10_000, 10, 7, &[Event { name: "failing-accept".into(), mask }]);
    let freq = rep.frequency("failing-accept").unwrap_or(f64::NAN);

    let grid = [0.001, 0.01, 0.1, 0.5];
    let mut curves = Vec::new();
    for id in [BenchmarkId::PartQcPolicy1, BenchmarkId::PartQcPolicy2] {
        let (m, pi) = builtin(id);
        let q = RobustnessQuery::new(m, pi, Variant::NonSticky, Threshold::Absolute(0.0), Horizon::Finite(10));
        curves.push(sweep(&q, &grid).map_err(e)?.iter().map(|r| r.delta).collect::<Vec<f64>>());
    }
    let saturates = curves.iter().all(|c| c[3] == 1.0);
    let dominates = curves[0].iter().zip(&curves[1]).all(|(a, b)| b >= a);
    let ok = (freq - 0.0099).abs() <= 0.003 && saturates && dominates;
    check(
        ok,
        format!("failing-accept frequency {freq:.4} (target 0.0099 ± 0.003), policy 1 δ {:?}, policy 2 δ {:?}", curves[0], curves[1]),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = common::rng(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(3..9);
        let h = rng.gen_range(1..=4);
        let c = common::random_interval_chain(&mut rng, n, 6);
        let exact = brute_force_min(&c, h).map_err(e)?;
        let v = ipe_min(&c, Horizon::Finite(h), 1e-12, false).map_err(e)?.0.values[0];
        worst = worst.max((exact - v).abs());
    }
    check(worst <= 1e-9, format!("max |oracle − ipe_min| over 200 instances = {worst:.3e}"))
}

/// Finite-horizon per-history minimum computed directly on the model: nature
/// picks the observation distribution independently at every (time, state,
/// node), enumerating all vertices of each interval polytope.
fn per_history_min(m: &Pomdp, pi: &Fsc, delta: f64, h: usize) -> f64 {
    let nn = pi.n_nodes();
    let mut v = vec![0.0; m.n_states() * nn];
    for _ in 0..h {
        let mut next = vec![0.0; v.len()];
        for s in 0..m.n_states() {
            for n in 0..nn {
                let a = pi.action[n];
                let mut acc = m.r(s, a);
                for s2 in 0..m.n_states() {
                    let t = m.t(s, a, s2);
                    if t == 0.0 {
                        continue;
                    }
                    let obs = m.support(a, s2);
                    let lo: Vec<f64> = obs.iter().map(|&o| (m.z(a, s2, o) - delta).max(0.0)).collect();
                    let hi: Vec<f64> = obs.iter().map(|&o| (m.z(a, s2, o) + delta).min(1.0)).collect();
                    let vals: Vec<f64> = obs.iter().map(|&o| v[s2 * nn + pi.next[n][o].unwrap()]).collect();
                    let best = permutations(obs.len())
                        .iter()
                        .map(|order| {
                            let mut p = lo.clone();
                            let mut left = 1.0 - lo.iter().sum::<f64>();
                            for &i in order {
                                let add = left.min(hi[i] - lo[i]);
                                p[i] += add;
                                left -= add;
                            }
                            p.iter().zip(&vals).map(|(a, b)| a * b).sum::<f64>()
                        })
                        .fold(f64::INFINITY, f64::min);
                    acc += m.discount * t * best;
                }
                next[s * nn + n] = acc;
            }
        }
        v = next;
    }
    (0..m.n_states()).map(|s| m.initial[s] * v[s * nn + pi.initial]).sum()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out
}

fn bench_query(id: BenchmarkId, variant: Variant, eta: f64) -> RobustnessQuery {
    let (m, pi) = builtin(id);
    let (m, h) = match id {
        BenchmarkId::ToyRover => (m.with_discount(1.0), Horizon::Finite(5)),
        BenchmarkId::RoverNav => (m.with_discount(1.0), Horizon::Finite(50)),
        BenchmarkId::PartQcPolicy1 | BenchmarkId::PartQcPolicy2 => (m, Horizon::Finite(10)),
        _ => (m, Horizon::Infinite),
    };
    let mut q = RobustnessQuery::new(m, pi, variant, Threshold::Relative(eta), h);
    q.eps_mbs = 1e-5;
    q.eps_p = Some(0.0);
    q
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // (a) monotonicity of the worst case in δ
    let mut rng = common::rng(81);
    let mut violations = 0;
    for _ in 0..50 {
        let m = common::random_pomdp(&mut rng, 3, 2, 2, 0.9, 0.0);
        let pi = common::random_fsc(&mut rng, &m, 2, false);
        let ts = build_tsmc(&m, &pi);
        let c = build_pmc(&m, &pi);
        let mut grid: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
        grid.sort_by(f64::total_cmp);
        let (mut prev_ns, mut prev_s) = (f64::INFINITY, f64::INFINITY);
        for d in grid {
            let chain = repair_unreachable(build_tsimc(&ts, d, 0.0).map_err(e)?).chain;
            let v = ipe_min(&chain, Horizon::Finite(4), 1e-12, false).map_err(e)?.0.values[0];
            let r = region_for(&m, d, 0.0).map_err(e)?;
            let cfg = PlaConfig { eps: 1e-9, ..PlaConfig::default() };
            let s = pla_min(&c, &r, Horizon::Finite(4), &cfg).map_err(e)?.value;
            violations += (v > prev_ns + 1e-12) as usize + (s > prev_s + 1e-9) as usize;
            prev_ns = v;
            prev_s = s;
        }
    }
    ok &= violations == 0;
    notes.push(format!("(a) monotonicity violations {violations}"));

    // (b) δ_NS ≤ δ_S on every benchmark
    let mut order = 0;
    let mut pairs = 0;
    for id in BenchmarkId::ALL {
        for eta in [0.05, 0.25, 0.45] {
            let ns = run_query(&bench_query(id, Variant::NonSticky, eta)).map_err(e)?;
            let s = run_query(&bench_query(id, Variant::Sticky, eta)).map_err(e)?;
            pairs += 1;
            order += (ns.delta <= s.delta + 1e-5) as usize;
        }
    }
    ok &= order == pairs;
    notes.push(format!("(b) ordering holds {order}/{pairs}"));

    // (c) samples never undercut the computed worst case
    let mut dominated = 0;
    let mut runs = 0;
    for id in BenchmarkId::ALL {
        let samples = match id {
            BenchmarkId::ToyRover | BenchmarkId::PartQcPolicy1 | BenchmarkId::PartQcPolicy2 | BenchmarkId::Tiger => 10_000,
            _ => 1_000,
        };
        let variants: &[Variant] = if id == BenchmarkId::ToyRover { &[Variant::NonSticky, Variant::Sticky] } else { &[Variant::NonSticky] };
        for &variant in variants {
            let mut q = bench_query(id, variant, 0.1);
            if variant == Variant::Sticky {
                q.eps_p = Some(0.01);
            }
            let (res, rep) = validate(&q, samples, 7).map_err(e)?;
            let tol = (q.eps_inner + 1e-9) / res.nominal_value.abs();
            let sampled = rep.eta_sampled_ns.unwrap_or(rep.eta_sampled_s).max(rep.eta_sampled_s);
            runs += 1;
            dominated += (sampled <= rep.eta_witness + tol) as usize;
        }
    }
    ok &= dominated == runs;
    notes.push(format!("(c) sampler dominance {dominated}/{runs}"));

    // (d) bisection on analytic monotone functions
    let mut rng = common::rng(84);
    let mut converged = 0;
    for i in 0..100 {
        let root: f64 = rng.gen_range(0.001..0.999);
        let eps = 1e-7;
        let out = if i % 2 == 0 {
            let k: f64 = rng.gen_range(0.1..10.0);
            mbs(move |d| Ok(k * (d - root)), 0.0, 1.0, eps)
        } else {
            mbs(move |d| Ok((d - root).powi(3)), 0.0, 1.0, eps)
        }
        .map_err(e)?;
        converged += ((out.delta - root).abs() <= eps) as usize;
    }
    ok &= converged == 100;
    notes.push(format!("(d) bisection converged {converged}/100"));

    // (e) per-history brute force against the node-based evaluation
    let mut rng = common::rng(85);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let no = rng.gen_range(2..=3);
        let m = common::random_pomdp(&mut rng, 3, 2, no, 0.9, 0.0);
        let pi = common::random_fsc(&mut rng, &m, 3, true);
        let d = rng.gen_range(0.0..0.6);
        let h = rng.gen_range(1..=4);
        let chain = repair_unreachable(build_tsimc(&build_tsmc(&m, &pi), d, 0.0).map_err(e)?).chain;
        let v = ipe_min(&chain, Horizon::Finite(h), 1e-12, false).map_err(e)?.0.values[0];
        worst = worst.max((v - per_history_min(&m, &pi, d, h)).abs());
    }
    ok &= worst <= 1e-9;
    notes.push(format!("(e) max per-history gap {worst:.2e}"));

    // (f) Tiger witness self-consistency
    let (m, pi) = builtin(BenchmarkId::Tiger);
    let ts = build_tsmc(&m, &pi);
    let mut gaps = Vec::new();
    for k in 0..9 {
        let eta = 0.05 + 0.1 * k as f64;
        let q = RobustnessQuery::new(m.clone(), pi.clone(), Variant::NonSticky, Threshold::Relative(eta), Horizon::Infinite);
        let r = run_query(&q).map_err(e)?;
        let chain = repair_unreachable(build_tsimc(&ts, r.delta, 0.0).map_err(e)?).chain;
        let (_, w) = ipe_min(&chain, Horizon::Infinite, 1e-10, true).map_err(e)?;
        let v = vi_schedule(&chain, &w, Horizon::Infinite, 1e-10).map_err(e)?;
        let eta_s = (r.nominal_value - v) / r.nominal_value.abs();
        let good = if r.saturated { eta_s <= eta + 1e-3 } else { (eta_s - eta).abs() <= 1e-3 };
        ok &= good;
        gaps.push(format!("{eta:.2}→{eta_s:.4}"));
    }
    notes.push(format!("(f) Tiger η→η_s [{}]", gaps.join(" ")));

    check(ok, notes.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, f64); 8] = [
        ("toy rover sticky worst case", criterion_1, 10.0),
        ("toy rover non-sticky worst case", criterion_2, 1.0),
        ("toy rover δ ordering", criterion_3, 60.0),
        ("rover navigation", criterion_4, 60.0),
        ("cancer", criterion_5, 120.0),
        ("part quality control", criterion_6, f64::INFINITY),
        ("oracle equivalence", criterion_7, 60.0),
        ("property suite", criterion_8, f64::INFINITY),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < *limit;
        let (ok, msg) = match out {
            Ok(m) => (in_time, m),
            Err(m) => (false, m),
        };
        let budget = if limit.is_finite() { format!(" (limit {limit} s)") } else { String::new() };
        println!("{} criterion {}: {name}: {msg} [{secs:.2} s{budget}]", if ok { "PASS" } else { "FAIL" }, i + 1);
        failed += !ok as usize;
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
