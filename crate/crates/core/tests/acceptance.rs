//! One line per acceptance criterion. Runs without the libtest harness so
//! the lines always print; exits nonzero if any criterion fails.

use std::collections::{HashSet, VecDeque};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use edgecolor::abelian::{
    borrow_parity, degree_color_abelian, generates, Branch, OrbitPairing, Region,
};
use edgecolor::coloring::EdgeColoring;
use edgecolor::group::{
    build_torus_instance, make_marked_group, quotient_by_torsion, GeneratorSpec, SubgroupSpec,
    TorusInstance, VertexSet,
};
use edgecolor::line::{
    apply_plan, game_hypothesis, parity_game_solve, plan_code_transition, replay_moves, Code,
    LineError,
};
use edgecolor::oracle::{
    exact_chromatic_index, matching_parity_diagnostic, perfect_matching_exists,
    random_perfect_matching, verify_coloring,
};
use edgecolor::vizing::{color_theorem_d_plus_1, lift_through_quotient, project_witness, LiftMode};
use edgecolor::witness::build_grid_witness;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn inst(torsion: &[i64], rank: usize, gens: &[(&[i64], &[i64])], periods: &[u64]) -> TorusInstance {
    let specs: Vec<GeneratorSpec> = gens
        .iter()
        .map(|(t, v)| GeneratorSpec::new(t, v, 1))
        .collect();
    build_torus_instance(make_marked_group(torsion, rank, &specs).unwrap(), periods).unwrap()
}

fn z2(gens: &[[i64; 2]], periods: [u64; 2]) -> TorusInstance {
    let mut all: Vec<[i64; 2]> = Vec::new();
    for g in gens {
        all.push(*g);
        all.push([-g[0], -g[1]]);
    }
    let refs: Vec<(&[i64], &[i64])> = all.iter().map(|v| (&[][..], &v[..])).collect();
    inst(&[], 2, &refs, &periods)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Colors the instance through the dispatcher and checks it with the
/// verifier; returns (colors used, palette, elapsed).
fn dispatch(g: &TorusInstance, n: u32) -> Result<(usize, u32, Duration, Branch), String> {
    let start = Instant::now();
    let w = build_grid_witness(g, n).map_err(|e| format!("witness: {e}"))?;
    let out = degree_color_abelian(g, &w).map_err(|e| format!("coloring: {e}"))?;
    let elapsed = start.elapsed();
    let report = verify_coloring(g, &out.coloring);
    ensure(report.ok, || {
        format!("verifier: {:?}", report.first_conflict)
    })?;
    Ok((
        report.colors_used(),
        out.coloring.palette,
        elapsed,
        out.branch,
    ))
}

fn criterion_1() -> Outcome {
    let g = z2(&[[1, 0], [0, 1]], [24, 24]);
    let (used, palette, t, _) = dispatch(&g, 19)?;
    ensure(used == 4 && palette == 4, || {
        format!("used {used}, palette {palette}")
    })?;
    ensure(t < Duration::from_secs(5), || format!("took {t:?}"))?;
    let small = z2(&[[1, 0], [0, 1]], [6, 6]);
    let chi = exact_chromatic_index(&small, 64).map_err(|e| e.to_string())?;
    ensure(chi == 4, || format!("oracle chi' = {chi} on 6x6"))?;
    Ok(format!("24x24 palette 4 in {t:?}; oracle chi'(6x6) = 4"))
}

fn criterion_2() -> Outcome {
    let g = inst(&[], 1, &[(&[], &[1]), (&[], &[-1])], &[30]);
    let start = Instant::now();
    let w = build_grid_witness(&g, 5).map_err(|e| e.to_string())?;
    let out = color_theorem_d_plus_1(&g, &w).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    let report = verify_coloring(&g, &out.coloring);
    ensure(report.ok, || {
        format!("verifier: {:?}", report.first_conflict)
    })?;
    ensure(report.colors_used() == 3, || {
        format!("{} colors", report.colors_used())
    })?;
    let extra = out.extra_color.ok_or("no extra color")?;
    let v1 = &out.rainbow.as_ref().ok_or("no rainbow sets")?.sets[0];
    let mut violations = 0;
    let mut on_extra = 0;
    for (e, ed) in g.edges().iter().enumerate() {
        if out.coloring.colors[e] == extra {
            on_extra += 1;
            if !(v1.contains(ed.source) && v1.contains(ed.target)) {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, || {
        format!("{violations} color-3 edges leave V1")
    })?;
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!(
        "3 colors, {on_extra} color-3 edges all inside V1, {t:?}"
    ))
}

fn criterion_3() -> Outcome {
    let gens = [[1, 0], [0, 1], [1, 1]];
    let g = z2(&gens, [48, 48]);
    let (used, palette, t, _) = dispatch(&g, 41)?;
    ensure(used == 6 && palette == 6, || {
        format!("used {used}, palette {palette}")
    })?;
    let small = z2(&gens, [4, 4]);
    let chi = exact_chromatic_index(&small, 64).map_err(|e| e.to_string())?;
    ensure(chi == 6, || format!("oracle chi' = {chi} on 4x4"))?;
    Ok(format!("48x48 palette 6 in {t:?}; oracle chi'(4x4) = 6"))
}

fn criterion_4() -> Outcome {
    let cases: [(&[(&[i64], &[i64])], usize); 3] = [
        (
            &[(&[0], &[1]), (&[0], &[-1]), (&[1], &[2]), (&[1], &[-2])],
            4,
        ),
        (
            &[(&[0], &[1]), (&[0], &[-1]), (&[1], &[1]), (&[1], &[-1])],
            4,
        ),
        (&[(&[1], &[0]), (&[0], &[1]), (&[0], &[-1])], 3),
    ];
    let mut seen = Vec::new();
    for (gens, want) in cases {
        let g = inst(&[2], 1, gens, &[60]);
        let (used, palette, _, branch) = dispatch(&g, 5)?;
        ensure(branch == Branch::RankOneEven, || {
            format!("branch {branch:?}")
        })?;
        ensure(used == want && palette as usize == want, || {
            format!("{gens:?}: used {used}, palette {palette}, want {want}")
        })?;
        seen.push(used.to_string());
    }
    Ok(format!("palettes {} on (2)xZ, period 60", seen.join("/")))
}

fn obstruction_instance(period: u64) -> TorusInstance {
    inst(
        &[3],
        1,
        &[(&[0], &[1]), (&[0], &[-1]), (&[1], &[0]), (&[2], &[0])],
        &[period],
    )
}

fn criterion_5() -> Outcome {
    for p in [5u64, 7, 9] {
        let g = obstruction_instance(p);
        let m = perfect_matching_exists(&g).map_err(|e| e.to_string())?;
        ensure(!m.exists, || format!("period {p}: matching found"))?;
    }
    let g = obstruction_instance(15);
    let w = build_grid_witness(&g, 5).map_err(|e| e.to_string())?;
    let out = degree_color_abelian(&g, &w).map_err(|e| e.to_string())?;
    let report = verify_coloring(&g, &out.coloring);
    ensure(report.ok, || {
        format!("verifier: {:?}", report.first_conflict)
    })?;
    ensure(out.coloring.palette as usize == g.degree() + 1, || {
        format!("palette {} for degree {}", out.coloring.palette, g.degree())
    })?;
    ensure(!out.notes.is_empty(), || "no obstruction note".into())?;

    let mut checked = 0;
    let mut seed = 0u64;
    for p in [6u64, 8, 10, 12] {
        let g = obstruction_instance(p);
        for _ in 0..30 {
            seed += 1;
            let m = random_perfect_matching(&g, seed)
                .map_err(|e| e.to_string())?
                .ok_or_else(|| format!("period {p}: no matching"))?;
            let d = matching_parity_diagnostic(&g, &m, 2).map_err(|e| e.to_string())?;
            ensure(d.step_relation_holds, || {
                format!("period {p} seed {seed}: {:?}", d.violations)
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "no perfect matching at odd periods; auto palette {}; step relation on {checked} matchings",
        out.coloring.palette
    ))
}

/// Labelings reachable by flipping adjacent equal pairs.
fn game_reachable(start: &[u8], target: &[u8]) -> bool {
    let flip = |c: u8| if c == 5 { 6 } else { 5 };
    let mut seen: HashSet<Vec<u8>> = HashSet::from([start.to_vec()]);
    let mut queue = VecDeque::from([start.to_vec()]);
    while let Some(lab) = queue.pop_front() {
        if lab == target {
            return true;
        }
        for i in 0..lab.len() - 1 {
            if lab[i] == lab[i + 1] {
                let mut next = lab.clone();
                next[i] = flip(next[i]);
                next[i + 1] = flip(next[i + 1]);
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    false
}

fn criterion_6() -> Outcome {
    let mut total = 0;
    let mut solved = 0;
    for l in 1..=10usize {
        for mask in 0u32..(1 << (l + 1)) {
            let lab: Vec<u8> = (0..=l)
                .map(|i| if mask >> i & 1 == 1 { 6 } else { 5 })
                .collect();
            let mut target = lab.clone();
            target[0] = if target[0] == 5 { 6 } else { 5 };
            target[l] = if target[l] == 5 { 6 } else { 5 };
            let reachable = game_reachable(&lab, &target);
            let hyp = game_hypothesis(&lab);
            total += 1;
            match parity_game_solve(&lab) {
                Ok(moves) => {
                    let end = replay_moves(&lab, &moves);
                    ensure(end.as_deref() == Some(&target[..]), || {
                        format!("{lab:?}: replay {end:?}")
                    })?;
                    ensure(hyp && reachable, || {
                        format!("{lab:?}: solved but hyp {hyp}, bfs {reachable}")
                    })?;
                    solved += 1;
                }
                Err(e) => {
                    ensure(!hyp && !reachable, || {
                        format!("{lab:?}: {e} but hyp {hyp}, bfs {reachable}")
                    })?;
                }
            }
        }
    }
    Ok(format!(
        "{solved} of {total} labelings solvable, all agree with BFS"
    ))
}

/// Codes over `{5,6}` reachable by the single-step move at every `k`.
fn code_reachable(start: &[u8], n: usize) -> HashSet<Vec<u8>> {
    let b = start.len();
    let flip = |c: u8| if c == 5 { 6 } else { 5 };
    let dc = |c: &[u8], k: usize| {
        let k = k % (2 * b);
        if k < b {
            c[k]
        } else {
            flip(c[k - b])
        }
    };
    let mut seen: HashSet<Vec<u8>> = HashSet::from([start.to_vec()]);
    let mut queue = VecDeque::from([start.to_vec()]);
    while let Some(c) = queue.pop_front() {
        for k in 0..2 * b {
            if dc(&c, k) == dc(&c, k + n) {
                let mut next = c.clone();
                next[k % b] = flip(next[k % b]);
                next[(k + n) % b] = flip(next[(k + n) % b]);
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    seen
}

fn criterion_7() -> Outcome {
    let mut pairs = 0;
    let mut planned = 0;
    for b in [2usize, 4, 6, 8] {
        let codes: Vec<Vec<u8>> = (0u32..(1 << b))
            .map(|m| {
                (0..b)
                    .map(|i| if m >> i & 1 == 1 { 6 } else { 5 })
                    .collect()
            })
            .collect();
        let ns: Vec<usize> = (1..2 * b)
            .filter(|n| n % 2 == 1 && num_gcd(*n, b) == 1)
            .collect();
        for &n in &ns {
            for c in &codes {
                let reach = code_reachable(c, n);
                for t in &codes {
                    pairs += 1;
                    let odd = c.iter().zip(t).filter(|(x, y)| x != y).count() % 2 == 1;
                    let bfs = reach.contains(t);
                    let (code, target) = (Code::new(c.clone()), Code::new(t.clone()));
                    match plan_code_transition(&code, &target, n) {
                        Ok(plan) => {
                            let end = apply_plan(&code, &plan, n).map_err(|e| e.to_string())?;
                            ensure(end == target, || {
                                format!("b'={b} n'={n} {c:?}->{t:?}: replay ends at {end:?}")
                            })?;
                            ensure(!odd && bfs, || {
                                format!("b'={b} n'={n} {c:?}->{t:?}: planned, bfs {bfs}")
                            })?;
                            planned += 1;
                        }
                        Err(LineError::OddDifference { .. }) => {
                            ensure(odd && !bfs, || {
                                format!("b'={b} n'={n} {c:?}->{t:?}: odd, bfs {bfs}")
                            })?;
                        }
                        Err(e) => return Err(format!("b'={b} n'={n} {c:?}->{t:?}: {e}")),
                    }
                }
            }
        }
    }
    Ok(format!(
        "{planned} of {pairs} pairs transitioned, all agree with BFS"
    ))
}

fn num_gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}

/// Random run of one pipeline branch; `Ok(false)` when the drawn parameters
/// are not a valid input (no witness at that size).
fn random_run(rng: &mut ChaCha8Rng, kind: usize) -> Result<bool, String> {
    let check = |g: &TorusInstance, c: &EdgeColoring, bound: usize| -> Result<(), String> {
        let r = verify_coloring(g, c);
        ensure(r.ok, || format!("verifier: {:?}", r.first_conflict))?;
        ensure(r.colors_used() <= bound, || {
            format!("{} colors, bound {bound}", r.colors_used())
        })
    };
    match kind {
        // Free cycles with |S|+1 colors.
        0 => {
            let two = rng.gen_bool(0.5);
            let p = rng.gen_range(12..90u64);
            let g = if two {
                inst(
                    &[],
                    1,
                    &[(&[], &[1]), (&[], &[-1]), (&[], &[2]), (&[], &[-2])],
                    &[p],
                )
            } else {
                inst(&[], 1, &[(&[], &[1]), (&[], &[-1])], &[p])
            };
            let Ok(w) = build_grid_witness(&g, if two { 9 } else { 5 }) else {
                return Ok(false);
            };
            let out = color_theorem_d_plus_1(&g, &w).map_err(|e| format!("p={p}: {e}"))?;
            check(&g, &out.coloring, g.degree() + 1)?;
        }
        // Z² with two or three generator pairs.
        1 => {
            let sets: [&[[i64; 2]]; 3] = [
                &[[1, 0], [0, 1]],
                &[[1, 0], [0, 1], [2, 0]],
                &[[1, 0], [0, 1], [1, 1]],
            ];
            let which = rng.gen_range(0..3);
            let p = [24u64, 48][if which == 2 { 1 } else { rng.gen_range(0..2) }];
            let q = [24u64, 48][if which == 2 { 1 } else { rng.gen_range(0..2) }];
            let g = z2(sets[which], [p, q]);
            let n = if which == 2 { 41 } else { 19 };
            if build_grid_witness(&g, n).is_err() {
                return Ok(false);
            }
            let (used, _, _, _) = dispatch(&g, n)?;
            ensure(used == g.degree(), || {
                format!("{:?}: {used} colors", sets[which])
            })?;
        }
        // Rank one over Z/2.
        2 => {
            let sets: [&[(&[i64], &[i64])]; 3] = [
                &[(&[0], &[1]), (&[0], &[-1]), (&[1], &[2]), (&[1], &[-2])],
                &[(&[0], &[1]), (&[0], &[-1]), (&[1], &[1]), (&[1], &[-1])],
                &[(&[1], &[0]), (&[0], &[1]), (&[0], &[-1])],
            ];
            let gens = sets[rng.gen_range(0..3)];
            let p = 4 * rng.gen_range(10..25u64);
            let g = inst(&[2], 1, gens, &[p]);
            let Ok(w) = build_grid_witness(&g, 11) else {
                return Ok(false);
            };
            let out = degree_color_abelian(&g, &w).map_err(|e| format!("p={p}: {e}"))?;
            check(&g, &out.coloring, g.degree())?;
        }
        // Finite groups.
        3 => {
            let torsion: Vec<i64> = (0..rng.gen_range(1..3))
                .map(|_| rng.gen_range(2..7))
                .collect();
            let mut gens: Vec<Vec<i64>> = Vec::new();
            for _ in 0..rng.gen_range(1..4) {
                let t: Vec<i64> = torsion.iter().map(|&n| rng.gen_range(0..n)).collect();
                // Repeated elements would give parallel edges.
                if t.iter().all(|&x| x == 0) || gens.contains(&t) {
                    continue;
                }
                let neg: Vec<i64> = t.iter().zip(&torsion).map(|(x, n)| (n - x) % n).collect();
                gens.push(t.clone());
                if neg != t {
                    gens.push(neg);
                }
            }
            if gens.is_empty() {
                return Ok(false);
            }
            let refs: Vec<(&[i64], &[i64])> = gens.iter().map(|t| (&t[..], &[][..])).collect();
            let specs: Vec<GeneratorSpec> = refs
                .iter()
                .map(|(t, v)| GeneratorSpec::new(t, v, 1))
                .collect();
            let Ok(group) = make_marked_group(&torsion, 0, &specs) else {
                return Ok(false);
            };
            if !generates(&group) {
                return Ok(false);
            }
            let g = build_torus_instance(group, &[]).map_err(|e| e.to_string())?;
            let w = build_grid_witness(&g, 1).map_err(|e| e.to_string())?;
            let out =
                degree_color_abelian(&g, &w).map_err(|e| format!("{torsion:?} {gens:?}: {e}"))?;
            let bound = if out.branch == Branch::FiniteEven {
                g.degree()
            } else {
                g.degree() + 1
            };
            check(&g, &out.coloring, bound)?;
        }
        // Merge lifts over odd torsion.
        4 => {
            let n = [3i64, 5][rng.gen_range(0..2)];
            let mut gens: Vec<(Vec<i64>, Vec<i64>)> = vec![(vec![0], vec![1]), (vec![0], vec![-1])];
            let t = rng.gen_range(1..n);
            gens.push((vec![t], vec![0]));
            gens.push((vec![n - t], vec![0]));
            if rng.gen_bool(0.5) {
                let s = rng.gen_range(0..n);
                gens.push((vec![s], vec![1]));
                gens.push((vec![(n - s) % n], vec![-1]));
            }
            let refs: Vec<(&[i64], &[i64])> = gens.iter().map(|(t, v)| (&t[..], &v[..])).collect();
            let p = rng.gen_range(12..60u64);
            let g = inst(&[n], 1, &refs, &[p]);
            let q = quotient_by_torsion(&g, &SubgroupSpec::whole(g.group().invariants()))
                .map_err(|e| e.to_string())?;
            let Ok(w) = build_grid_witness(&g, 5) else {
                return Ok(false);
            };
            let Ok(qc) = color_theorem_d_plus_1(&q.instance, &project_witness(&q, &w)) else {
                return Ok(false);
            };
            let lift = lift_through_quotient(&g, &q, &qc.coloring, LiftMode::Cor1)
                .map_err(|e| e.to_string())?;
            ensure(lift.coloring.palette as usize == g.degree() + 1, || {
                format!("palette {} for |S| = {}", lift.coloring.palette, g.degree())
            })?;
            ensure(lift.eliminated_color.is_some(), || {
                "no color eliminated".into()
            })?;
            check(&g, &lift.coloring, g.degree() + 1)?;
        }
        // Borrow exchanges on a two-row strip.
        _ => {
            let len = rng.gen_range(10..30u64);
            let mid = rng.gen_range(4..(len as i64 - 3).min(12));
            let shift = rng.gen_bool(0.5);
            borrow_strip(len, mid, shift)?;
        }
    }
    Ok(true)
}

/// `Z/2 × Z/len`: horizontal edges follow a parity pattern outside the
/// columns `1..mid-1`, flipped past the band when `shift` is set; the
/// vertical involution edges all get color 3.
fn borrow_strip(len: u64, mid: i64, shift: bool) -> Result<(), String> {
    let g = inst(
        &[2],
        1,
        &[(&[0], &[1]), (&[0], &[-1]), (&[1], &[0])],
        &[len],
    );
    let slot = |inv: bool| {
        g.slots()
            .iter()
            .position(|s| g.group().pairs()[s.pair].involution == inv)
            .unwrap()
    };
    let (h, v) = (slot(false), slot(true));
    let col_of = |x: usize| g.coords(x)[1] as i64;
    let n = g.n_vertices();
    let region = Region::new(
        VertexSet::from_predicate(n, |x| col_of(x) <= mid),
        VertexSet::from_predicate(n, |x| col_of(x) == 0),
        VertexSet::from_predicate(n, |x| col_of(x) == mid),
    )
    .map_err(|e| e.to_string())?;
    let mut col = EdgeColoring::for_instance(&g, 4);
    for (e, ed) in g.edges().iter().enumerate() {
        if ed.slot == v {
            col.set(e, 3);
            continue;
        }
        let x = col_of(ed.source);
        if !(x >= 1 && x + 1 <= mid - 1) {
            let flip = shift && x >= mid - 1;
            col.set(e, 1 + ((x + flip as i64) % 2) as u32);
        }
    }
    // The wrap edge closes an odd cycle when len is odd and nothing is shifted.
    let pairing = OrbitPairing::uniform(&g, &col, v, 3, &region);
    let out = match borrow_parity(&g, &col, h, v, &region, &pairing, [1, 2]) {
        Ok(out) => out,
        Err(e) => return Err(format!("len {len} mid {mid} shift {shift}: {e}")),
    };
    for e in col.diff(&out) {
        let ed = g.edge(e);
        for x in [ed.source, ed.target] {
            ensure(!region.a.contains(x) && !region.b.contains(x), || {
                format!("len {len} mid {mid}: edge {e} meets A or B")
            })?;
        }
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut runs = [0usize; 6];
    let weights = [200usize, 120, 150, 250, 150, 130];
    for (kind, &want) in weights.iter().enumerate() {
        let mut attempts = 0;
        while runs[kind] < want {
            attempts += 1;
            if attempts > 20 * want {
                return Err(format!("kind {kind}: too few valid draws"));
            }
            if random_run(&mut rng, kind)? {
                runs[kind] += 1;
            }
        }
    }
    let total: usize = runs.iter().sum();
    ensure(total >= 1000, || format!("only {total} runs"))?;
    Ok(format!("{total} runs verified (per branch {runs:?})"))
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Outcome); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, f) in criteria {
        if filter.is_some_and(|k| k != i) {
            continue;
        }
        match f() {
            Ok(msg) => println!("criterion {i}: PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {i}: FAIL  {msg}");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
