//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line and then
//! asserts the criterion.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::{Duration, Instant};
use tracedist::finite_field::FieldCtx;
use tracedist::haar_oracle::verify_combinatorial;
use tracedist::poly::IntRational;
use tracedist::repro::{figure1, figure2, figure_field};
use tracedist::rmt_moments::{
    check_bounds, clt_defect, double_factorial, factorial, moment_sl, moment_so, moment_sp,
    mult_one,
};
use tracedist::short_sums::{sum_product_check, GofConfig};
use tracedist::trace_functions::{
    birch_all, general_exp_sum_all, hyperelliptic_all, hyperelliptic_point_count,
    hypergeometric_all, kloosterman_all, kummer_all, verify_weil, Method, TraceTable,
};
use tracedist::{FqElem, GroupKind};

fn report(n: u32, pass: bool, elapsed: Duration, failures: &[String]) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!(
        "criterion {n}: {status} ({:.2}s, {} failing checks)",
        elapsed.as_secs_f64(),
        failures.len()
    );
    for f in failures.iter().take(60) {
        println!("    {f}");
    }
    if failures.len() > 60 {
        println!("    ... {} more", failures.len() - 60);
    }
}

fn field(p: u64) -> Arc<FieldCtx> {
    Arc::new(FieldCtx::new(p, 1, None).unwrap())
}

fn rational(s: &str) -> IntRational {
    IntRational::parse(s).unwrap()
}

#[test]
fn criterion_1_exact_identities() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in 2..=6u32 {
        for k in 0..=n {
            if moment_sl(n, k, k) != factorial(k) {
                failures.push(format!("moment_sl({n},{k},{k}) != {k}!"));
            }
        }
        for k in 0..n {
            for r in 0..n {
                if k != r && !moment_sl(n, k, r).is_zero() {
                    failures.push(format!("moment_sl({n},{k},{r}) != 0"));
                }
            }
        }
    }
    for n in 1..=8u32 {
        for k in 0..=2 * n + 1 {
            let v = moment_sp(2 * n, k);
            if k % 2 == 1 && !v.is_zero() {
                failures.push(format!("moment_sp({},{k}) = {v}, expected 0", 2 * n));
            }
            if k % 2 == 0 && k <= n && v != double_factorial(k as i64 - 1) {
                failures.push(format!(
                    "moment_sp({},{k}) = {v}, expected {}",
                    2 * n,
                    double_factorial(k as i64 - 1)
                ));
            }
        }
    }
    for n in 3..=9u32 {
        for k in (0..=n / 2).step_by(2) {
            let v = moment_so(n, k);
            if v != double_factorial(k as i64 - 1) {
                failures.push(format!(
                    "moment_so({n},{k}) = {v}, expected {}",
                    double_factorial(k as i64 - 1)
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(5) {
        failures.push(format!("runtime {elapsed:?} > 5s"));
    }
    report(1, failures.is_empty(), elapsed, &failures);
    assert!(failures.is_empty());
}

#[test]
fn criterion_2_high_order_bounds() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in 2..=5u32 {
        for k in 0..=14u32 {
            for r in 0..=14u32 {
                let m = moment_sl(n, k, r);
                if &m * &m > factorial(k) * factorial(r) {
                    failures.push(format!("SL({n}) ({k},{r}): {m}^2 > {k}!{r}!"));
                }
            }
        }
    }
    // self-dual moments are compared with the real Gaussian moment: (k−1)!! for even
    // k and 0 for odd k
    let gaussian = |k: u32| {
        if k.is_multiple_of(2) {
            double_factorial(k as i64 - 1)
        } else {
            BigUint::zero()
        }
    };
    for n in 1..=5u32 {
        for k in 0..=14u32 {
            let m = moment_sp(2 * n, k);
            if m > gaussian(k) {
                failures.push(format!("Sp({}) k={k}: {m} > {}", 2 * n, gaussian(k)));
            }
        }
    }
    for n in 3..=5u32 {
        for k in 0..=14u32 {
            let m = moment_so(n, k);
            if m > gaussian(k) {
                failures.push(format!("SO({n}) k={k}: {m} > {}", gaussian(k)));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(30) {
        failures.push(format!("runtime {elapsed:?} > 30s"));
    }
    report(2, failures.is_empty(), elapsed, &failures);
    assert!(failures.is_empty());
}

#[test]
fn criterion_3_monte_carlo_agreement() {
    let start = Instant::now();
    let groups = [
        GroupKind::SpecialLinear(2),
        GroupKind::SpecialLinear(3),
        GroupKind::Symplectic(2),
        GroupKind::Symplectic(4),
        GroupKind::SpecialOrthogonal(3),
        GroupKind::SpecialOrthogonal(5),
        GroupKind::SpecialOrthogonal(4),
        GroupKind::SpecialOrthogonal(6),
    ];
    let rep = verify_combinatorial(&groups, 6, 100_000, 42).unwrap();
    let mut failures: Vec<String> = rep
        .rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| {
            format!(
                "{} ({},{}): exact {} vs {:.4} ± {:.4} (z = {:.2})",
                r.group, r.k, r.r, r.exact, r.mean, r.stderr, r.z
            )
        })
        .collect();
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        failures.push(format!("runtime {elapsed:?} > 300s"));
    }
    let worst = rep.rows.iter().map(|r| r.z).fold(0.0, f64::max);
    println!("    {} rows, largest z-score {worst:.2}", rep.rows.len());
    report(3, failures.is_empty(), elapsed, &failures);
    assert!(failures.is_empty());
}

#[test]
fn criterion_4_model_clt_and_bounds() {
    let start = Instant::now();
    let groups = [
        GroupKind::SpecialLinear(2),
        GroupKind::SpecialLinear(3),
        GroupKind::SpecialLinear(4),
        GroupKind::Symplectic(2),
        GroupKind::Symplectic(4),
        GroupKind::SpecialOrthogonal(3),
        GroupKind::SpecialOrthogonal(4),
        GroupKind::SpecialOrthogonal(5),
        GroupKind::CyclicKummer(2),
        GroupKind::CyclicKummer(3),
        GroupKind::CyclicKummer(4),
        GroupKind::UnitCircle,
    ];
    let mut failures = Vec::new();
    for &g in &groups {
        for k in 0..=3u32 {
            for r in 0..=3u32 {
                for h in [100u64, 1_000, 10_000] {
                    let d = clt_defect(g, k, r, h).unwrap();
                    let bound = 5.0 * ((k + r) * (k + r)) as f64 / h as f64;
                    if d > bound {
                        failures.push(format!("defect {g} ({k},{r}) H={h}: {d:.3e} > {bound:.3e}"));
                    }
                }
            }
        }
    }
    for &g in &groups {
        for n in 1..=4u32 {
            for h in [1u64, 2, 3, 5, 10, 20, 50, 100] {
                let b = check_bounds(g, n, h).unwrap();
                if !b.pass {
                    failures.push(format!(
                        "bound {g} N={n} H={h}: {} > {} [{}]",
                        b.moment, b.bound, b.bound_kind
                    ));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        failures.push(format!("runtime {elapsed:?} > 60s"));
    }
    report(4, failures.is_empty(), elapsed, &failures);
    assert!(failures.is_empty());
}

fn weil_families(ctx: &Arc<FieldCtx>) -> Vec<TraceTable> {
    let mut v = vec![
        kloosterman_all(ctx, 2, Method::Fast).unwrap(),
        kloosterman_all(ctx, 3, Method::Fast).unwrap(),
        birch_all(ctx, Method::Fast).unwrap(),
        general_exp_sum_all(
            ctx,
            &rational("X"),
            &rational("1"),
            &rational("X^3+2*X"),
            None,
            None,
        )
        .unwrap(),
        general_exp_sum_all(
            ctx,
            &rational("X^3+X"),
            &rational("1"),
            &rational("0"),
            None,
            None,
        )
        .unwrap(),
        general_exp_sum_all(
            ctx,
            &rational("X"),
            &rational("X+1"),
            &rational("1/X"),
            Some((2, 1)),
            None,
        )
        .unwrap(),
        kummer_all(ctx, 2, 1, &rational("X^2+1")).unwrap(),
        kummer_all(ctx, ctx.q() - 1, 1, &rational("X")).unwrap(),
        hyperelliptic_all(ctx, &rational("X^4+3*X+1")).unwrap(),
        hypergeometric_all(ctx, &[(1, 0), (1, 0)], &[(2, 1)], Method::Fast).unwrap(),
        hypergeometric_all(ctx, &[(2, 1), (1, 0)], &[], Method::Fast).unwrap(),
    ];
    if (ctx.q() - 1).is_multiple_of(3) {
        v.push(kummer_all(ctx, 3, 1, &rational("X^3-X")).unwrap());
    }
    v
}

#[test]
fn criterion_5_trace_function_oracles() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for p in [11u64, 101] {
        let ctx = field(p);
        for n in [2u32, 3] {
            let a = kloosterman_all(&ctx, n, Method::Fast).unwrap();
            let b = kloosterman_all(&ctx, n, Method::BruteForce).unwrap();
            let d = a
                .values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            if d > 1e-8 {
                failures.push(format!("Kl_{n} p={p}: DFT vs brute force {d:.2e}"));
            }
        }
    }
    for p in [5u64, 7, 31, 53, 101] {
        let ctx = field(p);
        for f in ["X^4+3*X+1", "X^2+1", "X^2-1"] {
            let fi = rational(f);
            let Ok(t) = hyperelliptic_all(&ctx, &fi) else {
                continue;
            };
            let sq = (p as f64).sqrt();
            for z in ctx.elements() {
                if t.is_singular(z) {
                    continue;
                }
                let count = hyperelliptic_point_count(&ctx, &fi, z).unwrap() as i64;
                let a = t.value(z).re * sq;
                if (a - a.round()).abs() > 1e-9 || a.round() as i64 != p as i64 + 1 - count {
                    failures.push(format!(
                        "hyperelliptic {f} p={p} z={}: {a} vs {}",
                        z.index(),
                        p as i64 + 1 - count
                    ));
                }
            }
        }
    }
    for p in [101u64, 1009, 7927] {
        let ctx = field(p);
        for t in weil_families(&ctx) {
            let w = verify_weil(&t);
            if !w.pass {
                failures.push(format!(
                    "Weil {} p={p}: max |t| = {} > rank {}",
                    t.family, w.max_abs, w.rank
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(120) {
        failures.push(format!("runtime {elapsed:?} > 120s"));
    }
    report(5, failures.is_empty(), elapsed, &failures);
    assert!(failures.is_empty());
}

/// mult_one for Sp(2) by order (Catalan numbers at even orders).
fn sp2_expected(order: u32) -> u64 {
    [1, 0, 1, 0, 2][order as usize]
}

/// mult_one for SL(3) with k + r ≤ 4: invariants of V^{⊗k} ⊗ V*^{⊗r}.
fn sl3_expected(k: u32, r: u32) -> u64 {
    match (k, r) {
        (0, 0) | (1, 1) | (3, 0) | (0, 3) => 1,
        (2, 2) => 2,
        _ => 0,
    }
}

/// Exponent patterns (k_i, r_i) with k_i + r_i ≥ 1 and total at most 4, over `m` shifts.
fn patterns(m: usize) -> Vec<Vec<(u32, u32)>> {
    let singles: Vec<(u32, u32)> = (0..=4u32)
        .flat_map(|k| (0..=4 - k).map(move |r| (k, r)))
        .filter(|&(k, r)| k + r >= 1)
        .collect();
    let mut out: Vec<Vec<(u32, u32)>> = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|p| {
                singles.iter().filter_map(move |&s| {
                    let mut q = p.clone();
                    q.push(s);
                    (q.iter().map(|(k, r)| k + r).sum::<u32>() <= 4).then_some(q)
                })
            })
            .collect();
    }
    out
}

#[test]
fn criterion_6_sum_product_decay() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut shift_sets: Vec<Vec<u64>> = Vec::new();
    for m in 1..=3usize {
        let mut s: Vec<u64> = Vec::new();
        while s.len() < m {
            let a = rng.random_range(0..1009u64);
            if !s.contains(&a) {
                s.push(a);
            }
        }
        shift_sets.push(s);
    }
    let mut worst: f64 = 0.0;
    for p in [1009u64, 4001, 7927, 15013] {
        let ctx = field(p);
        for n in [2u32, 3] {
            let t = kloosterman_all(&ctx, n, Method::Fast).unwrap();
            for shifts in &shift_sets {
                let elems: Vec<FqElem> = shifts.iter().map(|&a| ctx.elem(a).unwrap()).collect();
                for pat in patterns(shifts.len()) {
                    let k: Vec<u32> = pat.iter().map(|x| x.0).collect();
                    let r: Vec<u32> = pat.iter().map(|x| x.1).collect();
                    let rep = sum_product_check(&t, &elems, &k, &r).unwrap();
                    let expected: u64 = pat
                        .iter()
                        .map(|&(ki, ri)| {
                            if n == 2 {
                                sp2_expected(ki + ri)
                            } else {
                                sl3_expected(ki, ri)
                            }
                        })
                        .product();
                    let from_mult: BigUint = pat
                        .iter()
                        .map(|&(ki, ri)| mult_one(t.group, ki, ri))
                        .product();
                    if rep.rhs != BigUint::from(expected) || rep.rhs != from_mult {
                        failures.push(format!(
                            "Kl_{n} p={p} {pat:?}: rhs {} expected {expected}",
                            rep.rhs
                        ));
                    }
                    let scaled = rep.gap * (p as f64).sqrt();
                    worst = worst.max(scaled);
                    if scaled > 50.0 {
                        failures.push(format!(
                            "Kl_{n} p={p} shifts {shifts:?} {pat:?}: gap·√q = {scaled:.2}"
                        ));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(180) {
        failures.push(format!("runtime {elapsed:?} > 180s"));
    }
    println!("    max gap·√q = {worst:.2}");
    report(6, failures.is_empty(), elapsed, &failures);
    assert!(failures.is_empty());
}

#[test]
fn criterion_7_figure_reproduction() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let ctx = figure_field().unwrap();
    let config = GofConfig::default();
    for s in figure2(&ctx, &config).unwrap() {
        println!(
            "    Kl_2 H={}: KS {:.4}, max |Im| {:.2e}",
            s.h, s.gof.ks_real, s.gof.max_abs_imag
        );
        if s.gof.ks_real > 0.05 {
            failures.push(format!("Kl_2 H={}: KS {:.4} > 0.05", s.h, s.gof.ks_real));
        }
        if s.gof.max_abs_imag > 1e-9 {
            failures.push(format!(
                "Kl_2 H={}: max |Im| {:.2e} > 1e-9",
                s.h, s.gof.max_abs_imag
            ));
        }
    }
    let fig1 = figure1(&ctx, &config).unwrap();
    let s = fig1.iter().find(|s| s.h == 1000).unwrap();
    let c = s.gof.covariance_emp;
    println!(
        "    character H=1000: covariance {c:?}, rectangle discrepancy {:.4}",
        s.gof.rect_discrepancy
    );
    for i in 0..2 {
        for j in 0..2 {
            let target = if i == j { 0.5 } else { 0.0 };
            if (c[i][j] - target).abs() > 0.1 {
                failures.push(format!(
                    "character H=1000: covariance[{i}][{j}] = {:.4}, target {target}",
                    c[i][j]
                ));
            }
        }
    }
    if s.gof.rect_discrepancy > 0.05 {
        failures.push(format!(
            "character H=1000: rectangle discrepancy {:.4} > 0.05",
            s.gof.rect_discrepancy
        ));
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(180) {
        failures.push(format!("runtime {elapsed:?} > 180s"));
    }
    report(7, failures.is_empty(), elapsed, &failures);
    assert!(failures.is_empty());
}
