//! Acceptance suite: one PASS/FAIL line per criterion, sub-items indented.
//!
//! Monte-Carlo seeds are fixed below; every run reproduces the same numbers.

use std::time::Instant;

use maxima_bc::criteria::{
    check_barndorff, check_bc1, check_bs, check_ratio, check_stepanov, remark_limit, KRule,
    RatioCheckConfig, RemarkConfig, SeriesRange, TrendClass, Verdict, VerdictConfig,
};
use maxima_bc::simulator::{
    mc_event_then_fail, mc_joint, mc_no_event, mc_run_prob, mc_staircase_prob,
    mc_window_union, simulate_paths, simulate_paths_with_windows, transform_trajectory,
};
use maxima_bc::{
    Distribution, EventFamily, IndexSequence, OracleEstimate, QueryWindow, SimulationConfig,
    ThresholdSequence, TransformFamily,
};
use maxima_bc_cli::{list_builtins, run_scenario};

const REPS: u64 = 1_000_000;
const SIGMAS: f64 = 3.0;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

struct Suite {
    failed: Vec<String>,
}

impl Suite {
    fn criterion(&mut self, id: &str, name: &str, start: Instant, items: &[Item]) {
        let pass = items.iter().all(|i| i.pass);
        println!(
            "criterion {id} {name}: {} ({:.2} s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for i in items {
            println!("    {} {}: {}", if i.pass { "pass" } else { "FAIL" }, i.name, i.detail);
        }
        for n in items.iter().flat_map(|i| &i.notes) {
            println!("    note: {n}");
        }
        if !pass {
            self.failed.push(id.to_string());
        }
    }
}

struct Item {
    name: String,
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

fn item(name: &str, pass: bool, detail: String) -> Item {
    Item {
        name: name.to_string(),
        pass,
        detail,
        notes: Vec::new(),
    }
}

fn uniform_power(level: f64) -> EventFamily {
    EventFamily::new(
        Distribution::uniform01(),
        ThresholdSequence::from_transform(TransformFamily::Power, level).unwrap(),
    )
}

fn pareto_scaled() -> EventFamily {
    let t = ThresholdSequence::new(
        maxima_bc::ThresholdSource::FromTransform {
            family: TransformFamily::scale_log_over_n(),
            level: 2.0,
        },
        2,
    )
    .unwrap();
    EventFamily::new(Distribution::pareto1(), t)
}

fn one_minus_inv_n() -> EventFamily {
    EventFamily::new(
        Distribution::uniform01(),
        ThresholdSequence::explicit(IndexSequence::new("1-1/n", |n| 1.0 - 1.0 / n as f64), 1)
            .unwrap(),
    )
}

fn table() -> EventFamily {
    EventFamily::new(
        Distribution::uniform01(),
        ThresholdSequence::listed(2, vec![0.5, 0.6, 0.7]).unwrap(),
    )
}

fn criterion_1(suite: &mut Suite) {
    let start = Instant::now();
    let mut worst = (0.0, 0.0, 0u64);
    for level in [0.5, 0.9, 0.99] {
        let fam = uniform_power(level);
        for n in [10u64, 100, 1000, 100_000] {
            let p = fam.log_p_event(n).unwrap().exp();
            let e = rel(p, level.powf((n as f64).ln()));
            if e > worst.0 {
                worst = (e, level, n);
            }
        }
    }
    let grid = item(
        "P(M_n <= x_n) = level^(ln n) on the 3 x 4 grid, 1e-12 relative",
        worst.0 <= 1e-12,
        format!("max rel err {:.3e} (level {}, n {})", worst.0, worst.1, worst.2),
    );
    let p = uniform_power(0.9).log_p_event(100).unwrap().exp();
    let hand = (0.9f64.ln() * 100f64.ln()).exp();
    let mut anchor = item(
        "level 0.9, n 100 within 1e-5 of the hand value e^(ln 0.9 ln 100)",
        (p - hand).abs() <= 1e-5,
        format!("{p:.12} vs hand {hand:.12}, diff {:.1e}", (p - hand).abs()),
    );
    anchor.notes.push(format!(
        "the quoted 0.61556 is the hand value truncated to five places; it sits {:.1e} from {hand:.7}",
        (0.61556 - hand).abs()
    ));
    let secs = start.elapsed().as_secs_f64();
    let time = item("runtime < 1 s", secs < 1.0, format!("{secs:.3} s"));
    suite.criterion("1", "power transform closed form", start, &[grid, anchor, time]);
}

fn criterion_2(suite: &mut Suite) {
    let start = Instant::now();
    let fam = pareto_scaled();
    let n = 100u64;
    let a = (n as f64).ln() / n as f64;
    let p = fam.log_p_event(n).unwrap().exp();
    let direct = (1.0 - a / 2.0).powi(n as i32);
    let closed = item(
        "P(M_100 <= 2/a_100) = (1 - a_n/2)^100 ~ 0.0973, 1e-12 relative",
        rel(p, direct) <= 1e-12 && (p - 0.0973).abs() < 5e-5,
        format!("{p:.12} vs {direct:.12}"),
    );
    let mut worst = 0.0f64;
    for n in [10u64, 100, 1000, 100_000] {
        let nf = n as f64;
        let t = (-nf * (nf.ln() / nf) / 2.0).exp();
        worst = worst.max(rel(t, nf.powf(-0.5)));
    }
    let pn = fam.log_p_event(100_000).unwrap().exp();
    let envelope = item(
        "e^(-n a_n / 2) = n^(-1/2) and P(A_n) sqrt(n) -> 1",
        worst <= 1e-12 && (pn * 100_000f64.sqrt() - 1.0).abs() < 0.01,
        format!("identity rel err {worst:.2e}; P(A_1e5) sqrt(1e5) = {:.6}", pn * 100_000f64.sqrt()),
    );
    let vc = VerdictConfig::default();
    let bc1 = check_bc1(&fam, SeriesRange::new(3, 100_000).unwrap(), &vc).unwrap();
    let s = &bc1.series[0];
    let bc1_item = item(
        "check_bc1 diverges",
        s.verdict == Verdict::Diverges,
        format!("{:?} by {:?}, fitted exponent {:?}", s.verdict, s.rule, s.fitted_exponent),
    );
    let ratio = check_ratio(
        &fam,
        &RatioCheckConfig {
            epsilon: None,
            k_max: 8,
            n_grid: vec![1000, 10_000, 100_000],
        },
        &vc,
    )
    .unwrap();
    let ratio_item = item(
        "check_ratio q_hat < 1 with verdict i.o. = 0",
        ratio.q_hat < 1.0 && ratio.verdict == Verdict::Converges && ratio.conclusion.is_some(),
        format!("q_hat {:.3e}, {:?}, {:?}", ratio.q_hat, ratio.verdict, ratio.conclusion),
    );
    let secs = start.elapsed().as_secs_f64();
    let time = item("runtime < 10 s", secs < 10.0, format!("{secs:.3} s"));
    suite.criterion(
        "2",
        "scaled Pareto closed form and verdicts",
        start,
        &[closed, envelope, bc1_item, ratio_item, time],
    );
}

struct Case {
    label: &'static str,
    fam: EventFamily,
    ns: Vec<u64>,
    unions: Vec<u64>,
}

fn grid() -> Vec<Case> {
    vec![
        Case {
            label: "table (0.5, 0.6, 0.7)",
            fam: table(),
            ns: vec![2],
            unions: vec![0, 2],
        },
        Case {
            label: "uniform 1 - 1/n",
            fam: one_minus_inv_n(),
            ns: vec![5, 10, 50],
            unions: vec![0, 2, 5],
        },
        Case {
            label: "pareto scale ln(n)/n",
            fam: pareto_scaled(),
            ns: vec![10, 100],
            unions: vec![0, 2, 5],
        },
    ]
}

struct Tally {
    checks: usize,
    misses: Vec<String>,
    worst_z: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            checks: 0,
            misses: Vec::new(),
            worst_z: 0.0,
        }
    }

    fn check(&mut self, what: String, est: OracleEstimate, p: f64) {
        self.checks += 1;
        let z = est.z_score(p);
        self.worst_z = self.worst_z.max(z.abs());
        if !est.agrees_with(p, SIGMAS) {
            self.misses.push(format!("{what}: closed {p:.6} mc {:.6} (z {z:.2})", est.point));
        }
    }
}

fn criterion_3_and_5(suite: &mut Suite) -> (Instant, Item) {
    let start = Instant::now();
    let mut seed = 0x5eed_0000u64;
    let mut next = || {
        seed += 1;
        seed
    };
    let mut closed = Tally::new();
    let mut stair = Tally::new();
    let mut partition = Tally::new();
    let mut notes = Vec::new();
    for case in grid() {
        let fam = &case.fam;
        for &n in &case.ns {
            let tag = |q: &str| format!("{} n={n} {q}", case.label);
            for k in 0..=2u64 {
                let p = fam.prob_run(n, k).unwrap().exp();
                closed.check(tag(&format!("run k={k}")), mc_run_prob(fam, n, k, REPS, next()).unwrap(), p);
            }
            let f = fam.prob_run_factorized(n, 2).unwrap().exp();
            stair.check(tag("staircase k=2"), mc_staircase_prob(fam, n, 2, REPS, next()).unwrap(), f);
            let p = fam.prob_event_then_fail(n).unwrap().exp();
            closed.check(tag("event then fail"), mc_event_then_fail(fam, n, REPS, next()).unwrap(), p);
            for k in 1..=2u64 {
                let p = fam.prob_joint(n, k).unwrap().exp();
                closed.check(tag(&format!("joint k={k}")), mc_joint(fam, n, k, REPS, next()).unwrap(), p);
            }
            for &big_k in &case.unions {
                let u = fam.union_window(n, big_k).unwrap();
                closed.check(
                    tag(&format!("union K={big_k}")),
                    mc_window_union(fam, n, big_k, REPS, next()).unwrap(),
                    u,
                );
                // union + P(no event) = 1: the no-event frequency must sit at 1 - union
                partition.check(
                    tag(&format!("1 - union K={big_k}")),
                    mc_no_event(fam, n, big_k, REPS, next()).unwrap(),
                    1.0 - u,
                );
            }
        }
        if case.unions.len() < 3 {
            notes.push(format!(
                "{}: K = 5 needs x_7, past the end of the three-value table",
                case.label
            ));
        }
    }
    let summary = |t: &Tally| {
        let mut s = format!("{} checks at {REPS} reps, worst |z| {:.2}", t.checks, t.worst_z);
        for m in &t.misses {
            s.push_str(&format!("; MISS {m}"));
        }
        s
    };
    let mut eq = item(
        "closed forms (run k=0..2, event-then-fail, joint k=1,2, union) vs Monte-Carlo within 3 sigma",
        closed.misses.is_empty(),
        summary(&closed),
    );
    eq.notes = notes;
    let stair_item = item(
        "factorized run k=2 vs staircase Monte-Carlo within 3 sigma",
        stair.misses.is_empty(),
        summary(&stair),
    );
    let t = table();
    let exact = t.prob_run(2, 2).unwrap().exp();
    let fact = t.prob_run_factorized(2, 2).unwrap().exp();
    let mut hand = item(
        "hand value prob_run(n=2, k=2) = 0.0077",
        (exact - 0.0077).abs() <= 5e-5,
        format!("prob_run = {exact:.6} (exact 357/5000); prob_run_factorized = {fact:.6}"),
    );
    hand.notes.push(
        "0.0077 is the single-product expression, i.e. P(x_2 < M_2 <= x_3 < M_3 <= x_4, M_4 <= x_4); \
         the run event {M_2 > x_2, M_3 > x_3, M_4 <= x_4} has probability 0.0714, confirmed by the \
         Monte-Carlo oracle above and by exact rational arithmetic"
            .into(),
    );
    let secs = start.elapsed().as_secs_f64();
    let time = item("runtime < 2 min (criteria 3 and 5)", secs < 120.0, format!("{secs:.1} s"));
    let part = item(
        "union_window + P(no A_j in window) = 1 within 3 sigma",
        partition.misses.is_empty(),
        summary(&partition),
    );
    suite.criterion("3", "oracle equivalence", start, &[eq, stair_item, hand, time]);
    (start, part)
}

fn criterion_4(suite: &mut Suite) {
    let start = Instant::now();
    let fam = uniform_power(0.9);
    let rule = KRule::Certified {
        tail_tol: 1e-6,
        k_cap: 1000,
        probe_k: 8,
    };
    let t = remark_limit(&fam, &[1000, 10_000, 100_000], rule, &RemarkConfig::default()).unwrap();
    let slope = t.slope.unwrap_or(f64::NAN);
    let target = 0.9f64.ln();
    let slope_item = item(
        "log-log slope of S_n within 0.02 of ln 0.9, DecaysToZero",
        (slope - target).abs() <= 0.02 && t.classification == TrendClass::DecaysToZero,
        format!("slope {slope:.5} vs {target:.5}, {:?}", t.classification),
    );
    let p0 = &t.s_values[0];
    let share = (p0.s - p0.head) / p0.s;
    let mut dom = item(
        "k >= 1 terms below 5% of S_n at n = 1e3",
        share < 0.05,
        format!("share {share:.5} with certified K = {}", p0.k_window),
    );
    let wide = fam.union_window(1000, 1000).unwrap();
    dom.notes.push(format!(
        "with a fixed window K = 1000 the exact run terms give S_1000 = {wide:.5} and a k >= 1 share of {:.3}; \
         the certified K bounds only the factorized tail",
        (wide - p0.head) / wide
    ));
    let n = 100_000u64;
    let cfg = SimulationConfig {
        distribution: Distribution::uniform01(),
        n_max: n,
        paths: 1000,
        master_seed: 41,
        record_grid: vec![n],
        workers: None,
    };
    let b = simulate_paths(&cfg).unwrap();
    let tb = transform_trajectory(&b, &TransformFamily::Power).unwrap();
    let median = tb.summary()[0].median;
    let p = 0.9f64.powf((n as f64).ln());
    let med = item(
        "simulated median of M_n^(n/ln n) at n = 1e5 exceeds 0.9",
        median > 0.9 && p < 0.5,
        format!("median {median:.5} over 1000 paths; P(<= 0.9) = {p:.4}"),
    );
    let secs = start.elapsed().as_secs_f64();
    let time = item("runtime < 2 min", secs < 120.0, format!("{secs:.1} s"));
    suite.criterion("4", "remark trend", start, &[slope_item, dom, med, time]);
}

fn criterion_6(suite: &mut Suite) {
    let start = Instant::now();
    let mut items = Vec::new();
    for b in list_builtins() {
        let cfg = b.config();
        let r = cfg.resolve().unwrap();
        let spec = cfg.checkers.as_ref().unwrap();
        let rc = RatioCheckConfig {
            epsilon: spec.epsilon,
            k_max: spec.k_max,
            n_grid: r.n_grid.clone(),
        };
        let rep = check_ratio(&r.family, &rc, &spec.verdict).unwrap();
        if rep.q_hat + rep.epsilon >= 1.0 {
            items.push(item(b.name, true, "not certified; nothing to check".into()));
            continue;
        }
        let n = rep.bound_n;
        let mut worst = (f64::INFINITY, 0u64);
        for big_k in 0..=spec.k_max {
            let m = rep.bound_value - r.family.union_window(n, big_k).unwrap();
            if m < worst.0 {
                worst = (m, big_k);
            }
        }
        let q = rep.q_hat + rep.epsilon;
        let head = r.family.log_p_event(n).unwrap().exp();
        let first = r.family.prob_run(n, 1).unwrap().exp();
        let full = head + first / (1.0 - q);
        let full_margin = full - r.family.union_window(n, spec.k_max).unwrap();
        let mut it = item(
            b.name,
            worst.0 >= -1e-9,
            format!(
                "n = {n}, q+eps = {q:.3e}: bound {:.9} - union = {:.3e} at K = {} (worst over K <= {})",
                rep.bound_value, worst.0, worst.1, spec.k_max
            ),
        );
        it.notes.push(format!(
            "{}: P(A_n) + P(A_n^c A_(n+1))/(1-q-eps) - union(K={}) = {full_margin:.3e}",
            b.name, spec.k_max
        ));
        items.push(it);
    }
    if let Some(first) = items.first_mut() {
        first.notes.push(
            "the bound's factor (q+eps)/(1-q-eps) omits the k = 1 term itself, so any K >= 1 with \
             P(A_n^c A_(n+1)) > 1e-9 violates it; the full geometric factor 1/(1-q-eps) still misses \
             the exact k >= 2 run terms, whose consecutive ratios approach 1"
                .into(),
        );
    }
    suite.criterion("6", "geometric bound validity", start, &items);
}

fn criterion_7(suite: &mut Suite) {
    let start = Instant::now();
    let families = [
        ("power 0.9", uniform_power(0.9)),
        ("pareto scale", pareto_scaled()),
        ("1 - 1/n", one_minus_inv_n()),
    ];
    let mut items = Vec::new();

    let mut worst_exact = (0.0f64, String::new());
    let mut worst_fact = 0.0f64;
    for (name, fam) in &families {
        for n in [10u64, 100, 1000, 10_000] {
            for k in 1..=5u64 {
                let r = fam.run_ratio(n, k).unwrap();
                let e = (fam.prob_run(n, k + 1).unwrap() - fam.prob_run(n, k).unwrap()).exp();
                let d = rel(e, r);
                if d > worst_exact.0 {
                    worst_exact = (d, format!("{name} n={n} k={k}: {e:.6} vs {r:.3e}"));
                }
                let f = (fam.prob_run_factorized(n, k + 1).unwrap()
                    - fam.prob_run_factorized(n, k).unwrap())
                .exp();
                worst_fact = worst_fact.max(rel(f, r));
            }
        }
    }
    let mut ratio = item(
        "ratio consistency exp(d log prob_run) vs run_ratio, 1e-9 relative",
        worst_exact.0 <= 1e-9,
        format!("max rel err {:.3e} ({})", worst_exact.0, worst_exact.1),
    );
    ratio.notes.push(format!(
        "run_ratio is the ratio of consecutive factorized (staircase) terms; against those it agrees \
         to {worst_fact:.2e}. The exact run probabilities are not a product of per-step factors for k >= 2"
    ));
    items.push(ratio);

    let mut worst_id = 0.0f64;
    let mut stepanov_same = true;
    let vc = VerdictConfig::default();
    for (_, fam) in &families {
        for n in 3..=2000u64 {
            let direct = fam.log_p_event(n).unwrap().exp() - fam.prob_joint(n, 1).unwrap().exp();
            worst_id = worst_id.max(rel(direct, fam.prob_event_then_fail(n).unwrap().exp()));
        }
        let range = SeriesRange::new(3, 5000).unwrap();
        let st = check_stepanov(fam, 1, range, &vc).unwrap();
        let bn = check_barndorff(fam, range, &vc).unwrap();
        stepanov_same &= st.series[2].terms == bn.series[0].terms;
    }
    items.push(item(
        "P(A_n) - P(A_n A_(n+1)) = P(A_n A_(n+1)^c), 1e-12 relative, n = 3..2000",
        worst_id <= 1e-12 && stepanov_same,
        format!("max rel err {worst_id:.3e}; third three-series terms identical to the two-event series: {stepanov_same}"),
    ));

    let mut same = true;
    for (_, fam) in &families {
        let range = SeriesRange::new(3, 20_000).unwrap();
        let a = check_bc1(fam, range, &vc).unwrap();
        let b = check_bs(fam, 0, range, &vc).unwrap();
        same &= a.series[0].terms == b.series[0].terms
            && a.series[0].partial_sums == b.series[0].partial_sums
            && a.series[0].verdict == b.series[0].verdict;
    }
    items.push(item("check_bs(m = 0) equals check_bc1", same, format!("terms, partial sums and verdicts equal: {same}")));

    let mut worst_q = 0.0f64;
    for d in [
        Distribution::uniform01(),
        Distribution::pareto1(),
        Distribution::exponential(1.7).unwrap(),
    ] {
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            worst_q = worst_q.max(rel(d.cdf(d.quantile(u).unwrap()), u));
            let x = d.quantile(u).unwrap() * 1.001 + 1e-3;
            if d.cdf(x) < 1.0 {
                worst_q = worst_q.max(rel(d.quantile(d.cdf(x)).unwrap(), x));
            }
        }
    }
    items.push(item(
        "quantile/cdf round trips, 1e-12 relative",
        worst_q <= 1e-12,
        format!("max rel err {worst_q:.3e}"),
    ));

    let grid: Vec<u64> = (1..=500).collect();
    let mut monotone = true;
    for d in [Distribution::uniform01(), Distribution::pareto1()] {
        let cfg = SimulationConfig {
            distribution: d,
            n_max: 500,
            paths: 2000,
            master_seed: 77,
            record_grid: grid.clone(),
            workers: None,
        };
        let b = simulate_paths(&cfg).unwrap();
        for p in 0..b.paths() {
            let path = b.path(p);
            monotone &= path.windows(2).all(|w| w[0] <= w[1]) && path[0] >= d.left_edge();
        }
    }
    items.push(item("trajectory monotonicity", monotone, format!("2 x 2000 paths of length 500: {monotone}")));

    let fam = one_minus_inv_n();
    let windows = [QueryWindow { start: 20, len: 5 }];
    let runs: Vec<_> = [Some(1), Some(2), Some(5), None]
        .into_iter()
        .map(|workers| {
            let cfg = SimulationConfig {
                distribution: Distribution::uniform01(),
                n_max: 300,
                paths: 5000,
                master_seed: 2024,
                record_grid: vec![1, 30, 300],
                workers,
            };
            simulate_paths_with_windows(&cfg, Some(&fam), &windows).unwrap()
        })
        .collect();
    let sims_equal = runs.windows(2).all(|w| w[0] == w[1]);
    let mut reports_equal = true;
    for b in list_builtins().iter().take(2) {
        let mut cfg = b.config();
        if let Some(s) = cfg.simulation.as_mut() {
            s.paths = s.paths.min(200);
            s.n_max = s.n_max.min(1000);
            s.record_grid.retain(|&g| g <= 1000);
            s.windows.retain(|w| w.start + w.len <= 1000);
        }
        let mut a = run_scenario(&cfg).unwrap();
        cfg.simulation.as_mut().unwrap().workers = Some(3);
        let mut c = run_scenario(&cfg).unwrap();
        a.wall_clock_seconds = 0.0;
        c.wall_clock_seconds = 0.0;
        c.scenario.simulation.as_mut().unwrap().workers = None;
        reports_equal &= a == c;
    }
    items.push(item(
        "bit-exact determinism under fixed seeds across worker counts",
        sims_equal && reports_equal,
        format!("trajectories equal for 1/2/5/default workers: {sims_equal}; scenario reports equal: {reports_equal}"),
    ));
    suite.criterion("7", "property suite", start, &items);
}

fn main() {
    let mut suite = Suite { failed: Vec::new() };
    let start = Instant::now();
    criterion_1(&mut suite);
    criterion_2(&mut suite);
    let (t5, part) = criterion_3_and_5(&mut suite);
    criterion_4(&mut suite);
    suite.criterion("5", "partition identity", t5, &[part]);
    criterion_6(&mut suite);
    criterion_7(&mut suite);
    println!(
        "acceptance: {} of 7 criteria failed [{}] in {:.1} s",
        suite.failed.len(),
        suite.failed.join(", "),
        start.elapsed().as_secs_f64()
    );
    if !suite.failed.is_empty() {
        std::process::exit(1);
    }
}
