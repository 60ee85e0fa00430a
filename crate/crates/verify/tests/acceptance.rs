//! One PASS/FAIL line per acceptance criterion. Exits non-zero when any criterion fails.

use costlam_core::cost::{CostMonoid, CostTable};
use costlam_core::examples;
use costlam_core::name::Name;
use costlam_core::semantics::Fuel;
use costlam_core::source::Term;
use costlam_core::testgen::{
    check_cc_simulation, check_cc_simulation_up_to_env, check_commutation, check_cost, check_cps_simulation,
    check_cps_simulation_up_to_admin, check_regions, check_structure, check_trace_equality, check_types, check_vn_simulation, gen_case,
    Case, Check, GenConfig, Outcome,
};
use costlam_core::transform::label_init;
use costlam_core::Cost;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::{Duration, Instant};

const SEED: u64 = 7;
const MAX_SIZE: usize = 30;
const CORPUS: usize = 1000;
const COST_CASES: usize = 500;
const TYPE_CASES: usize = 500;
const REGION_CASES: usize = 300;
const MONOID_TRIPLES: usize = 10_000;

const GOLDEN_LIMIT: Duration = Duration::from_secs(1);
const COMMUTATION_LIMIT: Duration = Duration::from_secs(60);
const SUITE_LIMIT: Duration = Duration::from_secs(120);
const MONOID_LIMIT: Duration = Duration::from_secs(5);

struct Tally {
    pass: usize,
    fail: usize,
    inconclusive: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn of(cases: &[Case], results: &[Check]) -> Tally {
        let mut t = Tally { pass: 0, fail: 0, inconclusive: 0, first_failure: None };
        for (c, r) in cases.iter().zip(results) {
            match r {
                Ok(()) => t.pass += 1,
                Err(f) if f.outcome == Outcome::Inconclusive => t.inconclusive += 1,
                Err(f) => {
                    t.fail += 1;
                    if t.first_failure.is_none() {
                        t.first_failure = Some(format!("case {}: {} [{}] {}", c.index, c.term, f.check, f.detail.lines().next().unwrap_or("")));
                    }
                }
            }
        }
        t
    }

    fn clean(&self) -> bool {
        self.fail == 0 && self.inconclusive == 0
    }

    fn summary(&self) -> String {
        format!("{} pass, {} fail, {} inconclusive", self.pass, self.fail, self.inconclusive)
    }
}

fn corpus(n: usize) -> Vec<Case> {
    let cfg = GenConfig { seed: SEED, max_size: MAX_SIZE, ..GenConfig::default() };
    (0..n as u64).map(|i| gen_case(&cfg, i).expect("corpus generation")).collect()
}

fn run_all(cases: &[Case], check: impl Fn(&Case) -> Check + Sync) -> (Tally, Duration) {
    let start = Instant::now();
    let results: Vec<Check> = cases.par_iter().map(&check).collect();
    (Tally::of(cases, &results), start.elapsed())
}

struct Report {
    failed: bool,
}

impl Report {
    fn line(&mut self, n: usize, name: &str, ok: bool, detail: String) {
        println!("{} {n} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.failed |= !ok;
    }

    fn info(&self, detail: String) {
        println!("     {detail}");
    }
}

fn timed(d: Duration, limit: Duration) -> String {
    format!("{:.2}s, limit {}s", d.as_secs_f64(), limit.as_secs())
}

fn labelled(c: &Case) -> Term {
    label_init(&c.term).expect("generated terms are unlabelled")
}

fn main() {
    let fuel = Fuel::default();
    let mut report = Report { failed: false };
    let cases = corpus(CORPUS);
    println!("corpus: {CORPUS} typed terms, seed {SEED}, size <= {MAX_SIZE}");

    let start = Instant::now();
    let golden: Vec<(&str, Result<(), String>)> = examples::ALL.iter().map(|(n, f)| (*n, f())).collect();
    let d = start.elapsed();
    let bad: Vec<String> = golden.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    report.line(1, "golden examples", bad.is_empty() && d < GOLDEN_LIMIT, format!("{}/{} reproduced ({})", golden.len() - bad.len(), golden.len(), timed(d, GOLDEN_LIMIT)));
    for b in bad {
        report.info(b);
    }

    let (t, d) = run_all(&cases, |c| check_commutation(&c.term));
    report.line(2, "commutation", t.clean() && d < COMMUTATION_LIMIT, format!("{} ({})", t.summary(), timed(d, COMMUTATION_LIMIT)));
    if let Some(f) = t.first_failure {
        report.info(f);
    }

    let start = Instant::now();
    let subchecks: [(&str, fn(&Term, Fuel) -> Check); 4] = [
        ("cps simulation", check_cps_simulation),
        ("vn simulation", check_vn_simulation),
        ("cc simulation", check_cc_simulation),
        ("trace equality", check_trace_equality),
    ];
    let tallies: Vec<(&str, Tally)> = subchecks
        .iter()
        .map(|(name, f)| (*name, run_all(&cases, |c| f(&labelled(c), fuel)).0))
        .collect();
    let d = start.elapsed();
    let ok = tallies.iter().all(|(_, t)| t.clean()) && d < SUITE_LIMIT;
    let parts: Vec<String> = tallies.iter().map(|(n, t)| format!("{n} {}/{}", t.pass, CORPUS)).collect();
    report.line(3, "simulation", ok, format!("{} ({})", parts.join(", "), timed(d, SUITE_LIMIT)));
    for (n, t) in &tallies {
        if let Some(f) = &t.first_failure {
            report.info(format!("{n}: {f}"));
        }
    }
    let (admin, _) = run_all(&cases, |c| check_cps_simulation_up_to_admin(&labelled(c), fuel));
    let (env, _) = run_all(&cases, |c| check_cc_simulation_up_to_env(&labelled(c), fuel));
    report.info(format!("not a criterion: cps simulation after contracting administrative redexes: {}", admin.summary()));
    report.info(format!("not a criterion: cc simulation up to closure environment sharing: {}", env.summary()));

    let (t, d) = run_all(&cases[..COST_CASES], |c| check_cost(&c.term, fuel));
    report.line(4, "cost certification", t.clean() && d < SUITE_LIMIT, format!("{} ({})", t.summary(), timed(d, SUITE_LIMIT)));
    if let Some(f) = t.first_failure {
        report.info(f);
    }

    let (t, d) = run_all(&cases[..TYPE_CASES], |c| check_types(&c.ctx, &c.term, fuel));
    report.line(5, "type preservation", t.clean() && d < SUITE_LIMIT, format!("{} ({})", t.summary(), timed(d, SUITE_LIMIT)));
    if let Some(f) = t.first_failure {
        report.info(f);
    }

    let (t, d) = run_all(&cases[..REGION_CASES], |c| check_regions(&c.ctx, &c.term, fuel));
    report.line(6, "region safety", t.clean() && d < SUITE_LIMIT, format!("{} ({})", t.summary(), timed(d, SUITE_LIMIT)));
    if let Some(f) = t.first_failure {
        report.info(f);
    }

    let (t, d) = run_all(&cases, |c| check_structure(&c.term));
    report.line(7, "structural checks", t.clean(), format!("{} ({:.2}s)", t.summary(), d.as_secs_f64()));
    if let Some(f) = t.first_failure {
        report.info(f);
    }

    let start = Instant::now();
    let violations = monoid_and_additivity(MONOID_TRIPLES);
    let d = start.elapsed();
    report.line(8, "monoid laws and trace additivity", violations.is_empty() && d < MONOID_LIMIT, format!("{MONOID_TRIPLES} triples, {} violations ({})", violations.len(), timed(d, MONOID_LIMIT)));
    for v in violations.iter().take(3) {
        report.info(v.clone());
    }

    if report.failed {
        std::process::exit(1);
    }
}

/// Identity, associativity and commutativity of `Cost`, and `costof(a·b) = costof(a) ⊕ costof(b)`
/// for random label tables and traces.
fn monoid_and_additivity(n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = Vec::new();
    let labels: Vec<Name> = (0..8).map(|i| Name::new(&format!("l{i}"))).collect();
    for _ in 0..n {
        let [a, b, c]: [Cost; 3] = std::array::from_fn(|_| rng.gen_range(0..u64::MAX / 4));
        let z = Cost::zero();
        if a.plus(&z) != a || z.plus(&a) != a {
            out.push(format!("identity fails for {a}"));
        }
        if a.plus(&b).plus(&c) != a.plus(&b.plus(&c)) {
            out.push(format!("associativity fails for {a}, {b}, {c}"));
        }
        if a.plus(&b) != b.plus(&a) {
            out.push(format!("commutativity fails for {a}, {b}"));
        }

        let mut table: CostTable<Cost> = CostTable::new();
        let costs: Vec<u64> = labels.iter().map(|_| rng.gen_range(0..1_000_000)).collect();
        for (l, k) in labels.iter().zip(&costs) {
            table.insert(l.clone(), *k);
        }
        let trace = |rng: &mut ChaCha8Rng| -> Vec<usize> { (0..rng.gen_range(0..20)).map(|_| rng.gen_range(0..labels.len())).collect() };
        let (t1, t2) = (trace(&mut rng), trace(&mut rng));
        let names = |t: &[usize]| t.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>();
        let joined: Vec<usize> = t1.iter().chain(&t2).copied().collect();
        let whole = table.costof(&names(&joined)).expect("every label has a cost");
        let split = table.costof(&names(&t1)).expect("every label has a cost").plus(&table.costof(&names(&t2)).expect("every label has a cost"));
        let by_hand: u64 = joined.iter().map(|&i| costs[i]).sum();
        if whole != split || whole != by_hand {
            out.push(format!("additivity fails for traces {t1:?} and {t2:?}"));
        }
    }
    out
}
