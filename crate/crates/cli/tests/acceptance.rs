//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p stopprofiler-cli --test acceptance`.
//!
//! Reference values come from oracles written here, independently of the
//! library code they check.

use std::collections::BTreeMap;
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{NaiveDate, NaiveTime};

use stopprofiler::clustering::{adjusted_rand_index, kmeans, kmedoids};
use stopprofiler::compare::{rank_correlation, spearman_rho, CompareError};
use stopprofiler::metrics::{
    band_distance_matrix, canonical_location_values, curve_euclidean_matrix, location_distance_matrix_with, reorder,
    GeoMode,
};
use stopprofiler::pipeline::{profile_rows, proportion_curves, DEFAULT_MIN_TOTAL};
use stopprofiler::profiles::{stop_diurnal_profiles, to_proportions, DiurnalProfile, ProfileError, HOURS};
use stopprofiler::render::{heatmap, HeatmapSpec, ImageFormat, RenderWarning, MID_GRAY};
use stopprofiler::rng::Pcg32;
use stopprofiler::synth::{generate, SynthConfig};
use stopprofiler::{Direction, DistanceMatrix, Measure, MetricKind, StopEvent};

const BIN: &str = env!("CARGO_BIN_EXE_stopprofiler");

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

/// Every matrix built by the suite passes through here.
#[derive(Default)]
struct MatrixAudit {
    checked: usize,
    violations: Vec<String>,
}

impl MatrixAudit {
    fn record(&mut self, tag: &str, m: &DistanceMatrix) {
        self.checked += 1;
        let n = m.len();
        for i in 0..n {
            if m.get(i, i) != 0.0 {
                self.violations.push(format!("{tag}: diagonal {i} = {}", m.get(i, i)));
            }
            for j in 0..n {
                let v = m.get(i, j);
                if v.to_bits() != m.get(j, i).to_bits() {
                    self.violations.push(format!("{tag}: asymmetric at ({i},{j})"));
                }
                if !(v >= 0.0) || !v.is_finite() {
                    self.violations.push(format!("{tag}: entry ({i},{j}) = {v}"));
                }
                if m.metric() == MetricKind::CurveBand && v > 1.0 {
                    self.violations.push(format!("{tag}: band entry ({i},{j}) = {v} > 1"));
                }
            }
        }
    }

    /// Checks a random reordering keeps the off-diagonal multiset.
    fn record_reorder(&mut self, tag: &str, m: &DistanceMatrix, rng: &mut Pcg32) {
        let mut perm: Vec<usize> = (0..m.len()).collect();
        rng.shuffle(&mut perm);
        let r = reorder(m, &perm).expect("valid permutation");
        self.record(tag, &r);
        let sorted = |d: &DistanceMatrix| {
            let mut v: Vec<u64> = Vec::new();
            for i in 0..d.len() {
                for j in 0..d.len() {
                    if i != j {
                        v.push(d.get(i, j).to_bits());
                    }
                }
            }
            v.sort_unstable();
            v
        };
        if sorted(m) != sorted(&r) {
            self.violations.push(format!("{tag}: reorder changed the off-diagonal multiset"));
        }
        for (a, &pa) in perm.iter().enumerate() {
            if r.labels()[a] != m.labels()[pa] {
                self.violations.push(format!("{tag}: reorder mislabeled row {a}"));
            }
        }
    }
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

/// Triple loop over (pair, reference curve, hour): count reference values
/// inside the pair's pointwise band, as an exact integer.
fn band_oracle_counts(curves: &[Vec<f64>]) -> Vec<Vec<u64>> {
    let n = curves.len();
    let mut counts = vec![vec![0u64; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for (h, curve) in curves.iter().enumerate() {
                if h == i || h == j {
                    continue;
                }
                for t in 0..curve.len() {
                    let lo = curves[i][t].min(curves[j][t]);
                    let hi = curves[i][t].max(curves[j][t]);
                    if lo <= curve[t] && curve[t] <= hi {
                        counts[i][j] += 1;
                    }
                }
            }
        }
    }
    counts
}

fn integer_curves(rng: &mut Pcg32, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..HOURS).map(|_| rng.below(12) as f64).collect())
        .collect()
}

fn band_oracle(audit: &mut MatrixAudit) -> Outcome {
    let start = Instant::now();
    let mut rng = Pcg32::new(2024);
    let mut mismatches = 0;
    let mut max_diff = 0.0f64;
    for instance in 0..200 {
        let n = 3 + instance % 10;
        let curves = integer_curves(&mut rng, n);
        let got = band_distance_matrix(&labels(n), &curves).expect("valid curves");
        audit.record("band-oracle", &got);
        let counts = band_oracle_counts(&curves);
        let denom = ((n - 2) * HOURS) as u64;
        for i in 0..n {
            for j in 0..n {
                // Same rational count/denom: the recovered numerator is the
                // oracle's integer and the quotient matches bit for bit.
                let expected = counts[i][j] as f64 / denom as f64;
                let numerator = (got.get(i, j) * denom as f64).round();
                if numerator != counts[i][j] as f64 || got.get(i, j).to_bits() != expected.to_bits() {
                    mismatches += 1;
                }
                max_diff = max_diff.max((got.get(i, j) - expected).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && max_diff <= 1e-15 && elapsed < Duration::from_secs(5),
        format!("200 instances, {mismatches} mismatching entries, max |diff| {max_diff:e}, {elapsed:.2?} (< 5s)"),
    )
}

fn band_invariance(audit: &mut MatrixAudit) -> Outcome {
    let mut rng = Pcg32::new(77);
    let mut worst = 0.0f64;
    for instance in 0..50 {
        let n = 3 + instance % 10;
        let curves: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..HOURS).map(|_| rng.next_f64() * 10.0).collect())
            .collect();
        let base = band_distance_matrix(&labels(n), &curves).expect("valid curves");
        audit.record("band-invariance", &base);
        for f in [|x: f64| x * x * x, |x: f64| 2.0 * x + 1.0] {
            let moved: Vec<Vec<f64>> = curves.iter().map(|c| c.iter().map(|&x| f(x)).collect()).collect();
            let m = band_distance_matrix(&labels(n), &moved).expect("valid curves");
            audit.record("band-invariance", &m);
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((m.get(i, j) - base.get(i, j)).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("50 instances x {{x^3, 2x+1}}, max |diff| {worst:e} (<= 1e-12)"))
}

fn symmetric_from_upper(upper: &[f64], n: usize, metric: MetricKind) -> DistanceMatrix {
    let mut v = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            v[i * n + j] = upper[k];
            v[j * n + i] = upper[k];
            k += 1;
        }
    }
    DistanceMatrix::new(labels(n), v, metric).expect("valid matrix")
}

/// Midrank by counting: #smaller + (#equal + 1) / 2.
fn brute_midranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn spearman(audit: &mut MatrixAudit) -> Outcome {
    let n = 10;
    let m = n * (n - 1) / 2;
    let mut rng = Pcg32::new(5);
    let mut worst_closed = 0.0f64;
    let mut worst_ties = 0.0f64;
    let mut tied_instances = 0;
    for _ in 0..100 {
        let a: Vec<f64> = (0..m).map(|_| rng.next_f64()).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.next_f64()).collect();
        let (da, db) = (
            symmetric_from_upper(&a, n, MetricKind::CurveEuclidean),
            symmetric_from_upper(&b, n, MetricKind::Geographic),
        );
        audit.record("spearman", &da);
        audit.record("spearman", &db);
        let rho = spearman_rho(&da, &db).expect("non-degenerate");
        let (ra, rb) = (brute_midranks(&a), brute_midranks(&b));
        let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
        let mf = m as f64;
        let closed = 1.0 - 6.0 * d2 / (mf * (mf * mf - 1.0));
        worst_closed = worst_closed.max((rho - closed).abs());

        // Same matrices quantized to a few levels, which forces ties.
        let qa: Vec<f64> = a.iter().map(|x| (x * 6.0).floor()).collect();
        let qb: Vec<f64> = b.iter().map(|x| (x * 4.0).floor()).collect();
        let (ta, tb) = (
            symmetric_from_upper(&qa, n, MetricKind::SeqNumber),
            symmetric_from_upper(&qb, n, MetricKind::TravelDistance),
        );
        audit.record("spearman-ties", &ta);
        audit.record("spearman-ties", &tb);
        let rho_t = spearman_rho(&ta, &tb).expect("non-degenerate");
        let oracle = brute_pearson(&brute_midranks(&qa), &brute_midranks(&qb));
        worst_ties = worst_ties.max((rho_t - oracle).abs());
        tied_instances += 1;
    }
    let known = rank_correlation(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]);
    outcome(
        worst_closed <= 1e-12 && worst_ties <= 1e-12 && known == Some(0.8),
        format!(
            "closed form max |diff| {worst_closed:e}; {tied_instances} tied instances max |diff| {worst_ties:e}; \
             (1,2,3,4) vs (1,3,2,4) = {known:?}"
        ),
    )
}

/// Results of the 100 seeded synth -> cluster runs, reused by later checks.
struct RecoveryRuns {
    kmeans_ari: Vec<f64>,
    kmedoids_ari: Vec<f64>,
    slowest: Duration,
    kmeans_histories: Vec<Vec<f64>>,
    kmedoids_histories: Vec<Vec<f64>>,
    cohorts: Vec<Vec<StopEvent>>,
}

fn recovery_runs(audit: &mut MatrixAudit) -> RecoveryRuns {
    let mut runs = RecoveryRuns {
        kmeans_ari: Vec::new(),
        kmedoids_ari: Vec::new(),
        slowest: Duration::ZERO,
        kmeans_histories: Vec::new(),
        kmedoids_histories: Vec::new(),
        cohorts: Vec::new(),
    };
    let mut rng = Pcg32::new(31);
    for seed in 0..100u64 {
        let config = SynthConfig {
            n_stops: 40,
            noise_scale: 0.1,
            n_weekdays: 45,
            seed,
            ..SynthConfig::default()
        };
        assert_eq!(config.archetypes.len(), 4);

        let start = Instant::now();
        let out = generate(&config).expect("valid config");
        let set = proportion_curves(&out.events, Measure::Boardings, DEFAULT_MIN_TOTAL).expect("eligible stops");
        let truth: Vec<&String> = set.labels.iter().map(|l| &out.ground_truth[l]).collect();
        let km = kmeans(&set.labels, &set.curves, 4, seed, 300).expect("kmeans");
        let km_ari = adjusted_rand_index(&km.assignment, &truth).expect("ari");
        runs.slowest = runs.slowest.max(start.elapsed());

        let start = Instant::now();
        let band = band_distance_matrix(&set.labels, &set.curves).expect("band");
        let kd = kmedoids(&band, 4, seed).expect("kmedoids");
        let kd_ari = adjusted_rand_index(&kd.assignment, &truth).expect("ari");
        runs.slowest = runs.slowest.max(start.elapsed());

        audit.record("recovery-band", &band);
        audit.record_reorder("recovery-band", &band, &mut rng);
        if seed < 10 {
            let eucl = curve_euclidean_matrix(&set.labels, &set.curves).expect("eucl");
            audit.record("recovery-eucl", &eucl);
            audit.record_reorder("recovery-eucl", &eucl, &mut rng);
            let infos = canonical_location_values(&out.events);
            let infos: Vec<_> = infos.into_values().collect();
            for kind in [MetricKind::SeqNumber, MetricKind::Geographic, MetricKind::TravelDistance] {
                for geo in [GeoMode::PlanarDegrees, GeoMode::HaversineMeters] {
                    let m = location_distance_matrix_with(&infos, kind, geo).expect("location");
                    audit.record("recovery-location", &m);
                    audit.record_reorder("recovery-location", &m, &mut rng);
                }
            }
        }

        runs.kmeans_ari.push(km_ari);
        runs.kmedoids_ari.push(kd_ari);
        runs.kmeans_histories.push(km.history);
        runs.kmedoids_histories.push(kd.history);
        runs.cohorts.push(out.events);
    }
    runs
}

fn recovery(runs: &RecoveryRuns) -> Outcome {
    let km = runs.kmeans_ari.iter().filter(|&&a| a >= 0.9).count();
    let kd = runs.kmedoids_ari.iter().filter(|&&a| a >= 0.8).count();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        km >= 95 && kd >= 90 && runs.slowest < Duration::from_secs(1),
        format!(
            "kmeans ARI>=0.9 in {km}/100 (need 95, worst {:.3}); kmedoids-band ARI>=0.8 in {kd}/100 (need 90, worst {:.3}); \
             slowest run {:.2?} (< 1s)",
            min(&runs.kmeans_ari),
            min(&runs.kmedoids_ari),
            runs.slowest
        ),
    )
}

fn monotonicity(runs: &RecoveryRuns) -> Outcome {
    let mut km_violations = 0;
    let mut kd_violations = 0;
    let mut histories = runs.kmeans_histories.len();
    for h in &runs.kmeans_histories {
        km_violations += h.windows(2).filter(|w| w[1] > w[0]).count();
    }
    for h in &runs.kmedoids_histories {
        kd_violations += h.windows(2).filter(|w| !(w[1] < w[0])).count();
    }
    // Unstructured point clouds as well, where Lloyd takes more steps.
    let mut rng = Pcg32::new(99);
    for seed in 0..100u64 {
        let n = 20 + (seed as usize % 30);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
        let r = kmeans(&labels(n), &pts, 5, seed, 300).expect("kmeans");
        km_violations += r.history.windows(2).filter(|w| w[1] > w[0]).count();
        histories += 1;
    }
    outcome(
        km_violations == 0 && kd_violations == 0,
        format!(
            "{histories} kmeans runs, {km_violations} increases; {} kmedoids runs, {kd_violations} non-decreasing swaps",
            runs.kmedoids_histories.len()
        ),
    )
}

fn matrix_invariants(audit: &MatrixAudit) -> Outcome {
    let shown: Vec<&String> = audit.violations.iter().take(3).collect();
    outcome(
        audit.violations.is_empty(),
        format!("{} matrices audited, {} violations {shown:?}", audit.checked, audit.violations.len()),
    )
}

fn conservation(runs: &RecoveryRuns) -> Outcome {
    let mut worst = 0.0f64;
    let mut total_mismatch = 0;
    let mut curves = 0;
    for events in &runs.cohorts {
        for measure in [Measure::Boardings, Measure::Alightings] {
            let profiles = stop_diurnal_profiles(events, measure);
            let cohort_total: i64 = events
                .iter()
                .map(|e| match measure {
                    Measure::Boardings => e.boardings,
                    Measure::Alightings => e.alightings,
                })
                .sum();
            let stop_total: u64 = profiles.values().map(|p| p.total as u64).sum();
            let hour_total: u64 = profiles.values().flat_map(|p| p.counts.iter()).map(|&c| c as u64).sum();
            if stop_total != cohort_total as u64 || hour_total != stop_total {
                total_mismatch += 1;
            }
            for p in profiles.values().filter(|p| p.total > 0.0) {
                let pp = to_proportions(p).expect("positive total");
                worst = worst.max((pp.proportions.iter().sum::<f64>() - 1.0).abs());
                curves += 1;
            }
        }
    }
    outcome(
        worst <= 1e-9 && total_mismatch == 0,
        format!(
            "{} cohorts x 2 measures: {total_mismatch} total mismatches; {curves} curves, max |sum - 1| {worst:e}",
            runs.cohorts.len()
        ),
    )
}

fn event(stop: &str, seq: i64, boardings: i64) -> StopEvent {
    StopEvent {
        route_id: "R".into(),
        direction: Direction::Inbound,
        variation_id: "V".into(),
        trip_id: format!("T{stop}"),
        stop_id: stop.into(),
        stop_name: stop.into(),
        service_date: NaiveDate::from_ymd_opt(2024, 3, 4).unwrap(),
        event_time: NaiveTime::from_hms_opt(8, 0, 0).unwrap(),
        boardings,
        alightings: 0,
        load: boardings,
        cum_distance: 100.0 * seq as f64,
        global_seq: seq,
        lat: 43.0,
        lon: -77.0,
    }
}

fn eligibility() -> Outcome {
    let events = vec![event("A", 1, 49), event("B", 2, 50), event("C", 3, 51)];
    let rows = profile_rows(&events, Measure::Boardings, 50.0, false).expect("profiles");
    let kept: Vec<&str> = rows.iter().map(|r| r.stop_id.as_str()).collect();
    outcome(kept == ["B", "C"], format!("totals 49/50/51, min_total 50 -> kept {kept:?}"))
}

fn bin(args: &[&str], threads: &str) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .env("STOPPROFILER_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let d = |name: &str| dir.path().join(name).display().to_string();
    let steps: Vec<(Vec<String>, String)> = vec![
        (vec!["synth", "--stops", "30", "--seed", "11", "--out", &d("s")], d("s/manifest.json")),
        (
            vec!["profile", "--events", &d("s/events.csv"), "--proportions", "--out", &d("p.csv")],
            d("p.csv.manifest.json"),
        ),
        (
            vec!["distmat", "--profiles", &d("p.csv"), "--metric", "band", "--out", &d("band.csv")],
            d("band.csv.manifest.json"),
        ),
        (
            vec!["distmat", "--events", &d("s/events.csv"), "--profiles", &d("p.csv"), "--metric", "geo", "--out", &d("geo.csv")],
            d("geo.csv.manifest.json"),
        ),
        (
            vec!["cluster", "--profiles", &d("p.csv"), "--algo", "kmeans", "--seed", "3", "--out", &d("km.csv")],
            d("km.csv.manifest.json"),
        ),
        (
            vec!["cluster", "--distmat", &d("band.csv"), "--algo", "kmedoids", "--out", &d("kd.csv")],
            d("kd.csv.manifest.json"),
        ),
        (
            vec!["compare", "--distmat", &d("band.csv"), "--distmat", &d("geo.csv"), "--out", &d("rho.csv")],
            d("rho.csv.manifest.json"),
        ),
        (
            vec!["render", "--distmat", &d("band.csv"), "--events", &d("s/events.csv"), "--order", "gseq", "--out", &d("band.pgm")],
            d("band.pgm.manifest.json"),
        ),
    ]
    .into_iter()
    .map(|(a, m)| (a.into_iter().map(String::from).collect(), m))
    .collect();

    let mut compared = 0;
    let mut failures: Vec<String> = Vec::new();
    for (args, manifest) in &steps {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = bin(&args, "4");
        if !first.status.success() {
            failures.push(format!("{} exited {:?}", args[0], first.status.code()));
            continue;
        }
        let text = fs::read_to_string(manifest).unwrap_or_default();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap_or_default();
        let outputs: Vec<String> = parsed["outputs"]
            .as_array()
            .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
            .unwrap_or_default();
        if outputs.is_empty() {
            failures.push(format!("{}: manifest lists no outputs", args[0]));
            continue;
        }
        let mut before: Vec<Vec<u8>> = outputs.iter().map(|p| fs::read(p).unwrap_or_default()).collect();
        before.push(text.into_bytes());
        for p in &outputs {
            let _ = fs::remove_file(p);
        }
        let again = bin(&["rerun", "--manifest", manifest], "0");
        if !again.status.success() {
            failures.push(format!("rerun of {} exited {:?}", args[0], again.status.code()));
            continue;
        }
        let mut after: Vec<Vec<u8>> = outputs.iter().map(|p| fs::read(p).unwrap_or_default()).collect();
        after.push(fs::read(manifest).unwrap_or_default());
        if before != after {
            failures.push(format!("{}: rerun output differs", args[0]));
        }
        compared += outputs.len();
    }
    outcome(
        failures.is_empty(),
        format!("{} commands re-run from manifests, {compared} output files byte-identical; failures {failures:?}", steps.len()),
    )
}

fn degenerate(audit: &mut MatrixAudit) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let mut rng = Pcg32::new(8);
    let mut pair_max = 0.0f64;
    for _ in 0..20 {
        let curves = integer_curves(&mut rng, 2);
        let m = band_distance_matrix(&labels(2), &curves).expect("two curves");
        audit.record("degenerate", &m);
        pair_max = pair_max.max(m.get(0, 1));
    }
    ok &= pair_max == 0.0;
    notes.push(format!("n=2 band max {pair_max}"));

    let constant = symmetric_from_upper(&[0.25; 10], 5, MetricKind::TravelDistance);
    audit.record("degenerate", &constant);
    let varied = symmetric_from_upper(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0], 5, MetricKind::SeqNumber);
    let rho = spearman_rho(&varied, &constant);
    ok &= rho == Err(CompareError::Degenerate(MetricKind::TravelDistance));
    notes.push(format!("constant rho {rho:?}"));

    let map = heatmap(&HeatmapSpec::new(constant, ImageFormat::Pgm)).expect("renders");
    let gray = (0..5).all(|i| (0..5).all(|j| map.levels[i * 5 + j] == if i == j { 0 } else { MID_GRAY }));
    ok &= gray && map.warning == Some(RenderWarning::Degenerate);
    notes.push(format!("heatmap mid-gray {gray}, warning {:?}", map.warning));

    let zero = DiurnalProfile::new("Z", Measure::Boardings, [0.0; HOURS]);
    let err = to_proportions(&zero);
    ok &= matches!(&err, Err(ProfileError::ZeroTotal { stops }) if stops == &["Z".to_string()]);
    notes.push(format!("zero total {:?}", err.map(|_| ())));

    outcome(ok, notes.join("; "))
}

fn main() {
    let mut audit = MatrixAudit::default();
    let runs = recovery_runs(&mut audit);
    let mut results: BTreeMap<usize, (&str, Outcome)> = BTreeMap::new();
    let mut add = |name, o| {
        results.insert(results.len(), (name, o));
    };
    add("band-oracle", band_oracle(&mut audit));
    add("band-invariance", band_invariance(&mut audit));
    add("spearman", spearman(&mut audit));
    add("clustering-recovery", recovery(&runs));
    add("monotonicity", monotonicity(&runs));
    add("normalization-conservation", conservation(&runs));
    add("eligibility-boundary", eligibility());
    add("cli-determinism", determinism());
    add("degenerate-handling", degenerate(&mut audit));
    // Last, so it covers every matrix built above.
    add("matrix-invariants", matrix_invariants(&audit));

    let mut failed = 0;
    for (name, o) in results.values() {
        println!("{} {name:<27} {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
