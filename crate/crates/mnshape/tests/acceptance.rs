//! Acceptance suite: every criterion below is asserted at its stated
//! tolerance and prints one [PASS]/[FAIL] line per sub-check.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use mnshape::experiments::{rms_argmin, run_even_table, run_scattered_table, Mode, RunConfig};
use mnshape::geometry::degree_from_delta;
use mnshape::mn::{bessel_k0, predict_c, ProblemParams, SearchConfig};
use mnshape::rbf::{assemble, rms_error, sinc_target, solve, KernelSpec};
use mnshape::{with_precision, Dec, PrecisionContext, XReal};
use std::time::Instant;

fn dec(s: &str) -> Dec {
    s.parse().unwrap()
}

fn paper_params(delta: &str) -> ProblemParams {
    ProblemParams::new(1, dec("-1"), dec("1"), dec("5"), dec(delta), dec("1"), None).unwrap()
}

fn grid(values: &[i128]) -> Vec<Dec> {
    values.iter().map(|&v| Dec::from_int(v)).collect()
}

fn even_cfg(delta: &str, c_grid: &[i128], n_t: u32) -> RunConfig {
    RunConfig {
        params: paper_params(delta),
        c_grid: grid(c_grid),
        mode: Mode::EvenSimplex,
        domain: (dec("0"), dec("5")),
        n_t,
        seed: 0,
        digits: 220,
    }
}

struct Checks {
    name: &'static str,
    lines: Vec<String>,
    ok: bool,
}

impl Checks {
    fn new(name: &'static str) -> Self {
        Checks {
            name,
            lines: Vec::new(),
            ok: true,
        }
    }

    fn check(&mut self, pass: bool, detail: String) {
        let tag = if pass { "[PASS]" } else { "[FAIL]" };
        self.lines.push(format!("{tag} {}: {detail}", self.name));
        self.ok &= pass;
    }

    fn finish(self) {
        let verdict = if self.ok { "[PASS]" } else { "[FAIL]" };
        let mut out = self.lines.join("\n");
        out.push_str(&format!("\n{verdict} {} overall", self.name));
        println!("{out}");
        assert!(self.ok, "{} failed; see printed checks", self.name);
    }
}

fn log10(x: &XReal, ctx: &PrecisionContext) -> f64 {
    (&x.ln() / &ctx.ln10()).to_f64()
}

// Criterion 1: the direct prediction returns c_star = 60 +/- 1e-3 for every
// delta in {0.36, 0.32, 0.28, 0.24, 0.20}, each prediction under 1 second.
#[test]
fn criterion_1_direct_prediction() {
    let mut c = Checks::new("criterion 1 (direct prediction)");
    let ctx = with_precision(220).unwrap();
    for d in ["0.36", "0.32", "0.28", "0.24", "0.20"] {
        let p = paper_params(d);
        let start = Instant::now();
        let r = predict_c(&p, &SearchConfig::default(), &ctx).unwrap();
        let elapsed = start.elapsed();
        let got = r.c_star.to_f64();
        c.check(
            (got - 60.0).abs() <= 1e-3,
            format!("delta={d}: c_star={got:.6} (want 60 +/- 1e-3)"),
        );
        c.check(
            elapsed.as_secs_f64() < 1.0,
            format!("delta={d}: runtime {:.3}s (< 1s)", elapsed.as_secs_f64()),
        );
    }
    c.finish();
}

// Criterion 2: the delta = 0.32 table over c in {20,...,100}: RMS argmin at
// c = 60, RMS(60) within two decades of 4.7e-13, COND(60) within three
// decades of 9.4e47, node counts (6,8,11,14,16,16,16,16,16), all inside
// 5 minutes at <= 300 digits.
#[test]
fn criterion_2_even_table_delta_032() {
    let mut c = Checks::new("criterion 2 (table at delta=0.32)");
    let start = Instant::now();
    let cfg = even_cfg("0.32", &[20, 30, 40, 50, 60, 70, 80, 90, 100], 150);
    let rows = run_even_table(&cfg).unwrap();
    let elapsed = start.elapsed();
    let rows: Vec<_> = rows.into_iter().map(|r| r.unwrap()).collect();
    let ctx = with_precision(220).unwrap();

    let argmin = rows
        .iter()
        .min_by(|a, b| a.rms.partial_cmp(&b.rms).unwrap())
        .unwrap()
        .c;
    c.check(
        argmin == Dec::from_int(60),
        format!("RMS argmin c={argmin} (want 60)"),
    );
    let at60 = rows.iter().find(|r| r.c == Dec::from_int(60)).unwrap();
    let rms_dec = log10(&at60.rms, &ctx) - (4.7e-13f64).log10();
    c.check(
        rms_dec.abs() <= 2.0,
        format!(
            "RMS(60)={} vs 4.7e-13 ({:+.2} decades, within 2)",
            at60.rms.to_sci(2),
            rms_dec
        ),
    );
    let cond_dec = log10(&at60.cond, &ctx) - (9.4e47f64).log10();
    c.check(
        cond_dec.abs() <= 3.0,
        format!(
            "COND(60)={} vs 9.4e47 ({:+.2} decades, within 3)",
            at60.cond.to_sci(2),
            cond_dec
        ),
    );
    let nd: Vec<u32> = rows.iter().map(|r| r.n_d).collect();
    let want = vec![6u32, 8, 11, 14, 16, 16, 16, 16, 16];
    c.check(nd == want, format!("N_d column {nd:?} (want {want:?})"));
    c.check(
        rows.iter().all(|r| r.digits_used <= 300),
        format!(
            "max digits used {} (<= 300)",
            rows.iter().map(|r| r.digits_used).max().unwrap()
        ),
    );
    c.check(
        elapsed.as_secs_f64() < 300.0,
        format!("runtime {:.1}s (< 5 min)", elapsed.as_secs_f64()),
    );
    c.finish();
}

// Criterion 3: across delta in {0.44, 0.40, 0.36, 0.32, 0.28, 0.24, 0.20}
// the RMS argmin over the published c grid is 60 every time, and RMS(60)
// decreases monotonically as delta decreases.
#[test]
fn criterion_3_even_table_trend() {
    let mut c = Checks::new("criterion 3 (trend over delta)");
    let mut rms60: Vec<(String, XReal)> = Vec::new();
    for (d, n_t) in [
        ("0.44", 50),
        ("0.40", 150),
        ("0.36", 150),
        ("0.32", 150),
        ("0.28", 150),
        ("0.24", 150),
        ("0.20", 150),
    ] {
        let cfg = even_cfg(d, &[20, 30, 40, 50, 60, 70, 80, 90, 100], n_t);
        let rows = run_even_table(&cfg).unwrap();
        let rows: Vec<_> = rows.into_iter().map(|r| r.unwrap()).collect();
        let argmin = rows
            .iter()
            .min_by(|a, b| a.rms.partial_cmp(&b.rms).unwrap())
            .unwrap()
            .c;
        c.check(
            argmin == Dec::from_int(60),
            format!("delta={d}: RMS argmin c={argmin} (want 60)"),
        );
        let at60 = rows.iter().find(|r| r.c == Dec::from_int(60)).unwrap();
        rms60.push((d.to_string(), at60.rms.clone()));
    }
    for w in rms60.windows(2) {
        let (d_hi, r_hi) = &w[0];
        let (d_lo, r_lo) = &w[1];
        c.check(
            r_lo < r_hi,
            format!(
                "RMS(60) at delta={d_lo} is {} < {} at delta={d_hi}",
                r_lo.to_sci(2),
                r_hi.to_sci(2)
            ),
        );
    }
    c.finish();
}

// Criterion 4: scattered setting at delta = 0.20 with five seeds; the RMS
// argmin over {20,30,40,48,50,52,54,56,60,70} lies in [48, 60] for at least
// four of the five seeds. Exact RMS values are draw-dependent by design.
#[test]
fn criterion_4_scattered_argmin_majority() {
    let mut c = Checks::new("criterion 4 (scattered argmin)");
    let mut hits = 0;
    for seed in 1u64..=5 {
        let cfg = RunConfig {
            params: paper_params("0.20"),
            c_grid: grid(&[20, 30, 40, 48, 50, 52, 54, 56, 60, 70]),
            mode: Mode::Scattered,
            domain: (dec("0"), dec("5")),
            n_t: 80,
            seed,
            digits: 220,
        };
        let rows = run_scattered_table(&cfg).unwrap();
        let argmin = rms_argmin(&rows).unwrap();
        let inside = argmin >= Dec::from_int(48) && argmin <= Dec::from_int(60);
        hits += inside as u32;
        c.check(
            true,
            format!(
                "seed={seed}: argmin c={argmin} ({})",
                if inside { "inside [48,60]" } else { "outside [48,60]" }
            ),
        );
    }
    c.check(hits >= 4, format!("{hits}/5 seeds inside [48,60] (need >= 4)"));
    c.finish();
}

// Criterion 5: failure regime at delta = 0.12: measured RMS argmin over
// {30,...,110} is >= 70, and the predictor flags reliable=false for
// delta <= 0.12.
#[test]
fn criterion_5_failure_regime() {
    let mut c = Checks::new("criterion 5 (failure regime)");
    let cfg = even_cfg("0.12", &[30, 40, 50, 60, 70, 80, 90, 100, 110], 150);
    let rows = run_even_table(&cfg).unwrap();
    let argmin = rms_argmin(&rows).unwrap();
    c.check(
        argmin >= Dec::from_int(70),
        format!("measured RMS argmin c={argmin} (want >= 70)"),
    );
    let ctx = with_precision(220).unwrap();
    for d in ["0.12", "0.06"] {
        let r = predict_c(&paper_params(d), &SearchConfig::default(), &ctx).unwrap();
        c.check(
            !r.reliable,
            format!(
                "delta={d}: reliable={} flat_bottom_width={:.2} (want reliable=false)",
                r.reliable, r.flat_bottom_width
            ),
        );
    }
    c.finish();
}

// Criterion 6: the node-degree rule reproduces every published node count
// of the delta = 0.44 and delta = 0.20 tables exactly.
#[test]
fn criterion_6_node_count_oracle() {
    let mut c = Checks::new("criterion 6 (node counts)");
    let cases = [
        ("0.44", vec![4u32, 6, 8, 10, 12, 12, 12, 12, 12]),
        ("0.20", vec![9, 13, 17, 21, 25, 25, 25, 25, 25]),
    ];
    for (d, want) in cases {
        let p = paper_params(d);
        let got: Vec<u32> = (20..=100)
            .step_by(10)
            .map(|cv| degree_from_delta(&Dec::from_int(cv), &p).unwrap() + 1)
            .collect();
        c.check(
            got == want,
            format!("delta={d}: N_d {got:?} (want {want:?})"),
        );
    }
    c.finish();
}

// Criterion 7: numerical kernels. K0(1) against an independent series
// oracle to 1e-12; interpolation exactness at the centers; solve results
// identical to 2 significant figures under +80-digit escalation; N <= 4
// systems against Cramer brute force to 10^(-digits+20).
#[test]
fn criterion_7_numerical_kernels() {
    let mut checks = Checks::new("criterion 7 (numerical kernels)");

    // independent oracle: 30 terms of the ascending series at 50 digits,
    // built from scratch on raw XReal arithmetic
    let ctx = with_precision(50).unwrap();
    let k0_oracle = {
        let x = ctx.from_u32(1);
        let q = &(&x * &x) / &ctx.from_u32(4);
        let mut term = ctx.from_u32(1);
        let mut i0 = ctx.from_u32(1);
        let mut hsum = ctx.from_u32(0);
        let mut h = ctx.from_u32(0);
        for k in 1u32..=30 {
            let kx = ctx.from_u32(k);
            term = &(&term * &q) / &(&kx * &kx);
            h = &h + &kx.recip();
            i0 = &i0 + &term;
            hsum = &hsum + &(&term * &h);
        }
        let logt = &(&x / &ctx.from_u32(2)).ln() + &ctx.euler_gamma();
        &hsum - &(&logt * &i0)
    };
    let k0 = bessel_k0(&ctx.from_u32(1), &ctx).unwrap();
    let diff = (&k0 - &k0_oracle).abs();
    checks.check(
        diff < ctx.parse("1e-12").unwrap(),
        format!("K0(1) vs series oracle: |diff| = {}", diff.to_sci(2)),
    );

    // interpolation exactness at centers for a published-size cell
    let ctx = with_precision(220).unwrap();
    let nodes = mnshape::geometry::barycentric_grid(
        &mnshape::geometry::Simplex::interval(&ctx.from_u32(0), &ctx.from_u32(5), &ctx).unwrap(),
        11,
        &ctx,
    )
    .unwrap();
    let kernel = KernelSpec::new(dec("-1"), dec("60"), false).unwrap();
    let values: Vec<XReal> = nodes
        .points()
        .iter()
        .map(|p| sinc_target(&p[0], &ctx))
        .collect();
    let sys = assemble(&nodes, &values, &kernel, &ctx).unwrap();
    let (interp, report) = solve(&sys, &ctx).unwrap();
    let kd = report.condition_number.decade();
    let tol = ctx.eps(kd + 15);
    let mut worst = ctx.from_u32(0);
    for (p, y) in nodes.points().iter().zip(&values) {
        worst = worst.max(&(&interp.evaluate(p, &ctx) - y).abs());
    }
    checks.check(
        worst < tol,
        format!(
            "center exactness: worst defect {} < 10^(-220+{}+15)",
            worst.to_sci(2),
            kd
        ),
    );

    // escalation protocol: same RMS to 2 significant figures at +80 digits
    let test = mnshape::geometry::uniform_1d(&dec("0"), &dec("5"), 50, &ctx).unwrap();
    let rms_base = rms_error(|z| sinc_target(&z[0], &ctx), &interp, &test, &ctx).unwrap();
    let hi = with_precision(300).unwrap();
    let nodes_hi = mnshape::geometry::barycentric_grid(
        &mnshape::geometry::Simplex::interval(&hi.from_u32(0), &hi.from_u32(5), &hi).unwrap(),
        11,
        &hi,
    )
    .unwrap();
    let values_hi: Vec<XReal> = nodes_hi
        .points()
        .iter()
        .map(|p| sinc_target(&p[0], &hi))
        .collect();
    let sys_hi = assemble(&nodes_hi, &values_hi, &kernel, &hi).unwrap();
    let (interp_hi, _) = solve(&sys_hi, &hi).unwrap();
    let test_hi = mnshape::geometry::uniform_1d(&dec("0"), &dec("5"), 50, &hi).unwrap();
    let rms_hi = rms_error(|z| sinc_target(&z[0], &hi), &interp_hi, &test_hi, &hi).unwrap();
    checks.check(
        rms_base.to_sci(2) == rms_hi.to_sci(2),
        format!(
            "escalation: RMS {} at 220 digits vs {} at 300",
            rms_base.to_sci(2),
            rms_hi.to_sci(2)
        ),
    );

    // Cramer brute force on an N = 4 system
    let ctx = with_precision(100).unwrap();
    let pts: Vec<Vec<XReal>> = [0.0f64, 1.0, 3.0, 5.0]
        .iter()
        .map(|&t| vec![ctx.from_f64(t)])
        .collect();
    let centers = mnshape::geometry::NodeSet::from_points(pts, 1, &ctx).unwrap();
    let kernel = KernelSpec::new(dec("-1"), dec("5"), false).unwrap();
    let values: Vec<XReal> = centers
        .points()
        .iter()
        .map(|p| sinc_target(&p[0], &ctx))
        .collect();
    let sys = assemble(&centers, &values, &kernel, &ctx).unwrap();
    let (interp, _) = solve(&sys, &ctx).unwrap();
    fn det(m: &Vec<Vec<XReal>>, ctx: &PrecisionContext) -> XReal {
        let n = m.len();
        if n == 1 {
            return m[0][0].clone();
        }
        let mut sum = ctx.from_u32(0);
        for col in 0..n {
            let minor: Vec<Vec<XReal>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != col)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let term = &m[0][col] * &det(&minor, ctx);
            sum = if col % 2 == 0 { &sum + &term } else { &sum - &term };
        }
        sum
    }
    let a: Vec<Vec<XReal>> = (0..4)
        .map(|i| (0..4).map(|j| sys.matrix().at(i, j).clone()).collect())
        .collect();
    let d = det(&a, &ctx);
    let mut worst = ctx.from_u32(0);
    for col in 0..4 {
        let mut ai = a.clone();
        for row in 0..4 {
            ai[row][col] = values[row].clone();
        }
        let cramer = &det(&ai, &ctx) / &d;
        worst = worst.max(&(&interp.rbf_coeffs[col] - &cramer).abs());
    }
    checks.check(
        worst < ctx.eps(20),
        format!("Cramer N=4: worst coefficient diff {}", worst.to_sci(2)),
    );
    checks.finish();
}

// Criterion 8: rescaling MN(c) by a positive constant (delta0 over
// {1e-3, 1, 1e3}) leaves c_star unchanged to the search tolerance.
#[test]
fn criterion_8_argmin_scale_invariance() {
    let mut c = Checks::new("criterion 8 (argmin invariance)");
    let ctx = with_precision(220).unwrap();
    let cfg = SearchConfig::default();
    let mut stars = Vec::new();
    for d0 in ["0.001", "1", "1000"] {
        let p = ProblemParams::new(
            1,
            dec("-1"),
            dec("1"),
            dec("5"),
            dec("0.2"),
            dec("1"),
            Some(dec(d0)),
        )
        .unwrap();
        let r = predict_c(&p, &cfg, &ctx).unwrap();
        stars.push((d0, r.c_star.to_f64()));
    }
    let base = stars[0].1;
    for (d0, s) in &stars {
        c.check(
            (s - base).abs() <= cfg.tol_c,
            format!("delta0={d0}: c_star={s:.8}"),
        );
    }
    c.finish();
}
