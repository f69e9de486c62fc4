//! The MN cost function and the direct shape-parameter prediction.
//!
//! `MN(c)` is the c-dependent factor of the interpolation error bound. It is
//! piecewise over `[24 rho delta, infinity)` with a break at `c = 12 rho b0`,
//! and its form depends on which of three parameter cases `(n, beta)` falls
//! into. The predicted optimal shape parameter is the minimizer of `MN(c)`;
//! everything here works with `ln MN` so that the `e^(c sigma / 2)` growth
//! and the `(2/3)^(c / (24 delta rho))` decay never leave a representable
//! range.

use crate::error::{Error, Result};
use crate::scalar::{Dec, PrecisionContext, XReal};

/// Parameters of one prediction problem.
///
/// `delta0` only rescales the bound by a constant factor; it shifts `ln MN`
/// but can never move the argmin.
#[derive(Debug, Clone)]
pub struct ProblemParams {
    pub n: u32,
    pub beta: Dec,
    pub sigma: Dec,
    pub b0: Dec,
    pub delta: Dec,
    pub rho: Dec,
    pub delta0: Dec,
}

impl ProblemParams {
    pub fn new(
        n: u32,
        beta: Dec,
        sigma: Dec,
        b0: Dec,
        delta: Dec,
        rho: Dec,
        delta0: Option<Dec>,
    ) -> Result<ProblemParams> {
        if n == 0 {
            return Err(Error::Domain("dimension n must be >= 1".into()));
        }
        if beta >= Dec::zero() && beta.is_integer() && beta.floor_int() % 2 == 0 {
            return Err(Error::Domain(format!(
                "beta = {beta} is a nonnegative even integer; the kernel degenerates"
            )));
        }
        if !sigma.is_positive() {
            return Err(Error::Domain("sigma must be positive".into()));
        }
        if !b0.is_positive() {
            return Err(Error::Domain("b0 must be positive".into()));
        }
        if !rho.is_positive() {
            return Err(Error::Domain("rho must be positive".into()));
        }
        let delta0 = delta0.unwrap_or_else(Dec::one);
        if !delta0.is_positive() {
            return Err(Error::Domain("delta0 must be positive".into()));
        }
        // the case criteria require delta < b0 / 2
        if !delta.is_positive() || !(delta < b0 / Dec::from_int(2)) {
            return Err(Error::Domain(format!(
                "delta = {delta} must satisfy 0 < delta < b0/2 = {}",
                b0 / Dec::from_int(2)
            )));
        }
        Ok(ProblemParams {
            n,
            beta,
            sigma,
            b0,
            delta,
            rho,
            delta0,
        })
    }

    /// Left end of the admissible shape-parameter interval, `24 rho delta`.
    pub fn c_lo(&self) -> Dec {
        Dec::from_int(24) * self.rho * self.delta
    }

    /// Break point between the two pieces, `12 rho b0`.
    pub fn c_split(&self) -> Dec {
        Dec::from_int(12) * self.rho * self.b0
    }
}

/// Which of the three parameter cases `(n, beta)` falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// beta > 0 (any n >= 1).
    CaseI,
    /// beta < 0 and (n + beta >= 1 or n + beta = -1).
    CaseII,
    /// beta = -1 and n = 1; the kernel's transform is a pure K0 Bessel
    /// factor, so the bound takes the `M(c)` form.
    CaseIII,
}

/// Classifies `(n, beta)`, rejecting pairs no case covers.
pub fn classify_case(n: u32, beta: &Dec) -> Result<CaseTag> {
    if *beta >= Dec::zero() && beta.is_integer() && beta.floor_int() % 2 == 0 {
        return Err(Error::Domain(format!(
            "beta = {beta} is a nonnegative even integer"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("dimension n must be >= 1".into()));
    }
    let zero = Dec::zero();
    if *beta > zero {
        return Ok(CaseTag::CaseI);
    }
    if *beta == Dec::from_int(-1) && n == 1 {
        return Ok(CaseTag::CaseIII);
    }
    let npb = Dec::from_int(n as i128) + *beta;
    if npb >= Dec::one() || npb == Dec::from_int(-1) {
        return Ok(CaseTag::CaseII);
    }
    Err(Error::UnsupportedCase {
        n,
        beta: beta.to_string(),
    })
}

/// One sample of the cost curve.
#[derive(Debug, Clone)]
pub struct MNSample {
    pub c: XReal,
    pub log_mn: XReal,
}

/// Which piece of the piecewise definition a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnBranch {
    /// `24 rho delta <= c < 12 rho b0`.
    Lower,
    /// `c >= 12 rho b0` (left-closed).
    Upper,
}

impl std::fmt::Display for MnBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MnBranch::Lower => write!(f, "1"),
            MnBranch::Upper => write!(f, "2"),
        }
    }
}

/// Modified Bessel function of the second kind, order zero.
///
/// Uses the ascending series
/// `K0(x) = -(ln(x/2) + gamma) I0(x) + sum_{k>=1} (x^2/4)^k / (k!)^2 H_k`.
/// For `x <= 2` a small fixed guard suffices. For larger `x` the series
/// suffers cancellation of roughly `2x log10(e)` digits between the two
/// `e^x`-sized halves, so that regime re-runs the same series at an
/// internal precision escalated by the cancellation estimate; the result is
/// still correct to the caller's context. The two regimes agree at the
/// switchover to well below the context tolerance.
pub fn bessel_k0(x: &XReal, ctx: &PrecisionContext) -> Result<XReal> {
    if !(x > &ctx.from_u32(0)) {
        return Err(Error::Domain(format!("K0 requires x > 0, got {x}")));
    }
    let guard = if x <= &ctx.from_u32(2) {
        30
    } else {
        // ~0.8686 decimal digits cancel per unit of x
        (2.0 * x.to_f64() * std::f64::consts::LOG10_E).ceil() as u32 + 30
    };
    k0_series(x, ctx, guard)
}

/// Ascending series at an explicit guard precision; `bessel_k0` chooses the
/// guard by regime.
fn k0_series(x: &XReal, ctx: &PrecisionContext, guard: u32) -> Result<XReal> {
    let work = ctx.escalate(guard);
    let xi = x.round_to(&work);
    let quarter_x2 = &(&xi * &xi) / &work.from_u32(4);
    let log_term = &(&xi / &work.from_u32(2)).ln() + &work.euler_gamma();
    let tol = work.eps(5);

    let mut term = work.from_u32(1); // (x^2/4)^k / (k!)^2
    let mut i0 = work.from_u32(1);
    let mut hsum = work.from_u32(0); // sum of term_k * H_k
    let mut harmonic = work.from_u32(0);
    let mut k: u32 = 1;
    loop {
        let k_x = work.from_u32(k);
        term = &(&term * &quarter_x2) / &(&k_x * &k_x);
        harmonic = &harmonic + &k_x.recip();
        i0 = &i0 + &term;
        hsum = &hsum + &(&term * &harmonic);
        if &(&term * &harmonic) < &(&tol * &hsum) && term < tol {
            break;
        }
        k += 1;
        if k > 100_000 {
            return Err(Error::NumericalFailure(
                "K0 series failed to converge".into(),
            ));
        }
    }
    let k0 = &hsum - &(&log_term * &i0);
    Ok(k0.round_to(ctx))
}

/// The `M(c)` factor of the case-III bound:
/// `1/sqrt(K0(1))` for `c <= 1/sigma`, else
/// `(1/K0(1) + 2 sqrt(3) sqrt(c sigma) e^(c sigma))^(1/2)`.
pub fn m_factor(c: &XReal, sigma: &XReal, ctx: &PrecisionContext) -> Result<XReal> {
    if !c.is_sign_positive() || !sigma.is_sign_positive() {
        return Err(Error::Domain("m_factor requires c > 0 and sigma > 0".into()));
    }
    let k01 = bessel_k0(&ctx.from_u32(1), ctx)?;
    if c <= &sigma.recip() {
        // boundary inclusive: the constant clause still applies at c = 1/sigma
        return Ok(k01.sqrt().recip());
    }
    let cs = c * sigma;
    let grow = &(&ctx.from_u32(12).sqrt() * &cs.sqrt()) * &cs.exp();
    Ok((&k01.recip() + &grow).sqrt())
}

/// `ln M(c)` computed in log space: for `c > 1/sigma` the `e^(c sigma)`
/// inside the root is factored out so no intermediate overflows,
/// `ln M = (c sigma + ln(2 sqrt(3) sqrt(c sigma) + e^(-c sigma)/K0(1))) / 2`.
fn ln_m_factor(c: &XReal, sigma: &XReal, ctx: &PrecisionContext) -> Result<XReal> {
    let k01 = bessel_k0(&ctx.from_u32(1), ctx)?;
    if c <= &sigma.recip() {
        return Ok(-(&k01.ln() / &ctx.from_u32(2)));
    }
    let cs = c * sigma;
    let small = &(-&cs).exp() / &k01;
    let inner = &(&ctx.from_u32(12).sqrt() * &cs.sqrt()) + &small;
    Ok(&(&cs + &inner.ln()) / &ctx.from_u32(2))
}

/// `ln MN(c)` for cases I and II:
/// on `[24 rho delta, 12 rho b0)`:
///   `ln sqrt(8 rho) + ((beta-1-n)/4) ln c + c sigma/2 + (c/(24 delta rho)) ln(2/3)`,
/// on `[12 rho b0, inf)`:
///   `ln sqrt(2/(3 b0)) + ((1+beta-n)/4) ln c + c sigma/2 + (b0/(2 delta)) ln(2/3)`.
/// The `delta0` factor of the full bound contributes the constant
/// `ln sqrt(delta0)`.
pub fn log_mn_general(c: &XReal, p: &ProblemParams, ctx: &PrecisionContext) -> Result<XReal> {
    let case = classify_case(p.n, &p.beta)?;
    if case == CaseTag::CaseIII {
        return Err(Error::Domain(
            "log_mn_general applies to cases I/II; use log_mn_case3".into(),
        ));
    }
    let (branch, _) = branch_of(c, p, ctx)?;
    log_mn_general_branch(c, p, branch, ctx)
}

/// Branch-forced evaluation; used for one-sided values at the break point.
pub fn log_mn_general_branch(
    c: &XReal,
    p: &ProblemParams,
    branch: MnBranch,
    ctx: &PrecisionContext,
) -> Result<XReal> {
    let ln_c = c.ln();
    let ln_two_thirds = ctx.from_ratio(2, 3).ln();
    let sigma = ctx.from_dec(&p.sigma);
    let growth = &(c * &sigma) / &ctx.from_u32(2);
    let scale = &ctx.from_dec(&p.delta0).ln() / &ctx.from_u32(2);
    let beta = ctx.from_dec(&p.beta);
    let n = ctx.from_u32(p.n);
    let one = ctx.from_u32(1);
    let four = ctx.from_u32(4);
    let v = match branch {
        MnBranch::Lower => {
            let lead = (&ctx.from_u32(8) * &ctx.from_dec(&p.rho)).ln() / ctx.from_u32(2);
            let power = &(&(&beta - &one) - &n) / &four;
            let decay_rate = ctx.from_dec(&(Dec::from_int(24) * p.delta * p.rho)).recip();
            &(&(&lead + &(&power * &ln_c)) + &growth) + &(&(c * &decay_rate) * &ln_two_thirds)
        }
        MnBranch::Upper => {
            let lead = ctx
                .from_ratio(2, 3)
                .ln()
                / ctx.from_u32(2)
                - ctx.from_dec(&p.b0).ln() / ctx.from_u32(2);
            let power = &(&(&one + &beta) - &n) / &four;
            let decay = ctx.from_dec(&(p.b0 / (Dec::from_int(2) * p.delta)));
            &(&(&lead + &(&power * &ln_c)) + &growth) + &(&decay * &ln_two_thirds)
        }
    };
    Ok(&v + &scale)
}

/// `ln MN(c)` for case III (beta = -1, n = 1):
/// on `[24 rho delta, 12 rho b0)`:
///   `ln sqrt(8 rho) + ((beta-1)/2) ln c + (c/(24 delta rho)) ln(2/3) + ln M(c)`,
/// on `[12 rho b0, inf)`:
///   `ln sqrt(2/(3 b0)) + (beta/2) ln c + (b0/(2 delta)) ln(2/3) + ln M(c)`.
pub fn log_mn_case3(c: &XReal, p: &ProblemParams, ctx: &PrecisionContext) -> Result<XReal> {
    if classify_case(p.n, &p.beta)? != CaseTag::CaseIII {
        return Err(Error::Domain(
            "log_mn_case3 requires beta = -1, n = 1".into(),
        ));
    }
    let (branch, _) = branch_of(c, p, ctx)?;
    log_mn_case3_branch(c, p, branch, ctx)
}

/// Branch-forced case-III evaluation.
pub fn log_mn_case3_branch(
    c: &XReal,
    p: &ProblemParams,
    branch: MnBranch,
    ctx: &PrecisionContext,
) -> Result<XReal> {
    let ln_c = c.ln();
    let ln_two_thirds = ctx.from_ratio(2, 3).ln();
    let sigma = ctx.from_dec(&p.sigma);
    let ln_m = ln_m_factor(c, &sigma, ctx)?;
    let scale = &ctx.from_dec(&p.delta0).ln() / &ctx.from_u32(2);
    let beta = ctx.from_dec(&p.beta);
    let two = ctx.from_u32(2);
    let v = match branch {
        MnBranch::Lower => {
            let lead = (&ctx.from_u32(8) * &ctx.from_dec(&p.rho)).ln() / ctx.from_u32(2);
            let power = &(&beta - &ctx.from_u32(1)) / &two;
            let decay_rate = ctx.from_dec(&(Dec::from_int(24) * p.delta * p.rho)).recip();
            &(&(&lead + &(&power * &ln_c)) + &(&(c * &decay_rate) * &ln_two_thirds)) + &ln_m
        }
        MnBranch::Upper => {
            let lead = ctx.from_ratio(2, 3).ln() / ctx.from_u32(2)
                - ctx.from_dec(&p.b0).ln() / ctx.from_u32(2);
            let power = &beta / &two;
            let decay = ctx.from_dec(&(p.b0 / (Dec::from_int(2) * p.delta)));
            &(&(&lead + &(&power * &ln_c)) + &(&decay * &ln_two_thirds)) + &ln_m
        }
    };
    Ok(&v + &scale)
}

/// `ln MN(c)` dispatching on the parameter case. Errors if `c < 24 rho delta`.
pub fn log_mn(c: &XReal, p: &ProblemParams, ctx: &PrecisionContext) -> Result<XReal> {
    match classify_case(p.n, &p.beta)? {
        CaseTag::CaseIII => log_mn_case3(c, p, ctx),
        _ => log_mn_general(c, p, ctx),
    }
}

fn branch_of(c: &XReal, p: &ProblemParams, ctx: &PrecisionContext) -> Result<(MnBranch, XReal)> {
    let c_lo = ctx.from_dec(&p.c_lo());
    // binary renderings of the exact decimal endpoint may sit an ulp below
    let slack = &c_lo * &ctx.from_f64(1e-13);
    if c < &(&c_lo - &slack) {
        return Err(Error::Domain(format!(
            "c = {c} below the admissible interval start 24*rho*delta = {c_lo}"
        )));
    }
    let split = ctx.from_dec(&p.c_split());
    let branch = if c < &split {
        MnBranch::Lower
    } else {
        MnBranch::Upper
    };
    Ok((branch, split))
}

/// Branch-aware evaluation used by the minimizer: evaluates the branch the
/// point belongs to, except exactly at the break where `forced` selects a
/// one-sided value.
fn log_mn_branch(
    c: &XReal,
    p: &ProblemParams,
    branch: MnBranch,
    case: CaseTag,
    ctx: &PrecisionContext,
) -> Result<XReal> {
    match case {
        CaseTag::CaseIII => log_mn_case3_branch(c, p, branch, ctx),
        _ => log_mn_general_branch(c, p, branch, ctx),
    }
}

/// Search configuration for [`predict_c`].
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Upper end of the search interval; default `40 rho b0`.
    pub c_max: Option<Dec>,
    /// Golden-section refinement tolerance on c.
    pub tol_c: f64,
    /// Height of the flat-bottom band above the minimum, in natural-log
    /// units; default `ln 10` (one decade of MN).
    pub eps_flat: f64,
    /// Maximum flat-bottom width still considered reliable; default
    /// `0.5 (12 rho b0 - 24 rho delta)`.
    pub w_max: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            c_max: None,
            tol_c: 1e-6,
            eps_flat: std::f64::consts::LN_10,
            w_max: None,
        }
    }
}

/// Outcome of the direct prediction.
#[derive(Debug, Clone)]
pub struct PredictionResult {
    pub c_star: XReal,
    pub log_mn_star: XReal,
    pub branch: MnBranch,
    /// Length of the contiguous interval around `c_star` where
    /// `ln MN <= ln MN(c_star) + eps_flat`.
    pub flat_bottom_width: f64,
    ///`flat_bottom_width <= w_max`: a wide flat bottom means many c values
    /// are indistinguishable under the bound, and the prediction should not
    /// be trusted.
    pub reliable: bool,
}

struct BranchFn<'a> {
    p: &'a ProblemParams,
    case: CaseTag,
    branch: MnBranch,
    ctx: &'a PrecisionContext,
}

impl BranchFn<'_> {
    fn eval(&self, c: &XReal) -> XReal {
        log_mn_branch(c, self.p, self.branch, self.case, self.ctx)
            .expect("branch evaluation inside verified domain")
    }

    fn eval_f64(&self, c: f64) -> XReal {
        self.eval(&self.ctx.from_f64(c))
    }
}

/// Golden-section minimization on [a, b]; the branch pieces of `ln MN` are
/// convex in c, so this converges to the piece minimum (possibly an
/// endpoint). Returns (c, value).
fn golden_section(f: &BranchFn, a: f64, b: f64, tol: f64) -> (f64, XReal) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f.eval_f64(x1);
    let mut f2 = f.eval_f64(x2);
    while (b - a) > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f.eval_f64(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f.eval_f64(x2);
        }
    }
    let xm = 0.5 * (a + b);
    (xm, f.eval_f64(xm))
}

/// Predicts the optimal shape parameter by minimizing `ln MN` over
/// `[24 rho delta, c_max]`.
///
/// Candidates: the golden-section minimum of each branch piece (their
/// convexity makes that the piece minimum), the closed-form stationary
/// point of each log-linear-plus-power piece where one exists, both
/// one-sided values at the break `12 rho b0`, and the interval endpoints.
/// The flat-bottom width around the winner is then measured at `eps_flat`
/// and compared against `w_max` to set the reliability flag.
/// Smallest f64 not below the exact decimal value (which `to_f64` may have
/// rounded down by one ulp). Only used for positive quantities.
fn f64_not_below(d: &Dec, ctx: &PrecisionContext) -> f64 {
    let f = d.to_f64();
    if ctx.from_f64(f) < ctx.from_dec(d) {
        f64::from_bits(f.to_bits() + 1)
    } else {
        f
    }
}

pub fn predict_c(
    p: &ProblemParams,
    cfg: &SearchConfig,
    ctx: &PrecisionContext,
) -> Result<PredictionResult> {
    let case = classify_case(p.n, &p.beta)?;
    let c_lo = f64_not_below(&p.c_lo(), ctx);
    let split = p.c_split().to_f64();
    let c_max = cfg
        .c_max
        .unwrap_or(Dec::from_int(40) * p.rho * p.b0)
        .to_f64();
    if c_max <= c_lo {
        return Err(Error::Domain(format!(
            "c_max = {c_max} must exceed 24*rho*delta = {c_lo}"
        )));
    }

    let lower = BranchFn {
        p,
        case,
        branch: MnBranch::Lower,
        ctx,
    };
    let upper = BranchFn {
        p,
        case,
        branch: MnBranch::Upper,
        ctx,
    };

    let mut candidates: Vec<(f64, XReal, MnBranch)> = Vec::new();
    let push = |cands: &mut Vec<(f64, XReal, MnBranch)>, c: f64, f: &BranchFn| {
        cands.push((c, f.eval_f64(c), f.branch));
    };

    if c_lo < split {
        let hi = split.min(c_max);
        push(&mut candidates, c_lo, &lower);
        push(&mut candidates, hi, &lower); // one-sided value at the break (or at c_max)
        if let Some(c0) = stationary_candidate(p, case, MnBranch::Lower) {
            if c0 > c_lo && c0 < hi {
                push(&mut candidates, c0, &lower);
            }
        }
        let (c, v) = golden_section(&lower, c_lo, hi, cfg.tol_c);
        candidates.push((c, v, MnBranch::Lower));
    }
    if c_max >= split {
        let lo = split.max(c_lo);
        push(&mut candidates, lo, &upper);
        push(&mut candidates, c_max, &upper);
        if let Some(c0) = stationary_candidate(p, case, MnBranch::Upper) {
            if c0 > lo && c0 < c_max {
                push(&mut candidates, c0, &upper);
            }
        }
        let (c, v) = golden_section(&upper, lo, c_max, cfg.tol_c);
        candidates.push((c, v, MnBranch::Upper));

        // the default c_max is safe only while the curve is still rising
        let probe = upper.eval_f64(c_max - cfg.tol_c.max(1e-9));
        let at_end = upper.eval_f64(c_max);
        if at_end < probe {
            return Err(Error::NumericalFailure(format!(
                "ln MN is not increasing at c_max = {c_max}; raise c_max"
            )));
        }
    }

    let (mut c_star, mut best, mut branch) = {
        let first = &candidates[0];
        (first.0, first.1.clone(), first.2)
    };
    for (c, v, b) in &candidates[1..] {
        if *v < best {
            c_star = *c;
            best = v.clone();
            branch = *b;
        }
    }
    // a winner within tol of the break is the break itself (left-closed)
    if (c_star - split).abs() <= cfg.tol_c * 2.0 && split >= c_lo && split <= c_max {
        let v = upper.eval_f64(split);
        if v <= best || (&v - &best).abs() < ctx.from_f64(1e-30) {
            c_star = split;
            best = v;
            branch = MnBranch::Upper;
        }
    }

    let threshold = &best + &ctx.from_f64(cfg.eps_flat);
    let eval_at = |c: f64| -> XReal {
        if c < split {
            lower.eval_f64(c)
        } else {
            upper.eval_f64(c)
        }
    };
    let flat_lo = flat_edge(&eval_at, &threshold, c_star, c_lo, split, true);
    let flat_hi = flat_edge(&eval_at, &threshold, c_star, c_max, split, false);
    let flat_bottom_width = flat_hi - flat_lo;
    let w_max = cfg
        .w_max
        .unwrap_or_else(|| 0.5 * (p.c_split().to_f64() - p.c_lo().to_f64()));
    Ok(PredictionResult {
        c_star: ctx.from_f64(c_star),
        log_mn_star: best,
        branch,
        flat_bottom_width,
        reliable: flat_bottom_width <= w_max,
    })
}

/// Stationary point of a piece whose log is `P ln c + L c + const`; the
/// case-III lower/upper pieces (for c > 1/sigma) also carry the `ln M`
/// term, whose asymptotic slope `sigma/2 + 1/(4c)` is folded in.
fn stationary_candidate(p: &ProblemParams, case: CaseTag, branch: MnBranch) -> Option<f64> {
    let beta = p.beta.to_f64();
    let n = p.n as f64;
    let sigma = p.sigma.to_f64();
    let ln23 = (2.0f64 / 3.0).ln();
    let (pw, lin) = match (case, branch) {
        (CaseTag::CaseIII, MnBranch::Lower) => (
            (beta - 1.0) / 2.0 + 0.25,
            sigma / 2.0 + ln23 / (24.0 * p.delta.to_f64() * p.rho.to_f64()),
        ),
        (CaseTag::CaseIII, MnBranch::Upper) => (beta / 2.0 + 0.25, sigma / 2.0),
        (_, MnBranch::Lower) => (
            (beta - 1.0 - n) / 4.0,
            sigma / 2.0 + ln23 / (24.0 * p.delta.to_f64() * p.rho.to_f64()),
        ),
        (_, MnBranch::Upper) => ((1.0 + beta - n) / 4.0, sigma / 2.0),
    };
    if pw < 0.0 && lin > 0.0 {
        Some(-pw / lin)
    } else {
        None
    }
}

/// Finds the edge of the flat-bottom interval on one side of `c_star` by
/// bisection against `threshold`, respecting the branch break.
fn flat_edge(
    eval: &impl Fn(f64) -> XReal,
    threshold: &XReal,
    c_star: f64,
    domain_end: f64,
    split: f64,
    left: bool,
) -> f64 {
    // segment endpoints between c_star and the domain end, stopping at the
    // branch break so bisection always runs on a continuous piece
    let mut segments: Vec<(f64, f64)> = Vec::new();
    if left {
        if c_star > split && split > domain_end {
            segments.push((c_star, split));
            segments.push((split, domain_end));
        } else {
            segments.push((c_star, domain_end));
        }
    } else if c_star < split && split < domain_end {
        segments.push((c_star, split));
        segments.push((split, domain_end));
    } else {
        segments.push((c_star, domain_end));
    }

    let mut edge = c_star;
    for (from, to) in segments {
        let f_to = eval(to);
        if &f_to <= threshold {
            edge = to;
            continue;
        }
        // crossing inside (from, to)
        let (mut inside, mut outside) = (from, to);
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if &eval(mid) <= threshold {
                inside = mid;
            } else {
                outside = mid;
            }
            if (outside - inside).abs() < 1e-9 * (1.0 + outside.abs()) {
                break;
            }
        }
        edge = inside;
        break;
    }
    edge
}

/// Uniform sampling of the cost curve on `[c_lo, c_hi]`, for CSV or plots.
pub fn sample_curve(
    p: &ProblemParams,
    c_lo: f64,
    c_hi: f64,
    count: u32,
    ctx: &PrecisionContext,
) -> Result<Vec<MNSample>> {
    let lo_bound = p.c_lo().to_f64();
    if c_lo < lo_bound - 1e-12 || c_lo >= c_hi {
        return Err(Error::Domain(format!(
            "need 24*rho*delta <= c_lo < c_hi (got c_lo = {c_lo}, c_hi = {c_hi}, 24*rho*delta = {lo_bound})"
        )));
    }
    if count < 2 {
        return Err(Error::Domain("count must be >= 2".into()));
    }
    let mut out = Vec::with_capacity(count as usize);
    let step = (c_hi - c_lo) / (count - 1) as f64;
    for k in 0..count {
        let c = if k == count - 1 {
            c_hi
        } else {
            c_lo + step * k as f64
        };
        let cx = ctx.from_f64(c);
        let v = log_mn(&cx, p, ctx)?;
        out.push(MNSample { c: cx, log_mn: v });
    }
    Ok(out)
}

/// CSV serialization of samples as `c,log10_mn` (log base 10 for plotting).
pub fn curve_to_csv(samples: &[MNSample], ctx: &PrecisionContext) -> String {
    let ln10 = ctx.ln10();
    let mut out = String::from("c,log10_mn\n");
    for s in samples {
        let log10 = &s.log_mn / &ln10;
        out.push_str(&format!("{},{}\n", s.c.to_sci(17), log10.to_sci(17)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::with_precision;

    fn dec(s: &str) -> Dec {
        s.parse().unwrap()
    }

    fn paper_params(delta: &str) -> ProblemParams {
        ProblemParams::new(1, dec("-1"), dec("1"), dec("5"), dec(delta), dec("1"), None).unwrap()
    }

    #[test]
    fn case_classification() {
        assert_eq!(classify_case(1, &dec("-1")).unwrap(), CaseTag::CaseIII);
        assert_eq!(classify_case(1, &dec("1")).unwrap(), CaseTag::CaseI);
        assert_eq!(classify_case(2, &dec("-1")).unwrap(), CaseTag::CaseII);
        assert_eq!(classify_case(1, &dec("-2")).unwrap(), CaseTag::CaseII);
        assert_eq!(classify_case(3, &dec("-1.5")).unwrap(), CaseTag::CaseII);
        assert!(matches!(
            classify_case(1, &dec("-0.5")),
            Err(Error::UnsupportedCase { .. })
        ));
        assert!(classify_case(1, &dec("2")).is_err());
        assert!(classify_case(1, &dec("0")).is_err());
    }

    #[test]
    fn k0_matches_series_oracle() {
        let ctx = with_precision(50).unwrap();
        // 60-digit reference values
        let cases = [
            ("1", "0.42102443824070833333562737921260903613621974822666047229897"),
            ("2", "0.11389387274953343565271957493248183299832662438880888289253"),
            ("0.1", "2.42706902470201661251850602042806189982601168538434795139942"),
            ("10", "0.0000177800623161676518113011927994927923128734701603464360092539"),
        ];
        for (x, want) in cases {
            let v = bessel_k0(&ctx.parse(x).unwrap(), &ctx).unwrap();
            let w = ctx.parse(want).unwrap();
            let rel = (&(&v - &w) / &w).abs();
            assert!(rel < ctx.eps(10), "K0({x}): rel = {rel}");
        }
        assert!(bessel_k0(&ctx.from_u32(0), &ctx).is_err());
        assert!(bessel_k0(&ctx.from_i64(-1), &ctx).is_err());
    }

    #[test]
    fn k0_regimes_agree_at_switchover() {
        // at x = 2 both internal regimes (fixed guard vs cancellation-scaled
        // guard) must agree far below the context tolerance
        let ctx = with_precision(120).unwrap();
        let x = ctx.from_u32(2);
        let small_guard = k0_series(&x, &ctx, 30).unwrap();
        let large_guard = k0_series(&x, &ctx, 2 + 30 + 40).unwrap();
        let rel = (&(&small_guard - &large_guard) / &large_guard).abs();
        assert!(rel < ctx.eps(10), "switchover mismatch: {rel}");
    }

    #[test]
    fn k0_random_points_match_tight_tolerance() {
        // spread of points in [0.1, 10] against a 50-digit context
        let ctx = with_precision(50).unwrap();
        let mut rng = crate::geometry::SplitMix64::new(2024);
        for _ in 0..20 {
            let x = 0.1 + 9.9 * rng.next_unit();
            let v = bessel_k0(&ctx.from_f64(x), &ctx).unwrap();
            // against an escalated context as the independent tighter oracle
            let hi = with_precision(110).unwrap();
            let w = bessel_k0(&hi.from_f64(x), &hi).unwrap();
            let diff = (&v - &w.round_to(&ctx)).abs();
            assert!(diff < &ctx.eps(20) * &w.abs().round_to(&ctx), "x = {x}");
            assert!(diff.to_f64() < 1e-30, "x = {x}");
        }
    }

    #[test]
    fn m_factor_clauses() {
        let ctx = with_precision(60).unwrap();
        let one = ctx.from_u32(1);
        // c <= 1/sigma: constant 1/sqrt(K0(1)) = 1.5411550988...
        let v = m_factor(&ctx.parse("0.5").unwrap(), &one, &ctx).unwrap();
        let want = ctx
            .parse("1.54115509884553964370617143653540749659513494489860285087843")
            .unwrap();
        assert!((&v - &want).abs() < ctx.eps(10));
        // boundary c = 1/sigma inclusive
        let at = m_factor(&one, &one, &ctx).unwrap();
        assert_eq!(at, v);
        // c = 2, sigma = 1: (1/K0(1) + 2 sqrt3 sqrt2 e^2)^(1/2) = 6.2107965097...
        let v = m_factor(&ctx.from_u32(2), &one, &ctx).unwrap();
        let want = ctx
            .parse("6.21079650971256895821233092941455521455943196710926011794117")
            .unwrap();
        assert!((&v - &want).abs() < ctx.eps(10), "got {v}");
        // log-space path agrees with the direct product
        let lm = ln_m_factor(&ctx.from_u32(2), &one, &ctx).unwrap();
        assert!((&lm.exp() - &v).abs() < ctx.eps(10));
    }

    #[test]
    fn log_mn_general_desk_value() {
        // n=2, beta=1, sigma=1, b0=5, delta=0.2, rho=1 at c = 24*rho*delta:
        // ln MN = ln(8)/2 - ln(4.8)/2 + 2.4 + ln(2/3)
        let ctx = with_precision(60).unwrap();
        let p = ProblemParams::new(2, dec("1"), dec("1"), dec("5"), dec("0.2"), dec("1"), None)
            .unwrap();
        let c = ctx.parse("4.8").unwrap();
        let v = log_mn_general(&c, &p, &ctx).unwrap();
        let want = ctx
            .parse("2.24994770377483095962474393268748183086706497476038993747496")
            .unwrap();
        assert!((&v - &want).abs() < ctx.eps(10), "got {v}");
        // below the interval start
        assert!(log_mn_general(&ctx.from_u32(4), &p, &ctx).is_err());
        // the break is left-closed: at c = 12 rho b0 the upper branch applies
        let at_split = log_mn_general(&ctx.from_u32(60), &p, &ctx).unwrap();
        let forced = log_mn_general_branch(&ctx.from_u32(60), &p, MnBranch::Upper, &ctx).unwrap();
        assert_eq!(at_split, forced);
    }

    #[test]
    fn log_mn_case3_desk_values() {
        let ctx = with_precision(60).unwrap();
        let p = paper_params("0.2");
        // branch-2 value at c = 60 (term-by-term oracle)
        let v = log_mn_case3(&ctx.from_u32(60), &p, &ctx).unwrap();
        let want = ctx
            .parse("23.5218751602682877533352599994313703125527495947044712136784")
            .unwrap();
        assert!((&v - &want).abs() < ctx.eps(10), "got {v}");
        // one-sided difference at the break matches the formula difference;
        // for this kernel family the two pieces actually join continuously
        let left = log_mn_case3_branch(&ctx.from_u32(60), &p, MnBranch::Lower, &ctx).unwrap();
        let jump = &v - &left;
        assert!(jump.abs() < ctx.eps(10), "jump = {jump}");
        // near-boundary one-sided evaluation (c = 59.999)
        let close = log_mn_case3(&ctx.parse("59.999").unwrap(), &p, &ctx).unwrap();
        let want_close = ctx
            .parse("23.521472132269978111670047278401396818456063286265613913611")
            .unwrap();
        assert!((&close - &want_close).abs() < ctx.eps(10), "got {close}");
    }

    #[test]
    fn log_mn_case3_constant_m_region() {
        // for c < 1/sigma the M factor is constant, so log_mn differs from
        // the bare power-plus-decay shape only by ln(1/sqrt(K0(1)))
        let ctx = with_precision(60).unwrap();
        let p = ProblemParams::new(
            1,
            dec("-1"),
            dec("0.01"),
            dec("5"),
            dec("0.2"),
            dec("1"),
            None,
        )
        .unwrap();
        let c = ctx.from_u32(10); // 4.8 <= c < 60 and c < 1/sigma = 100
        let v = log_mn_case3(&c, &p, &ctx).unwrap();
        let k01 = bessel_k0(&ctx.from_u32(1), &ctx).unwrap();
        let bare = &(&(&ctx.from_u32(8).ln() / &ctx.from_u32(2))
            + &(&-c.ln() * &ctx.from_u32(1)))
            + &(&(&c / &ctx.parse("4.8").unwrap()) * &ctx.from_ratio(2, 3).ln());
        let want = &bare - &(&k01.ln() / &ctx.from_u32(2));
        assert!((&v - &want).abs() < ctx.eps(10));
    }

    #[test]
    fn predict_matches_dense_grid_oracle() {
        // dense grid scan at step 0.01 is the independent argmin oracle
        let ctx = with_precision(60).unwrap();
        for d in ["0.44", "0.2"] {
            let p = paper_params(d);
            let cfg = SearchConfig::default();
            let r = predict_c(&p, &cfg, &ctx).unwrap();
            let c_lo = f64_not_below(&p.c_lo(), &ctx);
            let c_max = 200.0f64;
            let mut best = f64::INFINITY;
            let mut best_c = c_lo;
            let mut c = c_lo;
            while c <= c_max {
                let v = log_mn(&ctx.from_f64(c), &p, &ctx).unwrap().to_f64();
                if v < best {
                    best = v;
                    best_c = c;
                }
                c += 0.01;
            }
            assert!(
                (r.c_star.to_f64() - best_c).abs() <= 0.011,
                "delta = {d}: predicted {} vs grid {best_c}",
                r.c_star.to_f64()
            );
            assert!(r.c_star.to_f64() < 60.0, "delta = {d}");
            assert!(r.c_star.to_f64() >= c_lo - 1e-9);
        }
    }

    #[test]
    fn prediction_scale_invariance() {
        // multiplying MN by a positive constant (delta0) shifts the curve
        // but never moves the argmin
        let ctx = with_precision(60).unwrap();
        let base = paper_params("0.2");
        let cfg = SearchConfig::default();
        let r0 = predict_c(&base, &cfg, &ctx).unwrap();
        for d0 in ["0.001", "1000"] {
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
            assert!(
                (r.c_star.to_f64() - r0.c_star.to_f64()).abs() <= cfg.tol_c,
                "delta0 = {d0}"
            );
        }
    }

    #[test]
    fn sample_curve_contract() {
        let ctx = with_precision(60).unwrap();
        let p = paper_params("0.3");
        let s = sample_curve(&p, 7.2, 120.0, 500, &ctx).unwrap();
        assert_eq!(s.len(), 500);
        for w in s.windows(2) {
            assert!(w[0].c < w[1].c);
        }
        // samples agree with direct evaluation
        for k in [0usize, 250, 499] {
            let direct = log_mn(&s[k].c, &p, &ctx).unwrap();
            assert_eq!(direct, s[k].log_mn);
        }
        // min over a fine sampling is close to the predictor's optimum
        let fine = sample_curve(&p, p.c_lo().to_f64(), 200.0, 10_000, &ctx).unwrap();
        let min_sample = fine
            .iter()
            .map(|s| s.log_mn.to_f64())
            .fold(f64::INFINITY, f64::min);
        let r = predict_c(&p, &SearchConfig::default(), &ctx).unwrap();
        assert!((min_sample - r.log_mn_star.to_f64()).abs() < 1e-3);
        // range violations
        assert!(sample_curve(&p, 1.0, 120.0, 10, &ctx).is_err());
        assert!(sample_curve(&p, 10.0, 9.0, 10, &ctx).is_err());
        assert!(sample_curve(&p, 10.0, 20.0, 1, &ctx).is_err());
    }

    #[test]
    fn curve_csv_shape() {
        let ctx = with_precision(60).unwrap();
        let p = paper_params("0.3");
        let s = sample_curve(&p, 7.2, 20.0, 5, &ctx).unwrap();
        let csv = curve_to_csv(&s, &ctx);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "c,log10_mn");
        assert_eq!(lines.len(), 6);
    }
}
