use clap::ValueEnum;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::Value;
use symsub::channels::{estimation_fidelity, rearrange_identity, verify_chiribella as chiribella};
use symsub::concentration::{
    experiment_product_free, experiment_schmidt_tail, product_state_threshold, smooth_gap_bound, tail_bound, MultiPartition,
};
use symsub::definetti::{
    check_coefficient_bounds, definetti_epsilon, epsilon_form, exp_definetti_coefficients, expansion_is_exact,
    verify_exp_definetti, verify_expansion,
};
use symsub::exactcomb::{
    binomial, enumerate_types, format_rational, mp_clone_coefficient, mp_clone_polynomial, mp_clone_polynomial_via_jacobi,
    parse_rational, real_moment_ratio, sym_dim, to_f64,
};
use symsub::randomness::{
    mc_projector_moment, mc_tensor_power_mean, Field, RngStream, Sampler, DEFAULT_SIGMAS,
};
use symsub::tensorspace::{
    conjugation_fixed_dimension, copies, enumerate_permutations, matching_operator, matching_sum, permutation_operator,
    sym_projector, sym_projector_group, tensor_power_span_rank, Matching, Operator,
};

use crate::report::{float, Check, Report, Table};
use crate::{
    CliError, DefinettiCoeffs, FieldArg, Global, JacobiArgs, MeanPowerArgs, MomentArgs, ProductFreeArgs, SamplerArg,
    SchmidtArgs, SmoothGapArgs, TailArgs, WickArgs, DN, DNK,
};

/// Default Frobenius tolerance for floating-point identities.
const RESIDUAL_TOL: f64 = 1e-10;
const MC_SAMPLES: usize = 100_000;

type Outcome = Result<Report, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

pub fn dims(a: &DN, g: &Global) -> Outcome {
    let mut r = Report::new("dims");
    r.param("d", a.d).param("n", a.n);
    let dim = sym_dim(a.d as u64, a.n as u64);
    r.datum("sym_dim", dim.to_string())
        .datum("full_dim", num_pow(a.d, a.n))
        .datum("commutant_dim", sym_dim((a.d * a.d) as u64, a.n as u64).to_string());
    if dim <= BigInt::from(g.limits().max_dim) {
        let types = enumerate_types(a.d, a.n)?;
        r.check(Check::exact("sym_dim equals number of types", dim.to_string(), types.len().to_string()));
    }
    Ok(r)
}

fn num_pow(d: usize, n: usize) -> String {
    num_traits::pow(BigInt::from(d), n).to_string()
}

pub fn coeffs(a: &DNK, _g: &Global) -> Outcome {
    let (d, n, k) = (a.d as u64, a.n as u64, a.k as u64);
    let mut r = Report::new("coeffs");
    r.param("d", d).param("n", n).param("k", k);
    let mut t = Table::new(&["s", "m", "m_float"]);
    for s in 0..=k {
        let m = mp_clone_coefficient(d, n, k, s);
        t.push(vec![Value::from(s), Value::String(format_rational(&m)), float(to_f64(&m))]);
        r.check(Check::holds(&format!("rearranged form at s={s}"), rearrange_identity(d, n, k, s)));
    }
    let one = parse_rational("1")?;
    r.check(Check::exact(
        "coefficients sum to one",
        "1".to_string(),
        format_rational(&mp_clone_polynomial(d, n, k, &one)),
    ));
    r.table = Some(t);
    Ok(r)
}

pub fn verify_psym(a: &DN, g: &Global) -> Outcome {
    let lim = g.limits();
    let mut r = Report::new("verify psym");
    r.param("d", a.d).param("n", a.n);
    let tol = RESIDUAL_TOL * g.tol_scale;
    let p = sym_projector(a.d, a.n, &lim)?;
    let dim = to_f64(&BigRational::from(sym_dim(a.d as u64, a.n as u64)));
    r.check(Check::close("trace", dim, p.trace().re, 1e-8 * g.tol_scale));
    let sq = p.mul(&p)?;
    r.check(Check::at_most("idempotence residual", tol, sq.sub(&p)?.frobenius_norm()));
    r.check(Check::at_most("hermiticity error", tol, p.hermiticity_error()));
    let group = sym_projector_group(a.d, a.n, &lim)?;
    r.check(Check::at_most("group average vs type basis", 1e-12 * g.tol_scale, group.sub(&p)?.frobenius_norm()));
    Ok(r)
}

pub fn verify_spans(a: &DN, g: &Global) -> Outcome {
    let lim = g.limits();
    let dsym: usize = sym_dim(a.d as u64, a.n as u64)
        .try_into()
        .or_else(|_| usage("symmetric dimension does not fit in memory"))?;
    let samples = g.samples_or(dsym * dsym + 5);
    let mut r = Report::new("verify spans");
    r.param("d", a.d).param("n", a.n).param("samples", samples).param("seed", g.seed);
    let mut s = RngStream::new(g.seed, 0);
    let rank = tensor_power_span_rank(a.d, a.n, samples, &mut s, &lim)?;
    r.check(Check::exact("span rank", dsym * dsym, rank));
    Ok(r)
}

pub fn verify_commutant_dim(a: &DN, g: &Global) -> Outcome {
    let mut r = Report::new("verify commutant-dim");
    r.param("d", a.d).param("n", a.n);
    let fixed = conjugation_fixed_dimension(a.d as u64, a.n, &g.limits())?;
    r.check(Check::exact(
        "fixed-space dimension",
        sym_dim((a.d * a.d) as u64, a.n as u64).to_string(),
        fixed.to_string(),
    ));
    Ok(r)
}

pub fn verify_chiribella(a: &DNK, g: &Global) -> Outcome {
    let mut r = Report::new("verify chiribella");
    r.param("d", a.d).param("n", a.n).param("k", a.k);
    let res = chiribella(a.d, a.n, a.k, &g.limits())?;
    r.check(Check::at_most("frobenius residual", RESIDUAL_TOL * g.tol_scale, res.residual));
    r.check(Check::holds("exact coefficient identities", res.exact));
    r.datum("estimation_fidelity", format_rational(&estimation_fidelity(a.d as u64, a.n as u64, a.k as u64)));
    Ok(r)
}

pub fn verify_jacobi(a: &JacobiArgs, _g: &Global) -> Outcome {
    let (d, n, k) = (a.dnk.d as u64, a.dnk.n as u64, a.dnk.k as u64);
    let mut r = Report::new("verify jacobi");
    r.param("d", d).param("n", n).param("k", k).param("points", &a.points);
    for p in &a.points {
        let x = parse_rational(p)?;
        let direct = mp_clone_polynomial(d, n, k, &x);
        let jac = mp_clone_polynomial_via_jacobi(d, n, k, &x)?;
        r.check(Check::exact(&format!("x={}", format_rational(&x)), format_rational(&direct), format_rational(&jac)));
    }
    Ok(r)
}

fn mc_stream(g: &Global, id: u64) -> RngStream {
    RngStream::new(g.seed, id)
}

fn moment_checks(r: &mut Report, name: &str, est: &symsub::randomness::OperatorEstimate, exact: &Operator, g: &Global) -> Result<(), CliError> {
    let check = est.compare(exact)?;
    let sigmas = DEFAULT_SIGMAS * g.tol_scale;
    r.datum(&format!("{name}_std_error"), check.std_error);
    r.datum(&format!("{name}_z"), check.z);
    r.check(Check {
        name: format!("{name} frobenius error"),
        expected: float(0.0),
        actual: float(check.error),
        tolerance: Some(sigmas * check.std_error),
        pass: check.passes(sigmas, f64::INFINITY),
    });
    Ok(())
}

pub fn verify_wick(a: &WickArgs, g: &Global) -> Outcome {
    let lim = g.limits();
    let samples = g.samples_or(MC_SAMPLES);
    let field = match a.field {
        FieldArg::Real => Field::Real,
        FieldArg::Complex => Field::Complex,
    };
    let mut r = Report::new("verify wick");
    r.param("d", a.d).param("n", a.n).param("field", field).param("samples", samples).param("seed", g.seed);
    let scale_pow = (a.d as f64).powi(-(a.n as i32));
    let exact = match field {
        Field::Complex => {
            let nfact: f64 = (1..=a.n).map(|j| j as f64).product();
            sym_projector(a.d, a.n, &lim)?.scale_real(nfact * scale_pow)
        }
        Field::Real => matching_sum(a.d, a.n, &lim)?.scale_real(scale_pow),
    };
    if field == Field::Real {
        let perms = enumerate_permutations(a.n, &lim)?;
        let worst = perms
            .iter()
            .map(|pi| {
                let lhs = matching_operator(a.d, &Matching::from_permutation(pi), &lim)?;
                Ok(lhs.sub(&permutation_operator(a.d, pi, &lim)?)?.max_abs_entry())
            })
            .collect::<Result<Vec<f64>, CliError>>()?
            .into_iter()
            .fold(0.0, f64::max);
        r.check(Check::close("permutation matchings equal permutation operators", 0.0, worst, 0.0));
        if a.n == 2 {
            let d = a.d as f64;
            let id = Operator::identity(copies(a.d, 2));
            let swap = permutation_operator(a.d, &symsub::tensorspace::Permutation::transposition(2, 0, 1), &lim)?;
            let mut phi = nalgebra::DVector::zeros(a.d * a.d);
            for i in 0..a.d {
                phi[i * a.d + i] = symsub::tensorspace::C64::new(d.sqrt().recip(), 0.0);
            }
            let phi = Operator::ket(phi, copies(a.d, 2))?.outer()?;
            let printed = id.add(&swap)?.scale_real(d.powi(-2)).add(&phi.scale_real(d.recip()))?;
            r.check(Check::at_most(
                "(I+SWAP)/d^2 + Φ/d equals the matching sum",
                1e-14 * g.tol_scale,
                printed.sub(&exact)?.frobenius_norm(),
            ));
        }
    }
    let est = mc_tensor_power_mean(Sampler::Gaussian { d: a.d, field }, a.n, samples, &mc_stream(g, 0), &lim)?;
    moment_checks(&mut r, "moment", &est, &exact, g)?;
    Ok(r)
}

pub fn verify_expdefinetti(a: &DNK, g: &Global) -> Outcome {
    let mut r = Report::new("verify expdefinetti");
    r.param("d", a.d).param("n", a.n).param("k", a.k);
    let res = verify_exp_definetti(a.d, a.n, a.k, &g.limits())?;
    r.check(Check::at_most("frobenius residual", RESIDUAL_TOL * g.tol_scale, res.residual));
    r.check(Check::holds("coefficients expand to the identity exactly", res.exact));
    Ok(r)
}

pub fn definetti_eps(a: &DNK, g: &Global) -> Outcome {
    let mut r = Report::new("definetti eps");
    r.param("d", a.d).param("n", a.n).param("k", a.k);
    let eps = definetti_epsilon(a.d as u64, a.n as u64, a.k as u64);
    r.datum("epsilon", &eps);
    let form = epsilon_form(a.d, a.n, a.k, &g.limits())?;
    r.datum("split", &form);
    r.check(Check::holds(
        &format!("1 - M_kk = {} <= {}", format_rational(&form.epsilon), format_rational(&form.epsilon_bound)),
        form.epsilon <= form.epsilon_bound,
    ));
    r.check(Check::at_least("remainder Choi minimum eigenvalue", -RESIDUAL_TOL * g.tol_scale, form.choi_min));
    r.check(Check::at_most("remainder trace-preservation error", RESIDUAL_TOL * g.tol_scale, form.trace_error));
    Ok(r)
}

pub fn definetti_coeffs(a: &DefinettiCoeffs, g: &Global) -> Outcome {
    let steps = a.r.unwrap_or(a.k);
    let mut r = Report::new("definetti coeffs");
    r.param("d", a.d).param("n", a.n).param("k", a.k).param("r", steps);
    let c = exp_definetti_coefficients(a.d, a.n, a.k, steps)?;
    r.datum("delta", format_rational(&c.delta));
    r.datum("truncation_tail", format_rational(&c.truncation_tail()));
    let mut t = Table::new(&["kind", "index", "value", "value_float"]);
    for (s, x) in c.x.iter().enumerate() {
        t.push(vec!["x".into(), Value::from(s), Value::String(format_rational(x)), float(to_f64(x))]);
    }
    for (i, y) in c.y.iter().enumerate() {
        t.push(vec!["y".into(), Value::from(steps as usize + i), Value::String(format_rational(y)), float(to_f64(y))]);
    }
    r.table = Some(t);
    r.check(Check::holds("expansion reproduces the partial trace exactly", expansion_is_exact(&c)));
    let bounds = check_coefficient_bounds(&c);
    r.datum("bounds_applicable", bounds.applicable);
    for b in &bounds.checks {
        r.check(Check {
            name: b.name.clone(),
            expected: Value::String(format!("<= {}", format_rational(&b.bound))),
            actual: Value::String(format_rational(&b.value)),
            tolerance: None,
            pass: b.pass,
        });
    }
    if (a.d as usize).checked_pow((a.n + a.k) as u32).is_some_and(|v| v <= g.limits().max_dim) {
        let res = verify_expansion(&c, &g.limits())?;
        r.check(Check::at_most("channel residual", RESIDUAL_TOL * g.tol_scale, res.residual));
    }
    Ok(r)
}

fn parse_gamma(s: &str) -> Result<f64, CliError> {
    match parse_rational(s) {
        Ok(q) => Ok(to_f64(&q)),
        Err(_) => s.parse::<f64>().or_else(|_| usage(format!("cannot parse gamma {s:?}"))),
    }
}

pub fn bound_tail(a: &TailArgs, g: &Global) -> Outcome {
    let part = MultiPartition::new(a.dims.clone(), &g.limits())?;
    let gamma = parse_gamma(&a.gamma)?;
    let mut r = Report::new("bound tail");
    r.param("dims", &a.dims).param("r", a.r).param("gamma", gamma).param("nmax", a.nmax);
    let res = tail_bound(&part, a.r, gamma, a.nmax)?;
    r.datum("n_star", res.n_star).datum("bound", res.bound);
    r.datum("threshold", product_state_threshold(&part, a.r));
    let mut t = Table::new(&["n", "bound", "ln_bound"]);
    for row in &res.per_n {
        t.push(vec![Value::from(row.n), float(row.value), float(row.ln_value)]);
    }
    r.table = Some(t);
    r.check(Check::holds("bound is finite and nonnegative", res.bound.is_finite() && res.bound >= 0.0));
    Ok(r)
}

pub fn bound_smoothgap(a: &SmoothGapArgs, g: &Global) -> Outcome {
    let mut r = Report::new("bound smoothgap");
    r.param("d", a.d).param("x", a.x);
    let s = smooth_gap_bound(a.d, a.x, &g.limits())?;
    r.datum("r", s.r).datum("n", s.n).datum("gamma", s.gamma);
    r.check(Check::at_most("single-n tail term vs d^-d", s.target, s.bound));
    Ok(r)
}

pub fn mc_moment(a: &MomentArgs, g: &Global) -> Outcome {
    let samples = g.samples_or(MC_SAMPLES);
    let mut r = Report::new("mc moment");
    r.param("dim", a.dim).param("r", a.r).param("n", a.n).param("samples", samples).param("seed", g.seed);
    let est = mc_projector_moment(a.dim, a.r, a.n, samples, &mc_stream(g, 0))?;
    let n = a.n as u64;
    let exact = BigRational::new(binomial(a.r as u64 + n - 1, n as i64), binomial(a.dim as u64 + n - 1, n as i64));
    r.datum("mean", est.mean).datum("std_error", est.std_error).datum("exact", format_rational(&exact));
    let sigmas = DEFAULT_SIGMAS * g.tol_scale;
    r.check(Check::close("moment", to_f64(&exact), est.mean, sigmas * est.std_error));
    Ok(r)
}

pub fn mc_schmidt(a: &SchmidtArgs, g: &Global) -> Outcome {
    let samples = g.samples_or(10_000);
    let mut r = Report::new("mc schmidt");
    r.param("d", a.d).param("epsilon", a.epsilon).param("samples", samples).param("seed", g.seed);
    let rep = experiment_schmidt_tail(a.d, samples, a.epsilon, &mc_stream(g, 0), &g.limits())?;
    r.datum("experiment", &rep);
    r.check(Check::at_most("exceedance fraction vs e^(-d eps)", rep.bound, rep.fraction));
    Ok(r)
}

pub fn mc_productfree(a: &ProductFreeArgs, g: &Global) -> Outcome {
    let part = MultiPartition::new(a.dims.clone(), &g.limits())?;
    let mut r = Report::new("mc productfree");
    r.param("dims", &a.dims).param("r", a.r).param("trials", a.trials).param("restarts", a.restarts).param("seed", g.seed);
    let rep = experiment_product_free(&part, a.r, a.trials, a.restarts, &mc_stream(g, 0))?;
    if !rep.threshold_met {
        r.datum("status", "threshold not met");
        return Ok(r);
    }
    let mut t = Table::new(&["trial", "nu"]);
    for (i, v) in rep.nu.iter().enumerate() {
        t.push(vec![Value::from(i), float(*v)]);
        r.check(Check::at_most(&format!("trial {i} product overlap"), rep.limit, *v));
    }
    r.datum("max_nu", rep.max_nu);
    r.table = Some(t);
    Ok(r)
}

pub fn mc_meanpower(a: &MeanPowerArgs, g: &Global) -> Outcome {
    let lim = g.limits();
    let samples = g.samples_or(MC_SAMPLES);
    let (d, n) = (a.d, a.n);
    let mut r = Report::new("mc meanpower");
    r.param("d", d).param("n", n).param("sampler", a.sampler.to_possible_value().map(|v| v.get_name().to_string())).param("samples", samples).param("seed", g.seed);
    let dn = (d as f64).powi(-(n as i32));
    let (sampler, exact) = match a.sampler {
        SamplerArg::Haar => {
            let dim = to_f64(&BigRational::from(sym_dim(d as u64, n as u64)));
            (Sampler::Haar { d }, sym_projector(d, n, &lim)?.scale_real(dim.recip()))
        }
        SamplerArg::GaussianComplex => {
            let nfact: f64 = (1..=n).map(|j| j as f64).product();
            (Sampler::Gaussian { d, field: Field::Complex }, sym_projector(d, n, &lim)?.scale_real(nfact * dn))
        }
        SamplerArg::GaussianReal => (Sampler::Gaussian { d, field: Field::Real }, matching_sum(d, n, &lim)?.scale_real(dn)),
        SamplerArg::RealUnit => (
            Sampler::RealUnit { d },
            matching_sum(d, n, &lim)?.scale_real(to_f64(&real_moment_ratio(d as u64, n as u64))),
        ),
    };
    let est = mc_tensor_power_mean(sampler, n, samples, &mc_stream(g, 0), &lim)?;
    moment_checks(&mut r, "moment", &est, &exact, g)?;
    Ok(r)
}
