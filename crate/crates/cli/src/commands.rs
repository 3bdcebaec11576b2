use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use urn_core::attributable::{
    a_from_s, feasible_s, hl_estimate_a, interval_a, neyman_predict_a, pvalue_s,
    standardized_pvalues, MseArm,
};
use urn_core::bayes::{
    a_posterior, hpd_interval_with, tau_posterior, DiscreteDistribution, HpdRule, Prior,
};
use urn_core::exact::{choose, to_f64};
use urn_core::moments::{
    estimate as moment_estimate, n01_bounds, sensitivity_sweep, BoundAssumption, Method,
};
use urn_core::oracle::{enumerate_with_cap, monte_carlo, DEFAULT_ENUMERATION_CAP, PRNG_NAME};
use urn_core::verify::{run_suite, Formulas, VerifyConfig};
use urn_core::{attributable, moments, ObservedTable, ScienceTable};

use crate::args::{
    AttributableInput, EstimateInput, HpdRuleArg, N01Max, PosteriorInput, SensitivityInput,
    SimulateInput, Target, VerifyInput,
};
use crate::error::CliError;
use crate::output::{
    human, machine, num, opt_machine, opt_num, Report, Table, EXIT_OK, EXIT_VERIFY_FAILED,
};

pub const CAP_ENV: &str = "URN_ENUM_CAP";

fn counts4(values: &[u64], what: &str) -> Result<[u64; 4], CliError> {
    values.try_into().map_err(|_| {
        CliError::Usage(format!(
            "{what} needs exactly four counts, got {}",
            values.len()
        ))
    })
}

fn observed(values: &[u64]) -> Result<ObservedTable, CliError> {
    let [a, b, c, d] = counts4(values, "an observed table")?;
    Ok(ObservedTable::new(a, b, c, d)?)
}

fn table_line(o: &ObservedTable) -> String {
    let [a, b, c, d] = o.counts();
    format!(
        "observed (n11, n10, n01, n00) = ({a}, {b}, {c}, {d}), N1 = {}, N0 = {}",
        o.n1(),
        o.n0()
    )
}

fn input_value<T: serde::Serialize>(input: &T) -> Value {
    serde_json::to_value(input).expect("inputs serialize")
}

fn percent(level: f64) -> String {
    let p = level * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{p:.0}%")
    } else {
        format!("{p}%")
    }
}

fn enumeration_cap() -> Result<u64, CliError> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Usage(format!("{CAP_ENV} must be a positive integer, got `{v}`"))
        }),
        Err(_) => Ok(DEFAULT_ENUMERATION_CAP),
    }
}

pub fn estimate(input: &EstimateInput) -> Result<Report, CliError> {
    let o = observed(&input.table)?;
    let mut methods: Vec<Method> = input.method.iter().flat_map(|m| m.methods()).collect();
    methods.dedup();
    let mut text = format!("{}\n", table_line(&o));
    let mut rows = Vec::new();
    let mut result = Vec::new();
    for m in methods {
        let ci = moment_estimate(&o, m, input.n01, input.level)?;
        let n01 = if m == Method::Sensitivity {
            Some(input.n01)
        } else {
            None
        };
        let label = match n01 {
            Some(k) => format!("{} (n01 = {k})", m.as_str()),
            None => m.as_str().to_string(),
        };
        writeln!(
            text,
            "{label:<26} {} [{}, {}] {}  ({} interval, length)",
            human(ci.point),
            human(ci.lower),
            human(ci.upper),
            human(ci.length()),
            percent(ci.level)
        )
        .unwrap();
        rows.push(vec![
            m.as_str().to_string(),
            n01.map(|k| k.to_string()).unwrap_or_default(),
            machine(ci.level),
            machine(ci.point),
            machine(ci.lower),
            machine(ci.upper),
            machine(ci.length()),
        ]);
        result.push(json!({
            "method": m.as_str(),
            "n01": n01,
            "level": num(ci.level),
            "point": num(ci.point),
            "lower": num(ci.lower),
            "upper": num(ci.upper),
            "length": num(ci.length()),
        }));
    }
    Ok(Report {
        schema: "urn.estimate.v1",
        input: input_value(input),
        result: Value::Array(result),
        text,
        table: Table {
            schema: "urn.estimate.v1",
            columns: vec![
                "method", "n01", "level", "point", "lower", "upper", "length",
            ],
            rows,
        },
        exit_code: EXIT_OK,
    })
}

/// `floor(N p0_hat (1 - p1_hat))`, the harmed-unit count at which potential
/// outcomes would be uncorrelated.
fn auto_n01_max(o: &ObservedTable) -> u64 {
    let num = o.total() as u128 * o.n01() as u128 * o.n10() as u128;
    (num / (o.n0() as u128 * o.n1() as u128)) as u64
}

fn bounds_text(o: &ObservedTable) -> String {
    let mut parts = Vec::new();
    for (name, a) in [
        ("margins only", BoundAssumption::Frechet),
        (
            "nonnegative correlation",
            BoundAssumption::NonnegCorrelation,
        ),
        (
            "nonnegative correlation and effect",
            BoundAssumption::NonnegCorrelationAndEffect,
        ),
    ] {
        let range = match n01_bounds(o, a) {
            Ok((lo, hi)) => format!("[{lo}, {hi}]"),
            Err(_) => "empty".to_string(),
        };
        parts.push(format!("{name} {range}"));
    }
    format!("plausible n01: {}", parts.join("; "))
}

fn posterior_summary(
    o: &ObservedTable,
    n01: u64,
    level: f64,
    rule: HpdRule,
) -> Option<(DiscreteDistribution, f64, f64)> {
    let d = tau_posterior(o, n01, &Prior::Uniform).ok()?;
    let ci = hpd_interval_with(&d, level, rule);
    Some((d, ci.lower, ci.upper))
}

pub fn sensitivity(input: &SensitivityInput) -> Result<Report, CliError> {
    let o = observed(&input.table)?;
    let values: Vec<u64> = if input.n01_list.is_empty() {
        let max = match input.n01_max {
            N01Max::Auto => auto_n01_max(&o),
            N01Max::Value(v) => v,
        };
        (0..=max).collect()
    } else {
        input.n01_list.clone()
    };
    let curve = sensitivity_sweep(&o, values.iter().copied(), input.level);
    let rule: HpdRule = input.hpd_rule.into();

    let mut text = format!("{}\n{}\n", table_line(&o), bounds_text(&o));
    writeln!(
        text,
        "{:>5}  {:>8}  {:>17}  {:>7}  {:>10}  {:>17}",
        "n01",
        "estimate",
        format!("{} CI", percent(input.level)),
        "length",
        "post. mode",
        format!("{} HPD", percent(input.level))
    )
    .unwrap();
    let mut rows = Vec::new();
    let mut result = Vec::new();
    for row in &curve.rows {
        let post = posterior_summary(&o, row.n01, input.level, rule);
        let ci = row.interval;
        let moment_cell = match ci {
            Some(ci) => format!("[{}, {}]", human(ci.lower), human(ci.upper)),
            None => "infeasible".into(),
        };
        let post_cell = match &post {
            Some((_, lo, hi)) => format!("[{}, {}]", human(*lo), human(*hi)),
            None => "empty support".into(),
        };
        writeln!(
            text,
            "{:>5}  {:>8}  {:>17}  {:>7}  {:>10}  {:>17}",
            row.n01,
            human(row.point),
            moment_cell,
            row.length().map(human).unwrap_or_default(),
            post.as_ref()
                .map(|(d, _, _)| human(d.mode()))
                .unwrap_or_default(),
            post_cell
        )
        .unwrap();
        let mode = post.as_ref().map(|(d, _, _)| d.mode());
        let (plo, phi) = match &post {
            Some((_, lo, hi)) => (Some(*lo), Some(*hi)),
            None => (None, None),
        };
        rows.push(vec![
            row.n01.to_string(),
            machine(row.point),
            opt_machine(row.variance),
            opt_machine(ci.map(|c| c.lower)),
            opt_machine(ci.map(|c| c.upper)),
            opt_machine(row.length()),
            opt_machine(mode),
            opt_machine(plo),
            opt_machine(phi),
        ]);
        result.push(json!({
            "n01": row.n01,
            "point": num(row.point),
            "variance": opt_num(row.variance),
            "lower": opt_num(ci.map(|c| c.lower)),
            "upper": opt_num(ci.map(|c| c.upper)),
            "length": opt_num(row.length()),
            "posterior_mode": opt_num(mode),
            "hpd_lower": opt_num(plo),
            "hpd_upper": opt_num(phi),
        }));
    }
    Ok(Report {
        schema: "urn.sensitivity.v1",
        input: input_value(input),
        result: json!({ "level": num(input.level), "rows": result }),
        text,
        table: Table {
            schema: "urn.sensitivity.v1",
            columns: vec![
                "n01",
                "point",
                "variance",
                "lower",
                "upper",
                "length",
                "posterior_mode",
                "hpd_lower",
                "hpd_upper",
            ],
            rows,
        },
        exit_code: EXIT_OK,
    })
}

fn read_prior(path: &Path) -> Result<Prior, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut entries = Vec::new();
    let mut bad = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("record {line}: {e}"));
                continue;
            }
        };
        let fields: Vec<&str> = record.iter().collect();
        if i == 0
            && fields
                .first()
                .is_some_and(|f| f.eq_ignore_ascii_case("n10"))
        {
            continue;
        }
        let parsed = match fields.as_slice() {
            [n10, n11, w] => match (n10.parse::<u64>(), n11.parse::<u64>(), w.parse::<f64>()) {
                (Ok(a), Ok(b), Ok(c)) => Some((a, b, c)),
                _ => None,
            },
            _ => None,
        };
        match parsed {
            Some(e) => entries.push(e),
            None => bad.push(format!("record {line}: `{}`", fields.join(","))),
        }
    }
    if !bad.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: expected rows `n10,n11,weight`; offending entries: {}",
            path.display(),
            bad.join("; ")
        )));
    }
    if entries.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no prior entries",
            path.display()
        )));
    }
    Prior::from_entries(entries).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn posterior(input: &PosteriorInput) -> Result<Report, CliError> {
    let o = observed(&input.table)?;
    let prior = match &input.prior_file {
        Some(p) => read_prior(p)?,
        None => Prior::Uniform,
    };
    let (d, name) = match input.target {
        Target::Tau => (tau_posterior(&o, input.n01, &prior)?, "tau"),
        Target::A => (a_posterior(&o, input.n01, &prior)?, "A"),
    };
    let hpd = hpd_interval_with(&d, input.level, input.hpd_rule.into());
    let target = match input.target {
        Target::Tau => "tau",
        Target::A => "a",
    };

    let mut text = format!("{}\n", table_line(&o));
    let label_unit = if d.scale() == 1 {
        String::new()
    } else {
        format!("/{}", d.scale())
    };
    writeln!(
        text,
        "posterior of {name} at n01 = {}: mode {}{label_unit} = {}, median {}, mean {}",
        input.n01,
        d.mode_label(),
        human(d.mode()),
        human(d.median()),
        human(d.mean())
    )
    .unwrap();
    writeln!(
        text,
        "{} HPD ({}): [{}, {}]",
        percent(input.level),
        match input.hpd_rule {
            HpdRuleArg::Shortest => "shortest window",
            HpdRuleArg::OneStepPast => "one step past",
        },
        human(hpd.lower),
        human(hpd.upper)
    )
    .unwrap();
    writeln!(text, "{:>8}  {:>8}  {:>8}", "label", "value", "mass").unwrap();
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    for (i, &label) in d.support().iter().enumerate() {
        let (value, mass) = (d.value(i), d.mass()[i]);
        writeln!(text, "{label:>8}  {:>8}  {:>8}", human(value), human(mass)).unwrap();
        rows.push(vec![
            target.to_string(),
            input.n01.to_string(),
            label.to_string(),
            machine(value),
            machine(mass),
        ]);
        curve.push(json!({ "label": label, "value": num(value), "mass": num(mass) }));
    }
    Ok(Report {
        schema: "urn.posterior.v1",
        input: input_value(input),
        result: json!({
            "target": target,
            "n01": input.n01,
            "scale": d.scale(),
            "mode": num(d.mode()),
            "mode_label": d.mode_label(),
            "median": num(d.median()),
            "mean": num(d.mean()),
            "hpd": { "level": num(input.level), "lower": num(hpd.lower), "upper": num(hpd.upper) },
            "curve": curve,
        }),
        text,
        table: Table {
            schema: "urn.posterior.v1",
            columns: vec!["target", "n01", "label", "value", "mass"],
            rows,
        },
        exit_code: EXIT_OK,
    })
}

fn set_text(values: &[i64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", inner.join(", "))
}

pub fn attributable(input: &AttributableInput) -> Result<Report, CliError> {
    let o = observed(&input.table)?;
    let hl = hl_estimate_a(&o);
    let inv = interval_a(&o, input.alpha)?;
    let post = a_posterior(&o, 0, &Prior::Uniform)?;
    let hpd = hpd_interval_with(&post, input.level, input.hpd_rule.into());
    let arm = input.mse_arm();
    let pred = neyman_predict_a(&o, input.level, arm);
    let mse = attributable::prediction_mse(&o, arm);
    let arm_name = match arm {
        MseArm::Control => "control",
        MseArm::Treated => "treated",
    };

    let mut text = format!("{}\n", table_line(&o));
    writeln!(text, "Hodges-Lehmann estimate of A: {}", set_text(&hl)).unwrap();
    writeln!(
        text,
        "exact tests of size {} retain A in [{}, {}] ({} values{})",
        input.alpha,
        inv.estimate.lower,
        inv.estimate.upper,
        inv.retained.len(),
        if inv.contiguous {
            ""
        } else {
            ", not contiguous"
        }
    )
    .unwrap();
    writeln!(
        text,
        "posterior under monotonicity: mode {}, {} HPD [{}, {}]",
        post.mode_label(),
        percent(input.level),
        hpd.lower,
        hpd.upper
    )
    .unwrap();
    writeln!(
        text,
        "prediction N1 tau_hat = {}, {} interval [{}, {}] ({}-arm variance)",
        human(pred.point),
        percent(input.level),
        human(pred.lower),
        human(pred.upper),
        arm_name
    )
    .unwrap();

    let pvalue_curve = if input.pvalues {
        let standardized = standardized_pvalues(&o)?;
        let mut rows = Vec::new();
        for s in feasible_s(&o) {
            let a = a_from_s(&o, s);
            let p = pvalue_s(&o, s)?;
            rows.push((a, s, p, standardized.mass_at(a)));
        }
        rows.sort_by_key(|r| r.0);
        Some(rows)
    } else {
        None
    };

    let mut result = json!({
        "hodges_lehmann": hl,
        "inversion": {
            "alpha": num(input.alpha),
            "lower": inv.estimate.lower,
            "upper": inv.estimate.upper,
            "retained": inv.retained,
            "contiguous": inv.contiguous,
        },
        "posterior": {
            "n01": 0,
            "mode": post.mode_label(),
            "level": num(input.level),
            "hpd_lower": hpd.lower,
            "hpd_upper": hpd.upper,
        },
        "prediction": {
            "arm": arm_name,
            "mse": num(mse),
            "point": num(pred.point),
            "lower": num(pred.lower),
            "upper": num(pred.upper),
            "level": num(input.level),
        },
    });

    let table = match &pvalue_curve {
        Some(curve) => {
            writeln!(
                text,
                "{:>5}  {:>5}  {:>8}  {:>12}",
                "A", "s", "p-value", "standardized"
            )
            .unwrap();
            for (a, s, p, m) in curve {
                writeln!(text, "{a:>5}  {s:>5}  {:>8}  {:>12}", human(*p), human(*m)).unwrap();
            }
            result["pvalues"] = Value::Array(
                curve
                    .iter()
                    .map(|(a, s, p, m)| json!({ "a": a, "s": s, "pvalue": num(*p), "standardized": num(*m) }))
                    .collect(),
            );
            Table {
                schema: "urn.attributable-pvalues.v1",
                columns: vec!["a", "s", "pvalue", "standardized"],
                rows: curve
                    .iter()
                    .map(|(a, s, p, m)| {
                        vec![a.to_string(), s.to_string(), machine(*p), machine(*m)]
                    })
                    .collect(),
            }
        }
        None => {
            let hl_mid = hl.iter().sum::<i64>() as f64 / hl.len() as f64;
            let join = |v: &[i64]| {
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            };
            Table {
                schema: "urn.attributable.v1",
                columns: vec!["quantity", "point", "lower", "upper", "values"],
                rows: vec![
                    vec![
                        "hodges-lehmann".into(),
                        machine(hl_mid),
                        hl[0].to_string(),
                        hl[hl.len() - 1].to_string(),
                        join(&hl),
                    ],
                    vec![
                        "exact-inversion".into(),
                        machine(inv.estimate.point),
                        machine(inv.estimate.lower),
                        machine(inv.estimate.upper),
                        join(&inv.retained),
                    ],
                    vec![
                        "posterior-hpd".into(),
                        post.mode_label().to_string(),
                        machine(hpd.lower),
                        machine(hpd.upper),
                        String::new(),
                    ],
                    vec![
                        format!("prediction-{arm_name}"),
                        machine(pred.point),
                        machine(pred.lower),
                        machine(pred.upper),
                        String::new(),
                    ],
                ],
            }
        }
    };

    Ok(Report {
        schema: "urn.attributable.v1",
        input: input_value(input),
        result,
        text,
        table,
        exit_code: EXIT_OK,
    })
}

pub fn verify(input: &VerifyInput) -> Result<Report, CliError> {
    if input.max_n < 2 {
        return Err(CliError::Usage(format!(
            "--max-n must be at least 2, got {}",
            input.max_n
        )));
    }
    if input.mc_draws == 0 {
        return Err(CliError::Usage("--mc-draws must be positive".into()));
    }
    let cap = enumeration_cap()?;
    let widest = choose(input.max_n, input.max_n / 2);
    if widest > cap.into() {
        return Err(CliError::Usage(format!(
            "--max-n {} needs C({}, {}) = {widest} assignments, above the enumeration cap {cap} (set {CAP_ENV} to raise it)",
            input.max_n,
            input.max_n,
            input.max_n / 2
        )));
    }
    let config = VerifyConfig {
        max_n: input.max_n,
        seed: input.seed,
        cap,
        mc_draws: input.mc_draws,
    };
    let report = run_suite(&config, &Formulas::default())?;
    let passed = report.passed();

    let mut text = format!(
        "{} science tables, {} designs, {} checks; {} failures; seeded Monte Carlo {}\n",
        report.tables,
        report.designs,
        report.checks,
        report.failures.len(),
        if report.monte_carlo_deterministic {
            "repeatable"
        } else {
            "NOT repeatable"
        }
    );
    for f in report.failures.iter().take(50) {
        let [a, b, c, d] = f.science.counts();
        writeln!(
            text,
            "FAIL {} science ({a}, {b}, {c}, {d}) N1 = {}: {}",
            f.check, f.n1, f.detail
        )
        .unwrap();
    }
    if report.failures.len() > 50 {
        writeln!(text, "... {} more", report.failures.len() - 50).unwrap();
    }
    text.push_str(if passed { "PASS\n" } else { "FAIL\n" });

    let rows = report
        .failures
        .iter()
        .map(|f| {
            let [a, b, c, d] = f.science.counts();
            vec![
                f.check.to_string(),
                a.to_string(),
                b.to_string(),
                c.to_string(),
                d.to_string(),
                f.n1.to_string(),
                f.detail.clone(),
            ]
        })
        .collect();
    Ok(Report {
        schema: "urn.verify.v1",
        input: input_value(input),
        result: json!({
            "passed": passed,
            "tables": report.tables,
            "designs": report.designs,
            "checks": report.checks,
            "cap": cap,
            "prng": PRNG_NAME,
            "monte_carlo_deterministic": report.monte_carlo_deterministic,
            "failures": report.failures,
        }),
        text,
        table: Table {
            schema: "urn.verify-failures.v1",
            columns: vec!["check", "N11", "N10", "N01", "N00", "n1", "detail"],
            rows,
        },
        exit_code: if passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
    })
}

// Observed tables with probability or frequency, plus the exact fraction when known.
type Outcomes = Vec<(ObservedTable, f64, Option<String>)>;

pub fn simulate(input: &SimulateInput) -> Result<Report, CliError> {
    let [a, b, c, d] = counts4(&input.science, "a science table")?;
    let science = ScienceTable::new(a, b, c, d)?;
    let n1 = input
        .n1
        .ok_or_else(|| CliError::Usage("--n1 is required".into()))?;
    if n1 == 0 || n1 >= science.total() {
        return Err(CliError::Usage(format!(
            "--n1 must lie in 1..{}, got {n1}",
            science.total()
        )));
    }
    let truth_var = to_f64(&moments::population_variance(&science, n1));
    let truth_mse = to_f64(&attributable::population_prediction_mse(&science, n1));
    let tau = to_f64(&science.tau_exact());

    let (outcomes, tau_moments, err_moments, meta): (Outcomes, (f64, f64), (f64, f64), Value) =
        if input.exact {
            let dist = enumerate_with_cap(&science, n1, enumeration_cap()?)?;
            let (m, v) = dist.tau_hat_moments();
            let (em, ev) = dist.prediction_error_moments();
            let outcomes = dist
                .outcomes()
                .iter()
                .map(|(o, p)| (*o, to_f64(p), Some(p.to_string())))
                .collect();
            (
                outcomes,
                (to_f64(&m), to_f64(&v)),
                (to_f64(&em), to_f64(&ev)),
                json!({ "mode": "exact", "assignments": dist.total_assignments().to_string() }),
            )
        } else {
            let emp = monte_carlo(&science, n1, input.draws, input.seed)?;
            let outcomes = emp
                .outcome_frequencies()
                .into_iter()
                .map(|(o, f)| (o, f, None))
                .collect();
            (
                outcomes,
                emp.tau_hat_moments(),
                emp.prediction_error_moments(),
                json!({ "mode": "monte-carlo", "draws": input.draws, "seed": input.seed, "prng": PRNG_NAME }),
            )
        };

    let [a, b, c, d] = science.counts();
    let mut text = format!(
        "science (N11, N10, N01, N00) = ({a}, {b}, {c}, {d}), N1 = {n1}, tau = {}\n",
        human(tau)
    );
    match meta["mode"].as_str() {
        Some("exact") => writeln!(
            text,
            "exact enumeration of {} assignments",
            meta["assignments"].as_str().unwrap_or("")
        ),
        _ => writeln!(
            text,
            "{} draws, seed {}, generator {PRNG_NAME}",
            input.draws, input.seed
        ),
    }
    .unwrap();
    writeln!(
        text,
        "tau_hat: mean {}, variance {} (closed form {})",
        human(tau_moments.0),
        machine(tau_moments.1),
        machine(truth_var)
    )
    .unwrap();
    writeln!(
        text,
        "A - N1 tau_hat: mean {}, variance {} (closed form {})",
        human(err_moments.0),
        machine(err_moments.1),
        machine(truth_mse)
    )
    .unwrap();
    writeln!(text, "{} distinct observed tables", outcomes.len()).unwrap();

    let rows = outcomes
        .iter()
        .map(|(o, p, _)| {
            let [a, b, c, d] = o.counts();
            vec![
                a.to_string(),
                b.to_string(),
                c.to_string(),
                d.to_string(),
                machine(*p),
            ]
        })
        .collect();
    let tables: Vec<Value> = outcomes
        .iter()
        .map(|(o, p, exact)| json!({ "observed": o, "probability": num(*p), "exact": exact }))
        .collect();
    Ok(Report {
        schema: "urn.simulate.v1",
        input: input_value(input),
        result: json!({
            "meta": meta,
            "tau": num(tau),
            "tau_hat": { "mean": num(tau_moments.0), "variance": num(tau_moments.1), "closed_form_variance": num(truth_var) },
            "prediction_error": { "mean": num(err_moments.0), "variance": num(err_moments.1), "closed_form_variance": num(truth_mse) },
            "outcomes": tables,
        }),
        text,
        table: Table {
            schema: "urn.simulate.v1",
            columns: vec!["n11", "n10", "n01", "n00", "probability"],
            rows,
        },
        exit_code: EXIT_OK,
    })
}
