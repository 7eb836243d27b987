//! Command-line front end. Every subcommand writes a report (JSON by
//! default, CSV on request) that starts with the resolved configuration.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a verification
//! suite fails.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analytic::{
    explosion_time, malthusian_rate, AnalyticContext, AsymptoticProfile, WeightVector,
};
use crate::error::{Error, Result};
use crate::exact::{effective_reproduction, lemma1_series, spine_dp, urn_dp};
use crate::model::{parse_law, Initial, LawFile, ModelParams};
use crate::ode::{integrate_m, ratio_monotonicity_check};
use crate::report::{json_num, to_json, Format, Report};
use crate::sim::stats::chi_square_geometric;
use crate::sim::{
    estimate_yule_functional, simulate_rgw, simulate_spine, simulate_yule, trajectories_csv,
    variance_warning, Estimate, SimConfig, THREADS_ENV,
};
use crate::verify::{all_passed, run_suite, Suite};

#[derive(Debug, Parser)]
#[command(name = "rgw", version, about = "Reinforced Galton-Watson processes: rates, exact moments, flows and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Common {
    /// Reproduction law as "k:p,k:p,...".
    #[arg(long, conflicts_with = "law_file")]
    law: Option<String>,
    /// JSON file {"law": {"0": 0.5, "2": 0.5}, "q": 0.5}.
    #[arg(long)]
    law_file: Option<PathBuf>,
    /// Memory parameter in (0, 1); overrides the law file.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, default_value_t = 10_000)]
    replicas: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    /// "law" or a fixed first-generation size.
    #[arg(long, default_value = "law")]
    initial: Initial,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Malthusian rate, bounds and exponents.
    Rate {
        #[command(flatten)]
        common: Common,
    },
    /// Exact E[Z(n)] for n = 0..N.
    Moments {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value = "law")]
        initial: Initial,
        /// Use the urn recursion instead of the spine recursion.
        #[arg(long)]
        urn: bool,
    },
    /// Monte Carlo estimate of E[Z(n)].
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Average spine products instead of simulating populations.
        #[arg(long)]
        spine: bool,
    },
    /// Multitype Yule process at time t.
    Yule {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// With --c, estimate E_ℓ[∏(cj)^{Y_j(t)}].
        #[arg(long, requires = "c")]
        ell: Option<u32>,
        #[arg(long, requires = "ell")]
        c: Option<f64>,
    },
    /// Integrate the moment ODE for a_j = c·j and compare with the closed form.
    OdeCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        /// Horizon; defaults to 0.9 ρ(a), or 5 when ρ(a) is infinite.
        #[arg(long)]
        t: Option<f64>,
    },
    /// γ and first-order constants, with exact values at generation n.
    Asymptotics {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long)]
        ell: Option<u32>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_params(common: &Common) -> Result<ModelParams> {
    let (law, file_q) = match (&common.law, &common.law_file) {
        (Some(text), None) => (parse_law(text)?, None),
        (None, Some(path)) => {
            let file = LawFile::load(path)?;
            (file.to_law()?, file.q)
        }
        _ => return Err(Error::Parse("give exactly one of --law and --law-file".into())),
    };
    let q = common
        .q
        .or(file_q)
        .ok_or_else(|| Error::Parse("--q is required when the law file has no q".into()))?;
    ModelParams::new(law, q)
}

fn format_of(f: FormatArg) -> Format {
    match f {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    }
}

fn base(command: &str, p: &ModelParams) -> Report {
    Report::new(command)
        .config("law", p.law.to_text())
        .config_num("q", p.q())
}

fn sim_config(sim: &SimArgs) -> Result<SimConfig> {
    let cfg = SimConfig::new(sim.seed, sim.replicas)
        .with_cap(sim.cap)
        .with_initial(sim.initial);
    cfg.validate()?;
    Ok(cfg)
}

fn with_sim(r: Report, cfg: &SimConfig) -> Report {
    r.config("seed", cfg.seed)
        .config("replicas", cfg.replicas)
        .config("cap", cfg.population_cap)
        .config("initial", cfg.initial.to_string())
        .config("threads", std::env::var(THREADS_ENV).unwrap_or_else(|_| "auto".into()))
}

fn estimate_value(e: &Estimate, seed: u64) -> Value {
    e.to_json(seed)
}

/// Output of one command: the rendered text, its sink and the exit code.
struct Outcome {
    text: String,
    out: Option<PathBuf>,
    code: i32,
    warnings: Vec<String>,
}

fn execute(cmd: Command) -> Result<Outcome> {
    let mut warnings = vec![];
    let (report, format, out, code) = match cmd {
        Command::Rate { common } => {
            let p = load_params(&common)?;
            let r = malthusian_rate(&p)?;
            let report = base("rate", &p)
                .config_num("quadrature_rel_tol", 1e-14)
                .results_from(&r)
                .result("bounds", json!([json_num(r.lower), json_num(r.upper)]))
                .result("kstar", p.law.kstar())
                .result_num("mean", p.law.mean());
            (report, common.format, common.out, 0)
        }
        Command::Moments { common, n, initial, urn } => {
            let p = load_params(&common)?;
            initial.check(&p.law)?;
            let table = if urn {
                if initial != Initial::Law {
                    return Err(Error::Domain("the urn recursion computes E[Z(n)] under the law only".into()));
                }
                urn_dp(&p, n)?
            } else {
                spine_dp(&p, n, initial)?
            };
            let ratios = effective_reproduction(&table).ok();
            let rows = (0..=n)
                .map(|k| {
                    let ratio = ratios.as_ref().and_then(|r| r.get(k)).copied();
                    vec![
                        json!(k),
                        json_num(table.values[k]),
                        json_num(table.scaled[k]),
                        ratio.map_or(Value::Null, json_num),
                    ]
                })
                .collect();
            let report = base("moments", &p)
                .config("n", n)
                .config("initial", initial.to_string())
                .config("method", if urn { "urn" } else { "spine" })
                .config_num("scale", table.scale)
                .table(&["n", "EZ", "scaled", "ratio"], rows);
            (report, common.format, common.out, 0)
        }
        Command::Simulate { common, sim, n, spine } => {
            let p = load_params(&common)?;
            let cfg = sim_config(&sim)?;
            cfg.initial.check(&p.law)?;
            let exact = spine_dp(&p, n, cfg.initial).ok().map(|t| t.values[n]);
            let report = with_sim(base("simulate", &p), &cfg)
                .config("n", n)
                .config("method", if spine { "spine" } else { "population" });
            if spine {
                let e = simulate_spine(&p, n, &cfg)?;
                let mut report = report.result("estimate", estimate_value(&e, cfg.seed));
                if let Some(x) = exact {
                    report = report.result_num("exact", x).result_num("z_score", e.z_score(x, 0.0));
                }
                (report, common.format, common.out, 0)
            } else {
                let ts = simulate_rgw(&p, n, &cfg)?;
                if matches!(common.format, FormatArg::Csv) {
                    let mut text = String::new();
                    for line in report.render(Format::Csv).lines().take_while(|l| l.starts_with('#')) {
                        text.push_str(line);
                        text.push('\n');
                    }
                    text.push_str(&trajectories_csv(&ts));
                    return Ok(Outcome { text, out: common.out, code: 0, warnings });
                }
                let e = Estimate::from_trajectories(&ts, n)?;
                let mut report = report.result("estimate", estimate_value(&e, cfg.seed));
                if let Some(x) = exact {
                    report = report.result_num("exact", x).result_num("z_score", e.z_score(x, 0.0));
                }
                (report, common.format, common.out, 0)
            }
        }
        Command::Yule { common, sim, t, ell, c } => {
            let p = load_params(&common)?;
            let cfg = sim_config(&sim)?;
            let report = with_sim(base("yule", &p), &cfg).config_num("t", t);
            match (ell, c) {
                (Some(ell), Some(c)) => {
                    warnings.extend(variance_warning(&p, c));
                    let e = estimate_yule_functional(&p, ell, c, t, &cfg)?;
                    let mut report = report
                        .config("ell", ell)
                        .config_num("c", c)
                        .result("estimate", estimate_value(&e, cfg.seed));
                    match lemma1_series(&p, ell, c, t, None) {
                        Ok(s) => {
                            report = report
                                .result("series", to_json(&s))
                                .result_num("z_score", e.z_score(s.value, s.tail_bound));
                        }
                        Err(err) => warnings.push(format!("series not available: {err}")),
                    }
                    (report, common.format, common.out, 0)
                }
                _ => {
                    let samples = simulate_yule(&p, t, &cfg)?;
                    let sizes: Vec<Option<f64>> = samples.iter().map(|s| (!s.capped).then(|| s.size() as f64)).collect();
                    let e = Estimate::from_samples(&sizes)?;
                    let complete: Vec<u64> = samples.iter().filter(|s| !s.capped).map(|s| s.size() as u64).collect();
                    let mut report = report
                        .result("size", estimate_value(&e, cfg.seed))
                        .result_num("expected_size", t.exp());
                    if t > 0.0 {
                        if let Ok(test) = chi_square_geometric(&complete, (-t).exp()) {
                            report = report.result("geometric_fit", to_json(&test));
                        }
                    }
                    let mut totals = vec![0u64; p.law.support().len()];
                    for s in samples.iter().filter(|s| !s.capped) {
                        for (i, (_, k)) in s.counts(&p).iter().enumerate() {
                            totals[i] += k;
                        }
                    }
                    let used = e.replicas_used as f64;
                    let rows = p
                        .law
                        .support()
                        .iter()
                        .zip(&totals)
                        .map(|(&j, &k)| vec![json!(j), json_num(k as f64 / used)])
                        .collect();
                    (report.table(&["type", "mean_count"], rows), common.format, common.out, 0)
                }
            }
        }
        Command::OdeCheck { common, c, t } => {
            let p = load_params(&common)?;
            let a = WeightVector::linear(&p.law, c)?;
            let rho = explosion_time(&p, &a)?;
            let t_max = t.unwrap_or(if rho.is_finite() { 0.9 * rho } else { 5.0 });
            let rel_tol = 1e-10;
            let sol = integrate_m(&p, &a, t_max, rel_tol)?;
            let ctx = AnalyticContext::new(&p, a.clone())?;
            let mut sup: f64 = 0.0;
            let mut rows = vec![];
            for (time, vals) in sol.grid.iter().zip(&sol.values) {
                let closed = ctx.mgf_vector(*time)?;
                let mut row = vec![json_num(*time)];
                for (v, w) in vals.iter().zip(&closed) {
                    if *w != 0.0 {
                        sup = sup.max((v / w - 1.0).abs());
                    }
                    row.push(json_num(*v));
                }
                rows.push(row);
            }
            let support = p.law.support().to_vec();
            let positive: Vec<u32> = support.iter().copied().filter(|&j| j > 0).collect();
            let monotone = positive
                .windows(2)
                .map(|w| ratio_monotonicity_check(&sol, w[0], w[1]))
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .all(|b| b);
            let mut columns = vec!["t".to_string()];
            columns.extend(support.iter().map(|j| format!("M{j}")));
            let report = base("ode-check", &p)
                .config_num("c", c)
                .config_num("t_max", t_max)
                .config_num("rel_tol", rel_tol)
                .result_num("explosion_time", rho)
                .result_num("sup_relative_deviation", sup)
                .result("accepted_steps", sol.accepted)
                .result("rejected_steps", sol.rejected)
                .result("ratios_monotone", monotone)
                .table(&columns, rows);
            (report, common.format, common.out, 0)
        }
        Command::Asymptotics { common, n, ell } => {
            let p = load_params(&common)?;
            let prof = AsymptoticProfile::new(&p)?;
            let points: Vec<u32> = match ell {
                Some(l) if p.law.contains(l) => vec![l],
                Some(l) => return Err(Error::Domain(format!("{l} is not a support point"))),
                None => p.law.support().to_vec(),
            };
            let mut rows = vec![];
            for l in points {
                let limit = prof.constant(l)?;
                let table = spine_dp(&p, n, Initial::Fixed(l))?;
                let power = if l == prof.kstar || l == 0 { 0.0 } else { 1.0 / prof.beta };
                let r = (n as f64).powf(power) * table.scaled[n];
                rows.push(vec![json!(l), json_num(limit), json_num(r), json_num(power)]);
            }
            let report = base("asymptotics", &p)
                .config("n", n)
                .results_from(&prof)
                .result_num("error_exponent", 1.0 / prof.beta)
                .table(&["ell", "limit", "exact_at_n", "n_power"], rows);
            (report, common.format, common.out, 0)
        }
        Command::Verify { suite, seed, format, out } => {
            let suite: Suite = suite.parse()?;
            let results = run_suite(suite, seed);
            let ok = all_passed(&results);
            let rows = results
                .iter()
                .map(|r| {
                    vec![
                        json!(r.id),
                        json!(r.name),
                        json!(if r.passed { "PASS" } else { "FAIL" }),
                        json!(r.required),
                        json!(r.detail),
                    ]
                })
                .collect();
            let failed: Vec<&str> = results.iter().filter(|r| r.required && !r.passed).map(|r| r.id.as_str()).collect();
            let report = Report::new("verify")
                .config("suite", suite.name())
                .config("seed", seed)
                .result("passed", ok)
                .result("failed", json!(failed))
                .table(&["id", "name", "status", "required", "detail"], rows);
            (report, format, out, if ok { 0 } else { 2 })
        }
    };
    Ok(Outcome {
        text: report.render(format_of(format)),
        out,
        code,
        warnings,
    })
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<O: Write, E: Write>(args: &[String], out: &mut O, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => 1,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match execute(cli.command) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            let written = match &outcome.out {
                Some(path) => std::fs::write(path, &outcome.text).map_err(Error::from),
                None => out.write_all(outcome.text.as_bytes()).map_err(Error::from),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return 1;
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
