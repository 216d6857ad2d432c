use std::path::{Path, PathBuf};

use asymtail::copula::{CopulaKind, GumbelAlpha, ModelParams, QuadratureSpec};
use asymtail::infer::{
    fit, local_fit, parametric_bootstrap, pseudo_observations, CensoringConfig, CopulaFamily, FitOptions,
    LocalFitOptions, Method, PseudoSample, Scheme, TieBreak,
};
use asymtail::io::{self, Header, Schema, MIN_ALIGNED_ROWS};
use asymtail::sim::{rising_lower_schedule, sample_copula, sample_dynamic, sample_model, SeededGenerator};
use asymtail::special_fn::Correlation;
use asymtail::study::{run_study, write_report, Recipe, StudyConfig};
use asymtail::tail::{np_chi_moving, tail_summary, Tail};

use crate::{ChiArgs, Cli, Command, Failure, FitArgs, InputArgs, LocalFitArgs, SimulateArgs, StudyArgs, TailArg};

type Outcome = Result<(), Failure>;

const DEFAULT_CHI_GRID: [f64; 19] = [
    0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99, 0.995, 0.999,
];

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn run(cli: &Cli) -> Outcome {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("cannot size the worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Fit(a) => cmd_fit(cli, a),
        Command::Localfit(a) => cmd_localfit(cli, a),
        Command::Chi(a) => chi(cli, a),
        Command::Study(a) => study(cli, a),
    }
}

/// Header recording the invocation and the resolved configuration.
fn header(cli: &Cli, quad: Option<&QuadratureSpec>) -> Result<Header, Failure> {
    let mut config = serde_json::to_value(cli).map_err(|e| Failure::Other(e.to_string()))?;
    if let Some(q) = quad {
        config["quadrature"] = serde_json::to_value(q).map_err(|e| Failure::Other(e.to_string()))?;
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    Ok(Header::new()
        .with("command", args.join(" "))
        .with("seed", cli.common.seed.to_string())
        .with("config", config.to_string()))
}

fn quadrature(cli: &Cli, default: QuadratureSpec) -> Result<QuadratureSpec, Failure> {
    match cli.common.quad_n {
        Some(n) => Ok(QuadratureSpec::new(n, default.tail_mass_cut())?),
        None => Ok(default),
    }
}

fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn copula_kind(
    model: &Option<Vec<f64>>,
    gumbel: Option<f64>,
    gaussian: Option<f64>,
) -> Result<Option<CopulaKind>, Failure> {
    Ok(match (model, gumbel, gaussian) {
        (Some(v), _, _) => match v[..] {
            [dl, du, rho] => Some(CopulaKind::Model(ModelParams::new(dl, du, rho)?)),
            _ => {
                return Err(usage(format!(
                    "--model takes delta_l,delta_u,rho; got {} values",
                    v.len()
                )))
            }
        },
        (_, Some(a), _) => Some(CopulaKind::Gumbel(GumbelAlpha::new(a)?)),
        (_, _, Some(r)) => Some(CopulaKind::Gaussian(Correlation::new(r)?)),
        _ => None,
    })
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Outcome {
    let out = out_path(cli, "sample.csv");
    let mut g = SeededGenerator::new(cli.common.seed, 0);
    let h = header(cli, None)?;
    if let Some(schedule) = a.dynamic {
        let h = h.with("schedule", format!("{schedule:?}"));
        let us = sample_dynamic(&rising_lower_schedule(a.n), &mut g)?;
        return Ok(io::write_pairs(&out, &h, ("u1", "u2"), &us)?);
    }
    let kind = copula_kind(&a.model, a.gumbel, a.gaussian)?
        .ok_or_else(|| usage("choose one of --model, --gumbel, --gaussian or --dynamic"))?;
    let h = h.with("copula", kind.to_string());
    match kind {
        CopulaKind::Model(p) => {
            let xs = sample_model(&p, a.n, &mut g)?;
            let m = asymtail::dist::ModelMargin::from_params(&p);
            let us: Vec<(f64, f64)> = xs.iter().map(|&(x, y)| (m.cdf(x), m.cdf(y))).collect();
            io::write_model_sample(&out, &h, &xs, &us)?;
        }
        k => io::write_pairs(&out, &h, ("u1", "u2"), &sample_copula(&k, a.n, &mut g)?)?,
    }
    Ok(())
}

fn pick_columns(path: &Path, explicit: &Option<Vec<String>>) -> Result<(String, String), Failure> {
    match explicit.as_deref() {
        Some([a, b]) => return Ok((a.clone(), b.clone())),
        Some(c) => return Err(usage(format!("--columns takes two names, got {}", c.len()))),
        None => {}
    }
    let cols = io::read_columns(path)?;
    let has = |n: &str| cols.iter().any(|c| c == n);
    for (a, b) in [("u1", "u2"), ("x1", "x2")] {
        if has(a) && has(b) {
            return Ok((a.into(), b.into()));
        }
    }
    Err(Failure::Data(format!(
        "{}: no u1,u2 or x1,x2 columns; name the pair with --columns",
        path.display()
    )))
}

/// Pseudo-observations of the requested input.
fn load_sample(a: &InputArgs) -> Result<PseudoSample, Failure> {
    let raw = match (&a.input, &a.prices) {
        (Some(p), _) => {
            let (c1, c2) = pick_columns(p, &a.columns)?;
            io::read_pairs(p, (&c1, &c2))?
        }
        (None, Some(files)) => {
            let schema = if a.residuals {
                Schema::residuals(&a.date_column, &a.value_column)
            } else {
                Schema::prices(&a.date_column, &a.value_column)
            };
            let s1 = io::load_csv(&files[0], &schema)?;
            let s2 = io::load_csv(&files[1], &schema)?;
            let paired = io::align(&s1, &s2, MIN_ALIGNED_ROWS)?;
            if paired.dropped > 0 {
                eprintln!("note: {} unmatched dates dropped while aligning", paired.dropped);
            }
            paired.observations()?
        }
        (None, None) => return Err(usage("give --input or --prices")),
    };
    Ok(pseudo_observations(&raw)?)
}

/// Parses `scheme=1,tl=0.1[,tu=0.9][,tie=margin2-priority]`.
pub fn parse_censor(spec: &str) -> Result<CensoringConfig, Failure> {
    let (mut scheme, mut tl, mut tu, mut tie) = (None, None, None, TieBreak::default());
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("censoring item '{part}' is not key=value")))?;
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| usage(format!("'{v}' is not a number in --censor")))
        };
        match k.trim() {
            "scheme" => {
                let s: u8 = v
                    .parse()
                    .map_err(|_| usage(format!("scheme must be 1, 2 or 3, got '{v}'")))?;
                scheme = Some(Scheme::try_from(s).map_err(|e| usage(e.to_string()))?);
            }
            "tl" => tl = Some(num(v)?),
            "tu" => tu = Some(num(v)?),
            "tie" => {
                tie = match v {
                    "margin1-priority" | "margin1" => TieBreak::Margin1Priority,
                    "margin2-priority" | "margin2" => TieBreak::Margin2Priority,
                    _ => return Err(usage(format!("unknown tie-break '{v}'"))),
                }
            }
            other => return Err(usage(format!("unknown censoring key '{other}'"))),
        }
    }
    let scheme = scheme.ok_or_else(|| usage("--censor needs scheme="))?;
    let tl = tl.ok_or_else(|| usage("--censor needs tl="))?;
    Ok(CensoringConfig::with_levels(scheme, tl, tu.unwrap_or(1.0 - tl))?.with_tie_break(tie))
}

fn method(censor: &Option<String>) -> Result<Method, Failure> {
    Ok(match censor {
        Some(s) => Method::Censored(parse_censor(s)?),
        None => Method::Full,
    })
}

fn family(name: &str) -> Result<CopulaFamily, Failure> {
    name.parse().map_err(|e: asymtail::Error| usage(e.to_string()))
}

fn fit_options(max_iter: usize) -> FitOptions {
    let mut o = FitOptions::default();
    o.optimizer.max_iterations = max_iter;
    o
}

fn cmd_fit(cli: &Cli, a: &FitArgs) -> Outcome {
    let q = quadrature(cli, QuadratureSpec::fast())?;
    let fam = family(&a.family)?;
    let m = method(&a.censor)?;
    let sample = load_sample(&a.input)?;
    let opts = fit_options(a.max_iter);
    let mut r = fit(fam, &q, &sample, &m, &opts)?;
    if let Some(b) = a.boot {
        let g = SeededGenerator::new(cli.common.seed, 1);
        r.boot_intervals = Some(parametric_bootstrap(&q, &r, sample.len(), b, a.level, &g, &opts)?);
    }
    io::write_fit(&out_path(cli, "fit.json"), &header(cli, Some(&q))?, &r)?;
    if r.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "optimizer stopped after {} iterations without converging; result written with converged = false",
            r.iterations
        )))
    }
}

fn cmd_localfit(cli: &Cli, a: &LocalFitArgs) -> Outcome {
    let q = quadrature(cli, QuadratureSpec::coarse())?;
    let fam = family(&a.family)?;
    let m = method(&a.censor)?;
    let sample = load_sample(&a.input)?;
    let opts = LocalFitOptions {
        tau: a.tau,
        stride: a.stride,
        fit: fit_options(a.max_iter),
        ..Default::default()
    };
    let s = local_fit(fam, &q, &sample, &m, &opts)?;
    io::write_local_series(&out_path(cli, "localfit.csv"), &header(cli, Some(&q))?, &s)?;
    let failed = s.rows.iter().filter(|r| r.solved && !r.converged).count();
    if failed > 0 {
        return Err(Failure::NotConverged(format!(
            "{failed} local fits did not converge; series written"
        )));
    }
    Ok(())
}

fn chi(cli: &Cli, a: &ChiArgs) -> Outcome {
    let out = out_path(cli, "chi.csv");
    if a.np {
        let path = a.input.as_ref().ok_or_else(|| usage("--np needs --input"))?;
        let (c1, c2) = pick_columns(path, &a.columns)?;
        let s = pseudo_observations(&io::read_pairs(path, (&c1, &c2))?)?;
        let (tail, default_t) = match a.tail {
            TailArg::Lower => (Tail::Lower, 0.05),
            TailArg::Upper => (Tail::Upper, 0.95),
        };
        let t = match a.t.as_deref() {
            None => default_t,
            Some([t]) => *t,
            Some(_) => return Err(usage("--np takes a single --t")),
        };
        let est = np_chi_moving(s.points(), t, a.window, tail, a.level)?;
        return Ok(io::write_chi_estimates(&out, &header(cli, None)?, &est)?);
    }
    let q = quadrature(cli, QuadratureSpec::default())?;
    let kind = copula_kind(&a.model, a.gumbel, a.gaussian)?
        .ok_or_else(|| usage("choose one of --model, --gumbel, --gaussian or --np"))?;
    let ts = a.t.clone().unwrap_or_else(|| DEFAULT_CHI_GRID.to_vec());
    let s = tail_summary(&kind, &q, &ts, a.mc_budget)?;
    if let Some(l) = &s.limits {
        println!(
            "{kind}: chi_l = {:.4} ({}), chi_u = {:.4} ({}), eta_l = {:.4}, eta_u = {:.4}",
            l.chi_l, l.class_l, l.chi_u, l.class_u, l.eta_l, l.eta_u
        );
    }
    Ok(io::write_tail_summary(&out, &header(cli, Some(&q))?, &s)?)
}

fn study(cli: &Cli, a: &StudyArgs) -> Outcome {
    let recipe: Recipe = a.recipe.parse().map_err(|e: asymtail::Error| usage(e.to_string()))?;
    let mut cfg = StudyConfig::new(recipe, a.replicates, cli.common.seed);
    cfg.quad = quadrature(cli, cfg.quad)?;
    let report = run_study(&cfg)?;
    let dir = out_path(cli, &format!("study-{}", recipe.name()));
    let paths = write_report(&dir, &header(cli, Some(&cfg.quad))?, &report)?;
    for p in paths {
        println!("{}", p.display());
    }
    let failed = report.failures();
    if failed > 0 {
        eprintln!("note: {failed} fits failed; see estimates.csv");
    }
    Ok(())
}
