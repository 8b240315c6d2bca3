//! Command-line front end: evaluation, modular-polynomial cache management,
//! class-group reports, recognition, identity-suite runs, and the example
//! constructions.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rug::Integer;

use jderiv_core::cmfields::{class_number, heegner_points, hilbert_class_poly, qpoint};
use jderiv_core::error::Error;
use jderiv_core::evaluator::{eval_aux, eval_j_jet};
use jderiv_core::hpcomplex::HPComplex;
use jderiv_core::identities::{run_suites, suite_names, SuiteContext};
use jderiv_core::mat2::Mat2Z;
use jderiv_core::modpoly::{cache_path, PhiProvider};
use jderiv_core::recognize::transcendence_evidence;
use jderiv_core::varieties::{
    adjacency_verify, example1_build, example1_container, example1_special_check, example2_check,
    solve_single_z, AdjacencyWitness, GaussRat, MPoly,
};

#[derive(Parser)]
#[command(
    name = "jderiv",
    about = "High-precision toolkit for the modular j-function and its first two derivatives"
)]
struct Cli {
    /// Working precision in bits
    #[arg(long, global = true, default_value_t = 256)]
    prec: u32,

    /// Seed for randomized suites
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Emit JSON where supported
    #[arg(long, global = true)]
    json: bool,

    /// Modular-polynomial cache directory (else $JDERIV_CACHE, else ./cache)
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate J(tau) and (chi, f, E2*, chi*) at tau given as "re,im"
    Eval { tau: String },
    /// Compute (or load) the modular polynomial of the given level
    Phi { level: u32 },
    /// Hilbert class polynomial of a negative discriminant
    #[command(allow_hyphen_values = true)]
    Hilbert { disc: i64 },
    /// Heegner points, class number and class polynomial of a discriminant
    #[command(allow_hyphen_values = true)]
    Orbit { disc: i64 },
    /// Recognize a decimal value ("re" or "re,im") as an algebraic number
    Recognize {
        value: String,
        /// Maximum polynomial degree to search
        #[arg(long, default_value_t = 8)]
        deg: u32,
        /// Coefficient height bound
        #[arg(long, default_value = "100000000000000000000")]
        height: String,
    },
    /// Run an identity suite (or `all`); exits nonzero on any FAIL
    Verify {
        suite: String,
        /// Samples per randomized suite
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Run an example construction described by a config file
    Example { number: u32, config: PathBuf },
}

fn cache_dir_from(cli_dir: &Option<PathBuf>) -> PathBuf {
    if let Some(d) = cli_dir {
        return d.clone();
    }
    if let Ok(d) = std::env::var("JDERIV_CACHE") {
        if !d.is_empty() {
            return PathBuf::from(d);
        }
    }
    PathBuf::from("cache")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(clean) => {
            if clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Eval { tau } => cmd_eval(cli, tau),
        Command::Phi { level } => cmd_phi(cli, *level),
        Command::Hilbert { disc } => cmd_hilbert(cli, *disc),
        Command::Orbit { disc } => cmd_orbit(cli, *disc),
        Command::Recognize { value, deg, height } => cmd_recognize(cli, value, *deg, height),
        Command::Verify { suite, samples } => cmd_verify(cli, suite, *samples),
        Command::Example { number, config } => cmd_example(cli, *number, config),
    }
}

fn pair_json(z: &HPComplex) -> serde_json::Value {
    let (re, im) = z.to_decimal();
    serde_json::json!({ "re": re, "im": im })
}

fn cmd_eval(cli: &Cli, tau_str: &str) -> Result<bool, Error> {
    let prec = cli.prec;
    let tau = HPComplex::parse(tau_str, prec + 64)?;
    let jet = eval_j_jet(&tau, prec)?;
    let aux = eval_aux(&tau, prec)?;
    if cli.json {
        let doc = serde_json::json!({
            "tau": pair_json(&tau.with_prec(prec)),
            "prec": prec,
            "j": pair_json(&jet.j),
            "jp": pair_json(&jet.jp),
            "jpp": pair_json(&jet.jpp),
            "chi": pair_json(&aux.chi),
            "f": pair_json(&aux.f),
            "e2star": pair_json(&aux.e2star),
            "chistar": pair_json(&aux.chistar),
        });
        println!("{doc}");
    } else {
        println!("tau      = {}", tau.with_prec(prec));
        println!("prec     = {prec} bits");
        println!("j        = {}", jet.j);
        println!("j'       = {}", jet.jp);
        println!("j''      = {}", jet.jpp);
        println!("chi      = {}", aux.chi);
        println!("f        = {}", aux.f);
        println!("E2*      = {}", aux.e2star);
        println!("chi*     = {}", aux.chistar);
    }
    Ok(true)
}

fn cmd_phi(cli: &Cli, level: u32) -> Result<bool, Error> {
    let dir = cache_dir_from(&cli.cache_dir);
    let provider = PhiProvider::new(Some(dir.clone()));
    let phi = provider.get(level)?;
    print!("{}", jderiv_core::modpoly::to_cache_string(&phi));
    eprintln!("cache: {}", cache_path(&dir, level).display());
    Ok(true)
}

fn cmd_hilbert(cli: &Cli, disc: i64) -> Result<bool, Error> {
    let h = hilbert_class_poly(disc, cli.prec.max(512))?;
    println!("H_{disc}(X) = {h}");
    Ok(true)
}

fn cmd_orbit(cli: &Cli, disc: i64) -> Result<bool, Error> {
    let points = heegner_points(disc)?;
    let h = class_number(disc)?;
    println!("D = {disc}, h = {h}");
    for p in &points {
        let (a, b, c) = p.coefficients();
        let e = p.embed(cli.prec);
        println!("form ({a}, {b}, {c})  tau = {e}");
    }
    let poly = hilbert_class_poly(disc, cli.prec.max(512))?;
    println!("H_{disc}(X) = {poly}");
    Ok(true)
}

fn cmd_recognize(cli: &Cli, value: &str, deg: u32, height: &str) -> Result<bool, Error> {
    let prec = cli.prec.max(32 * deg);
    let z = HPComplex::parse(value, prec)?;
    let height: Integer = height
        .parse()
        .map_err(|_| Error::Parse(format!("bad height bound `{height}`")))?;
    let report = transcendence_evidence(&z, deg, &height, prec)?;
    print!("{}", report.to_kv());
    match report.any_found() {
        Some(p) => {
            println!("result=found");
            println!("polynomial={p}");
        }
        None => println!("result=notfound"),
    }
    Ok(true)
}

fn cmd_verify(cli: &Cli, suite: &str, samples: usize) -> Result<bool, Error> {
    let dir = cache_dir_from(&cli.cache_dir);
    let mut ctx = SuiteContext::new(cli.seed, cli.prec);
    ctx.samples = samples;
    ctx.phi = Arc::new(PhiProvider::new(Some(dir)));
    let names: Vec<String> = if suite == "all" {
        suite_names().iter().map(|s| s.to_string()).collect()
    } else {
        vec![suite.to_string()]
    };
    let reports = run_suites(&names, &ctx)?;
    let mut all_ok = true;
    for r in &reports {
        print!("{}", r.render());
        all_ok &= r.all_pass();
    }
    Ok(all_ok)
}

// ---------------------------------------------------------------------------
// Example configs: line-oriented `key value...` records
// ---------------------------------------------------------------------------

struct ExampleConfig {
    keys: Vec<(String, Vec<String>)>,
}

impl ExampleConfig {
    fn parse(path: &PathBuf) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        let mut keys = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let key = it.next().unwrap().to_string();
            keys.push((key, it.map(|s| s.to_string()).collect()));
        }
        Ok(ExampleConfig { keys })
    }

    fn get(&self, key: &str) -> Option<&[String]> {
        self.keys
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_slice())
    }

    fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a [String]> + 'a {
        self.keys
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_slice())
    }

    fn int(&self, key: &str) -> Result<i64, Error> {
        self.get(key)
            .and_then(|v| v.first())
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("missing or bad `{key}`")))
    }

    fn matrix(&self, key: &str) -> Result<Mat2Z, Error> {
        let v = self
            .get(key)
            .ok_or_else(|| Error::Parse(format!("missing `{key}`")))?;
        if v.len() != 4 {
            return Err(Error::Parse(format!("`{key}` needs 4 entries")));
        }
        let e: Vec<i64> = v
            .iter()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Parse(format!("bad integers in `{key}`")))?;
        Mat2Z::new(e[0], e[1], e[2], e[3])
    }

    fn quad(&self, key: &str) -> Result<jderiv_core::cmfields::QuadraticPoint, Error> {
        let v = self
            .get(key)
            .ok_or_else(|| Error::Parse(format!("missing `{key}`")))?;
        if v.len() != 3 {
            return Err(Error::Parse(format!("`{key}` needs 3 entries")));
        }
        let e: Vec<i64> = v
            .iter()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Parse(format!("bad integers in `{key}`")))?;
        qpoint(e[0], e[1], e[2])
    }

    /// 2-variable polynomial: chunks of `e1 e2 re-num/den im-num/den`.
    fn wpoly(&self, key: &str) -> Result<MPoly, Error> {
        let v = self
            .get(key)
            .ok_or_else(|| Error::Parse(format!("missing `{key}`")))?;
        if v.len() % 4 != 0 || v.is_empty() {
            return Err(Error::Parse(format!(
                "`{key}` must be chunks of `e1 e2 re im`"
            )));
        }
        let mut p = MPoly::zero(2);
        for chunk in v.chunks(4) {
            let e1: u16 = chunk[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent `{}`", chunk[0])))?;
            let e2: u16 = chunk[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent `{}`", chunk[1])))?;
            let re = parse_rat(&chunk[2])?;
            let im = parse_rat(&chunk[3])?;
            p.add_term(vec![e1, e2], GaussRat { re, im });
        }
        Ok(p)
    }
}

fn parse_rat(tok: &str) -> Result<rug::Rational, Error> {
    let mut it = tok.splitn(2, '/');
    let n: Integer = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad rational `{tok}`")))?;
    let d: Integer = match it.next() {
        Some(t) => t
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational `{tok}`")))?,
        None => Integer::from(1),
    };
    Ok(rug::Rational::from((n, d)))
}

fn cmd_example(cli: &Cli, number: u32, config: &PathBuf) -> Result<bool, Error> {
    let cfg = ExampleConfig::parse(config)?;
    let prec = cli.prec;
    let dir = cache_dir_from(&cli.cache_dir);
    let provider = PhiProvider::new(Some(dir));
    match number {
        1 => {
            let m = cfg.int("M")? as u32;
            let n = cfg.int("N")? as u32;
            let g = cfg.matrix("g")?;
            let h = cfg.matrix("h")?;
            let w = cfg.wpoly("W")?;
            let pairs = cfg.int("pairs").unwrap_or(10) as usize;
            let seed = cfg.int("seed").unwrap_or(cli.seed as i64) as u64;
            let phi_m = provider.get(m)?;
            let phi_n = provider.get(n)?;

            let mut sampler = jderiv_core::identities::Sampler::new(seed);
            let mut all_ok = true;
            for k in 0..pairs {
                let tau = sampler.quadratic_point(&[]);
                let (_, d0) = tau.squarefree_decomposition();
                let sigma = sampler.quadratic_point(&[d0]);
                let ok = example1_special_check(&phi_m, &phi_n, &w, &g, &h, &tau, &sigma, prec)?;
                println!(
                    "pair{k} tau={:?} sigma={:?} member={ok}",
                    tau.coefficients(),
                    sigma.coefficients()
                );
                all_ok &= ok;
            }
            let v = example1_build(&phi_m, &phi_n, &w)?;
            let b = example1_container(&g, &h);
            let mut wit = AdjacencyWitness::unit(&b, prec)?;
            // witness overrides: `witness_z <coord> <re> <im>` with num/den parts
            for vals in cfg.get_all("witness_z") {
                if vals.len() != 3 {
                    return Err(Error::Parse("`witness_z` needs `<coord> <re> <im>`".into()));
                }
                let coord: usize = vals[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coordinate `{}`", vals[0])))?;
                let re = parse_rat(&vals[1])?;
                let im = parse_rat(&vals[2])?;
                let slot = wit
                    .twists
                    .get_mut(coord)
                    .and_then(|t| t.as_mut())
                    .ok_or_else(|| Error::Parse(format!("coordinate {coord} is not free")))?;
                slot.z = HPComplex::from_rationals(&re, &im, prec);
            }
            // `solve_z <coord>`: search the single unknown twist per sample
            if let Some(vals) = cfg.get("solve_z") {
                let coord: usize = vals
                    .first()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Parse("`solve_z` needs a coordinate".into()))?;
                let roots = solve_single_z(&v, &b, &wit, coord, 2, seed, prec)?;
                for (i, r) in roots.iter().enumerate() {
                    println!("solve_z root{i} = {r}");
                }
                if let Some(first) = roots.first() {
                    if let Some(t) = wit.twists.get_mut(coord).and_then(|t| t.as_mut()) {
                        t.z = first.clone();
                    }
                }
            }
            let out = adjacency_verify(&v, &b, &wit, 8, seed, prec)?;
            println!(
                "adjacency ok={} samples={} max_residual={:e}",
                out.ok,
                out.samples,
                out.max_residual.to_f64()
            );
            Ok(all_ok && out.ok)
        }
        2 => {
            let sigma = cfg.quad("sigma")?;
            let tau = cfg.quad("tau")?;
            let g = cfg.matrix("g")?;
            let gamma = cfg.matrix("gamma")?;
            let w = cfg.wpoly("W")?;
            let ok = example2_check(&sigma, &w, &tau, &g, &gamma, prec)?;
            println!("example2 member={ok}");
            Ok(ok)
        }
        _ => Err(Error::Parse(format!("unknown example `{number}`"))),
    }
}
