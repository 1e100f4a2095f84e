//! Command-line front door: lattice ingestion, sweep orchestration,
//! machine-readable output.
//!
//! Output conventions: JSON for single computations, CSV for sweeps, all
//! complex values as decimal-string pairs. Exit codes: 0 success,
//! 1 verification failure, 2 config error, 3 budget exceeded.

use clap::{Args, Parser, Subcommand};
use kloost::bounds::weil_bound_report;
use kloost::gauss::{self, Mode};
use kloost::identity::{verify_andersen, verify_kohnen, IdentityCheck, IdentityEngine};
use kloost::kloosterman::KloostermanEvaluator;
use kloost::lattice::{DiscElement, DiscGroup, EvenLattice};
use kloost::numeric::Ctx;
use kloost::numth::{fundamental_decomposition, gcd, is_fundamental_discriminant};
use kloost::weilrep::{rho_generators, MetaplecticElement};
use kloost::Error;
use rayon::prelude::*;
use rug::Rational;
use serde::Deserialize;

const EXIT_VERIFICATION: i32 = 1;
const EXIT_CONFIG: i32 = 2;
const EXIT_BUDGET: i32 = 3;

#[derive(Parser)]
#[command(name = "kloost", version, about = "Generalized Kloosterman sums for the Weil representation of an even lattice")]
struct Cli {
    /// Working precision in bits
    #[arg(long, global = true, default_value_t = 192)]
    prec_bits: u32,
    /// Worker threads for sweeps (output order is unaffected)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LatticeArg {
    /// Path to a JSON lattice file: {"gram": [[int, ...], ...]}
    #[arg(long)]
    lattice: String,
}

#[derive(Args)]
struct GridArgs {
    /// Index range lo:hi for m
    #[arg(long, allow_hyphen_values = true, default_value = "1:12")]
    m_range: String,
    /// Index range lo:hi for n
    #[arg(long, allow_hyphen_values = true, default_value = "1:12")]
    n_range: String,
    /// Largest modulus c
    #[arg(long, default_value_t = 8)]
    c_max: i64,
    /// Largest shift v
    #[arg(long, default_value_t = 8)]
    v_max: i64,
    /// Residual threshold for the verification exit code
    #[arg(long, default_value_t = 1e-18)]
    tolerance: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single sum S_{alpha,beta}(m, n, c); JSON output
    ComputeSum {
        #[command(flatten)]
        lattice: LatticeArg,
        /// Coordinates of alpha in L'/L, e.g. "1/2" or "1/2,0,1/4"
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long)]
        c: i64,
        /// Half-integral weight, e.g. "1/2"; defaults to the natural weight
        #[arg(long, allow_hyphen_values = true)]
        k: Option<String>,
    },
    /// Sweep the sparse-sum identity over a grid; CSV output
    VerifyIdentity {
        #[command(flatten)]
        lattice: LatticeArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Sweep Kohnen's plus-space identity; CSV output
    VerifyKohnen {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Sweep the eta-multiplier identity; CSV output
    VerifyAndersen {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare |S| against the square-root bound on a grid; CSV output
    VerifyBound {
        #[command(flatten)]
        lattice: LatticeArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Tabulate Gauss sums, brute force next to closed form; CSV output
    GaussTable {
        /// Largest odd modulus for the quadratic Gauss sums
        #[arg(long, default_value_t = 25)]
        c_max: i64,
        /// Largest exponent for the 2-power and twisted families
        #[arg(long, default_value_t = 5)]
        lambda_max: u32,
    },
    /// Weil representation matrix of one metaplectic element; JSON output
    WeilrepMatrix {
        #[command(flatten)]
        lattice: LatticeArg,
        /// Entries a,b,c,d of the SL2(Z) matrix
        #[arg(long, allow_hyphen_values = true)]
        gamma: String,
        /// Branch of the square root: 1 or -1
        #[arg(long, default_value_t = 1)]
        sign: i8,
    },
}

#[derive(Deserialize)]
struct LatticeFile {
    gram: Vec<Vec<i64>>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Budget(_) => EXIT_BUDGET,
        _ => EXIT_CONFIG,
    }
}

fn fail(msg: &str, code: i32) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(code);
}

fn load_lattice(path: &str) -> EvenLattice {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| fail(&format!("cannot read {path}: {e}"), EXIT_CONFIG));
    let file: LatticeFile = serde_json::from_str(&text)
        .unwrap_or_else(|e| fail(&format!("malformed lattice file {path}: {e}"), EXIT_CONFIG));
    EvenLattice::new(file.gram).unwrap_or_else(|e| fail(&e.to_string(), EXIT_CONFIG))
}

fn parse_rational(s: &str) -> Rational {
    s.trim()
        .parse::<Rational>()
        .unwrap_or_else(|_| fail(&format!("bad rational '{s}'"), EXIT_CONFIG))
}

fn parse_element(group: &DiscGroup, s: &str) -> DiscElement {
    let coords: Vec<Rational> = s.split(',').map(parse_rational).collect();
    group
        .element(coords)
        .unwrap_or_else(|e| fail(&e.to_string(), EXIT_CONFIG))
}

fn parse_range(s: &str) -> (i64, i64) {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || fail(&format!("bad range '{s}', expected lo:hi"), EXIT_CONFIG);
    if parts.len() != 2 {
        bad();
    }
    let lo: i64 = parts[0].trim().parse().unwrap_or_else(|_| bad());
    let hi: i64 = parts[1].trim().parse().unwrap_or_else(|_| bad());
    if lo > hi {
        bad();
    }
    (lo, hi)
}

fn coords_label(e: &DiscElement) -> String {
    let parts: Vec<String> = e.coords().iter().map(|r| r.to_string()).collect();
    format!("({})", parts.join(";"))
}

fn check_grid(grid: &GridArgs) {
    if grid.c_max < 1 {
        fail("c-max must be at least 1", EXIT_CONFIG);
    }
    if grid.v_max < 0 {
        fail("v-max must be nonnegative", EXIT_CONFIG);
    }
}

/// Map a sweep in parallel, keeping grid order, and bail out with the
/// appropriate exit code on the first error.
fn sweep<P, F>(points: Vec<P>, threads: usize, f: F) -> Vec<String>
where
    P: Send + Sync,
    F: Fn(&P) -> Result<String, Error> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .unwrap_or_else(|e| fail(&format!("thread pool: {e}"), EXIT_CONFIG));
    let rows: Result<Vec<String>, Error> =
        pool.install(|| points.par_iter().map(|p| f(p)).collect());
    rows.unwrap_or_else(|e| fail(&e.to_string(), exit_code(&e)))
}

fn identity_rows(
    engine: &IdentityEngine,
    grid: &GridArgs,
    threads: usize,
) -> (Vec<String>, f64) {
    let group = engine.group().clone();
    let g = group.lattice().rank();
    let fundamental_sign = if (g / 2) % 2 == 0 { 1 } else { -1 };
    let (m_lo, m_hi) = parse_range(&grid.m_range);
    let (n_lo, n_hi) = parse_range(&grid.n_range);
    let mut points = Vec::new();
    for (ai, alpha) in group.elements().iter().enumerate() {
        for m in m_lo..=m_hi {
            if !is_fundamental_discriminant(fundamental_sign * m) || !group.check_index(alpha, m) {
                continue;
            }
            for (bi, beta) in group.elements().iter().enumerate() {
                for n in n_lo..=n_hi {
                    if !group.check_index(beta, n) {
                        continue;
                    }
                    for c in 1..=grid.c_max {
                        for v in 0..=grid.v_max {
                            points.push((ai, bi, m, n, c, v));
                        }
                    }
                }
            }
        }
    }
    let rows = sweep(points, threads, |&(ai, bi, m, n, c, v)| {
        let alpha = &group.elements()[ai];
        let beta = &group.elements()[bi];
        let check = engine.verify_identity(alpha, beta, m, n, c, v)?;
        Ok(identity_row(
            &format!("{},{},{m},{n},{c},{v}", coords_label(alpha), coords_label(beta)),
            &check,
        ))
    });
    let worst = rows
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse::<f64>().unwrap_or(f64::NAN))
        .fold(0.0f64, f64::max);
    (rows, worst)
}

fn identity_row(params: &str, check: &IdentityCheck) -> String {
    let (lr, li) = check.lhs.to_decimal_strings();
    let (rr, ri) = check.rhs.to_decimal_strings();
    format!("{params},{lr},{li},{rr},{ri},{:e}", check.residual.to_f64())
}

fn emit(header: &str, rows: &[String]) {
    println!("{header}");
    for row in rows {
        println!("{row}");
    }
}

fn main() {
    let cli = Cli::parse();
    if cli.prec_bits < 64 {
        fail("prec-bits must be at least 64", EXIT_CONFIG);
    }
    let ctx = Ctx::new(cli.prec_bits);
    match cli.command {
        Command::ComputeSum {
            lattice,
            alpha,
            beta,
            m,
            n,
            c,
            k,
        } => {
            let lat = load_lattice(&lattice.lattice);
            let ev = KloostermanEvaluator::new(lat.discriminant_group(), ctx);
            let alpha = parse_element(ev.group(), &alpha);
            let beta = parse_element(ev.group(), &beta);
            let weight = k.map_or_else(|| ev.natural_weight(), |s| parse_rational(&s));
            let s = ev
                .sum(&alpha, &beta, m, n, c, &weight)
                .unwrap_or_else(|e| fail(&e.to_string(), exit_code(&e)));
            let (re, im) = s.to_decimal_strings();
            println!(
                "{}",
                serde_json::json!({"re": re, "im": im, "abs": format!("{:e}", s.abs().to_f64())})
            );
        }
        Command::VerifyIdentity { lattice, grid } => {
            check_grid(&grid);
            let lat = load_lattice(&lattice.lattice);
            if lat.rank() % 2 == 0 {
                fail("the identity requires odd rank", EXIT_CONFIG);
            }
            if lat.rank() > 1 {
                // worst prime-power congruence count in the grid: c = 2^lambda
                let lambda = 63 - (grid.c_max as u64).leading_zeros();
                let points = 2f64.powi((lat.rank() as i32 + 1) * lambda as i32);
                if points > kloost::identity::COUNT_BUDGET as f64 {
                    fail(
                        &format!(
                            "c-max {} needs {points:.1e} congruence points at rank {}, over the budget {}",
                            grid.c_max,
                            lat.rank(),
                            kloost::identity::COUNT_BUDGET
                        ),
                        EXIT_BUDGET,
                    );
                }
            }
            let engine = IdentityEngine::new(lat.discriminant_group(), ctx);
            let (rows, worst) = identity_rows(&engine, &grid, cli.threads);
            emit(
                "alpha,beta,m,n,c,v,lhs_re,lhs_im,rhs_re,rhs_im,residual",
                &rows,
            );
            if worst >= grid.tolerance {
                std::process::exit(EXIT_VERIFICATION);
            }
        }
        Command::VerifyKohnen { grid } => {
            check_grid(&grid);
            let (m_lo, m_hi) = parse_range(&grid.m_range);
            let (n_lo, n_hi) = parse_range(&grid.n_range);
            let mut points = Vec::new();
            for m in m_lo..=m_hi {
                if !is_fundamental_discriminant(m) || m.rem_euclid(4) > 1 {
                    continue;
                }
                for n in n_lo..=n_hi {
                    if n.rem_euclid(4) > 1 {
                        continue;
                    }
                    for c in 1..=grid.c_max {
                        for v in 0..=grid.v_max {
                            points.push((m, n, c, v));
                        }
                    }
                }
            }
            let rows = sweep(points, cli.threads, |&(m, n, c, v)| {
                let check = verify_kohnen(m, n, c, v, &ctx)?;
                Ok(identity_row(&format!("{m},{n},{c},{v}"), &check))
            });
            emit("m,n,c,v,lhs_re,lhs_im,rhs_re,rhs_im,residual", &rows);
            exit_on_residual(&rows, grid.tolerance);
        }
        Command::VerifyAndersen { grid } => {
            check_grid(&grid);
            let (m_lo, m_hi) = parse_range(&grid.m_range);
            let (n_lo, n_hi) = parse_range(&grid.n_range);
            let mut points = Vec::new();
            for m in m_lo..=m_hi {
                if !is_fundamental_discriminant(m) || m.rem_euclid(24) != 1 {
                    continue;
                }
                for n in n_lo..=n_hi {
                    if n.rem_euclid(24) != 1 {
                        continue;
                    }
                    for c in 1..=grid.c_max {
                        for v in 1..=grid.v_max.max(1) {
                            if gcd(v, 6) == 1 {
                                points.push((m, n, c, v));
                            }
                        }
                    }
                }
            }
            let rows = sweep(points, cli.threads, |&(m, n, c, v)| {
                let check = verify_andersen(m, n, c, v, &ctx)?;
                Ok(identity_row(&format!("{m},{n},{c},{v}"), &check))
            });
            emit("m,n,c,v,lhs_re,lhs_im,rhs_re,rhs_im,residual", &rows);
            exit_on_residual(&rows, grid.tolerance);
        }
        Command::VerifyBound { lattice, grid } => {
            check_grid(&grid);
            let lat = load_lattice(&lattice.lattice);
            let lattice_id = serde_json::to_string(&lat.gram().to_vec()).unwrap();
            let ev = KloostermanEvaluator::new(lat.discriminant_group(), ctx);
            let group = ev.group().clone();
            let k = ev.natural_weight();
            let (m_lo, m_hi) = parse_range(&grid.m_range);
            let (n_lo, n_hi) = parse_range(&grid.n_range);
            let mut points = Vec::new();
            for (ai, alpha) in group.elements().iter().enumerate() {
                for m in m_lo..=m_hi {
                    if m == 0 || !group.check_index(alpha, m) {
                        continue;
                    }
                    let Ok(dec) = fundamental_decomposition(m, lat.rank() as i64) else {
                        continue;
                    };
                    if gcd(dec.v, lat.det()) != 1 {
                        continue;
                    }
                    for (bi, beta) in group.elements().iter().enumerate() {
                        for n in n_lo..=n_hi {
                            if !group.check_index(beta, n) {
                                continue;
                            }
                            for c in 1..=grid.c_max {
                                points.push((ai, bi, dec.clone(), n, c));
                            }
                        }
                    }
                }
            }
            let rows = sweep(points, cli.threads, |(ai, bi, dec, n, c)| {
                let alpha = &group.elements()[*ai];
                let beta = &group.elements()[*bi];
                let r = weil_bound_report(&ev, alpha, beta, dec, *n, *c, &k)?;
                Ok(format!(
                    "{lattice_id},{},{},{},{},{},{},{:e},{:e},{:.6}",
                    coords_label(alpha),
                    coords_label(beta),
                    r.m0,
                    r.v,
                    r.n,
                    r.c,
                    r.abs_s.to_f64(),
                    r.rhs.to_f64(),
                    r.ratio
                ))
            });
            emit(
                "lattice_id,alpha,beta,m0,v,n,c,abs_S,rhs,ratio",
                &rows,
            );
        }
        Command::GaussTable { c_max, lambda_max } => {
            if c_max < 1 || lambda_max < 1 {
                fail("c-max and lambda-max must be positive", EXIT_CONFIG);
            }
            let mut rows = Vec::new();
            let mut push = |kind: &str, params: String, v: kloost::AlgValue| {
                let (re, im) = v.to_decimal_strings();
                rows.push(format!("{kind},{params},{re},{im}"));
            };
            let run = |r: Result<kloost::AlgValue, Error>| {
                r.unwrap_or_else(|e| fail(&e.to_string(), exit_code(&e)))
            };
            for c in (1..=c_max).step_by(2) {
                for a in 1..=c {
                    if gcd(a, c) != 1 {
                        continue;
                    }
                    push("scaled-direct", format!("{a};{c}"), run(gauss::gauss_scaled(a, c, Mode::Direct, &ctx)));
                    push("scaled-closed", format!("{a};{c}"), run(gauss::gauss_scaled(a, c, Mode::ClosedForm, &ctx)));
                }
            }
            for lambda in 1..=lambda_max {
                let span = 1i64 << lambda;
                for a in (1..span).step_by(2) {
                    push("pow2-direct", format!("{a};0;{lambda}"), run(gauss::gauss_pow2(a, 0, lambda, Mode::Direct, &ctx)));
                    push("pow2-closed", format!("{a};0;{lambda}"), run(gauss::gauss_pow2(a, 0, lambda, Mode::ClosedForm, &ctx)));
                }
            }
            for p in [3i64, 5, 7] {
                for lambda in 1..=lambda_max.min(3) {
                    for n in 0..p.pow(lambda).min(12) {
                        push("twisted-odd-direct", format!("{p};{lambda};{n}"), run(gauss::gauss_twisted_odd(p, lambda, n, Mode::Direct, &ctx)));
                        push("twisted-odd-closed", format!("{p};{lambda};{n}"), run(gauss::gauss_twisted_odd(p, lambda, n, Mode::ClosedForm, &ctx)));
                    }
                }
            }
            for lambda in 2..=lambda_max.max(2) {
                for n in 0..(1i64 << lambda).min(16) {
                    push("twisted-pow2-direct", format!("{lambda};{n}"), run(gauss::gauss_twisted_pow2(lambda, n, Mode::Direct, &ctx)));
                    push("twisted-pow2-closed", format!("{lambda};{n}"), run(gauss::gauss_twisted_pow2(lambda, n, Mode::ClosedForm, &ctx)));
                }
            }
            emit("kind,params,re,im", &rows);
        }
        Command::WeilrepMatrix { lattice, gamma, sign } => {
            let lat = load_lattice(&lattice.lattice);
            let entries: Vec<i64> = gamma
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .unwrap_or_else(|_| fail(&format!("bad gamma entry '{s}'"), EXIT_CONFIG))
                })
                .collect();
            if entries.len() != 4 {
                fail("gamma must have four entries a,b,c,d", EXIT_CONFIG);
            }
            let elem = MetaplecticElement::new(entries[0], entries[1], entries[2], entries[3], sign)
                .unwrap_or_else(|e| fail(&e.to_string(), EXIT_CONFIG));
            let group = lat.discriminant_group();
            let rho = rho_generators(&group, &elem, &ctx)
                .unwrap_or_else(|e| fail(&e.to_string(), exit_code(&e)));
            let order = group.order();
            let matrix: Vec<Vec<[String; 2]>> = (0..order)
                .map(|i| {
                    (0..order)
                        .map(|j| {
                            let (re, im) = rho.entry(i, j).to_decimal_strings();
                            [re, im]
                        })
                        .collect()
                })
                .collect();
            let labels: Vec<String> = group.elements().iter().map(coords_label).collect();
            println!(
                "{}",
                serde_json::json!({"size": order, "elements": labels, "entries": matrix})
            );
        }
    }
}

fn exit_on_residual(rows: &[String], tolerance: f64) {
    let worst = rows
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse::<f64>().unwrap_or(f64::NAN))
        .fold(0.0f64, f64::max);
    if worst >= tolerance {
        std::process::exit(EXIT_VERIFICATION);
    }
}
