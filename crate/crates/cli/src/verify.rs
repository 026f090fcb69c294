use std::f64::consts::PI;

use clap::Args;
use iap_core::directions::{check_prop28, Prop28Params};
use iap_core::generators::{
    gen_cone, verify_inner_product_lemma, verify_lemma_3_3, verify_lemma_3_4_1, verify_lemma_3_5, verify_lemma_3_7,
    verify_projection_lemma, AuxMapParams, ConeSpec, LemmaReport,
};
use iap_core::geom::basis_vector;
use serde::Serialize;

use crate::{exit, CmdResult, Failure};

#[derive(Args)]
pub struct VerifyArgs {
    /// near-scale, sphere-crossing, wedge, wedge-ball, inner-product, projection, tau, or all.
    selector: String,
    /// Shear scale; the default grid is used when absent.
    #[arg(long = "M")]
    m: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Check {
    NearScale,
    SphereCrossing,
    Wedge,
    WedgeBall,
    InnerProduct,
    Projection,
    Tau,
}

const ALL: [Check; 7] = [
    Check::NearScale,
    Check::SphereCrossing,
    Check::Wedge,
    Check::WedgeBall,
    Check::InnerProduct,
    Check::Projection,
    Check::Tau,
];

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::NearScale => "near-scale",
            Check::SphereCrossing => "sphere-crossing",
            Check::Wedge => "wedge",
            Check::WedgeBall => "wedge-ball",
            Check::InnerProduct => "inner-product",
            Check::Projection => "projection",
            Check::Tau => "tau",
        }
    }
}

/// Named selectors, plus the numeric labels the checks are commonly cited by.
fn parse_selector(s: &str) -> Option<Vec<Check>> {
    let one = match s.to_ascii_lowercase().as_str() {
        "all" => return Some(ALL.to_vec()),
        "near-scale" | "3.3" => Check::NearScale,
        "sphere-crossing" | "3.4.1" | "3.4+1" => Check::SphereCrossing,
        "wedge" | "3.5" => Check::Wedge,
        "wedge-ball" | "3.7" => Check::WedgeBall,
        "inner-product" | "m" => Check::InnerProduct,
        "projection" | "4.2" => Check::Projection,
        "tau" | "2.8" => Check::Tau,
        _ => return None,
    };
    Some(vec![one])
}

#[derive(Serialize)]
struct Row {
    check: &'static str,
    params: String,
    checked: u64,
    violations: u64,
    max_slack: f64,
    passed: bool,
}

impl Row {
    fn from_report(check: Check, params: String, r: &LemmaReport) -> Self {
        Row {
            check: check.name(),
            params,
            checked: r.checked,
            violations: r.violation_count,
            max_slack: r.max_slack,
            passed: r.passed(),
        }
    }
}

fn grid<T: Copy>(given: Option<T>, default: &[T]) -> Vec<T> {
    given.map_or_else(|| default.to_vec(), |v| vec![v])
}

fn run(check: Check, args: &VerifyArgs, rows: &mut Vec<Row>) -> Result<(), Failure> {
    let t = args.trials;
    let seed = args.seed;
    match check {
        Check::NearScale => {
            for m in grid(args.m, &[1.0, 4.0, 100.0]) {
                let p = AuxMapParams::new(m, 1.0)?;
                for n in grid(args.dim, &[2, 3, 5]) {
                    let r = verify_lemma_3_3(&p, n, t, seed)?;
                    rows.push(Row::from_report(check, format!("M={m} n={n}"), &r));
                }
            }
        }
        Check::SphereCrossing => {
            for m in grid(args.m, &[0.5, 1.0, 100.0]) {
                for n in grid(args.dim, &[1, 2, 4]) {
                    let r = verify_lemma_3_4_1(m, n, t, seed)?;
                    rows.push(Row::from_report(check, format!("M={m} n={n}"), &r));
                }
            }
        }
        Check::Wedge => {
            for m in grid(args.m, &[1.0, 4.0, 25.0, 100.0]) {
                let p = AuxMapParams::new(m, 1.0)?;
                for n in grid(args.dim, &[2, 3, 5]) {
                    let r = verify_lemma_3_5(&p, n, t, seed)?;
                    rows.push(Row::from_report(check, format!("M={m} n={n}"), &r));
                }
            }
        }
        Check::WedgeBall => {
            for m in grid(args.m, &[4.0, 100.0]) {
                for lambda in grid(args.lambda, &[0.1, 0.5, 1.0]) {
                    let p = AuxMapParams::new(m, lambda)?;
                    for n in grid(args.dim, &[2, 3]) {
                        let r = verify_lemma_3_7(&p, n, t, seed)?;
                        rows.push(Row::from_report(check, format!("M={m} λ={lambda} n={n}"), &r));
                    }
                }
            }
        }
        Check::InnerProduct | Check::Projection => {
            for n in grid(args.dim, &[2, 3]) {
                let r = if check == Check::InnerProduct {
                    verify_inner_product_lemma(n, t, seed)?
                } else {
                    verify_projection_lemma(n, t, seed)?
                };
                rows.push(Row::from_report(check, format!("n={n}"), &r));
            }
        }
        Check::Tau => {
            let n = args.dim.unwrap_or(2);
            for alpha in [PI / 6.0, PI / 4.0] {
                let spec = ConeSpec::new(basis_vector(n, n - 1), alpha, false)?;
                let pts = gen_cone(&spec, 10_000, (1.0, 100.0), seed)?;
                let params = Prop28Params {
                    grid: iap_core::directions::TauGridParams {
                        seed,
                        ..Default::default()
                    },
                    ..Prop28Params::default()
                };
                let r = check_prop28(&pts, &params)?;
                rows.push(Row {
                    check: check.name(),
                    params: format!("cone α={alpha:.4} n={n}: μ={:.4} √(1−τ²)={:.4}", r.mu, r.mu_from_tau),
                    checked: 1,
                    violations: u64::from(!r.consistent),
                    max_slack: r.deviation - r.tolerance,
                    passed: r.consistent,
                });
            }
        }
    }
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let checks = parse_selector(&args.selector).ok_or_else(|| Failure {
        code: exit::INPUT,
        message: format!(
            "unknown selector {:?}; expected one of {}, all",
            args.selector,
            ALL.map(Check::name).join(", ")
        ),
    })?;
    let mut rows = Vec::new();
    for c in checks {
        run(c, args, &mut rows)?;
    }
    let passed = rows.iter().all(|r| r.passed);
    if args.json {
        let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
        s.push('\n');
        print!("{s}");
    } else {
        println!("{:<16} {:<44} {:>10} {:>10} {:>12}  status", "check", "params", "checked", "violations", "max slack");
        for r in &rows {
            println!(
                "{:<16} {:<44} {:>10} {:>10} {:>12.3e}  {}",
                r.check,
                r.params,
                r.checked,
                r.violations,
                r.max_slack,
                if r.passed { "ok" } else { "FAIL" }
            );
        }
    }
    Ok(if passed { exit::OK } else { exit::FAILED })
}
