//! Command-line front end.
//!
//! ```text
//! bia generate --users 4 [--decodable] [--pair-map FILE] [--out FILE]
//! bia verify   --users 4 [--decodable] [--trials 1000] [--seed 0] [--exact] [--format json|csv] [--pair-map FILE] [--out FILE]
//! bia bound    --users 4 [--format csv|json] [--out FILE]
//! bia simulate --users 4 [--decodable] [--trials 500] [--seed 0] [--snr 30 --snr 40 --snr 50] [--pair-map FILE] [--out DIR]
//! ```
//!
//! `--decodable` swaps the canonical pattern for the searched one that every
//! receiver can decode (K = 3 and 4 only).
//!
//! Exit status: 0 on success, 2 when verification finds a failing receiver,
//! 1 on usage or I/O errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dof;
use crate::error::Result;
use crate::scheme::{PatternMatrix, Scheme, SchemeConfig, SchemeDoc};
use crate::sim::{estimate_dof, plot_script, SimConfig};
use crate::verify::{check_counting, verify_draws, Arithmetic};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bia", version, about = "Blind interference alignment with staggered antenna switching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a scheme and write it as JSON.
    Generate(SchemeArgs),
    /// Check the decodability conditions over random channel draws.
    Verify(VerifyArgs),
    /// Tabulate the sum-DoF bound over alignment-set sizes.
    Bound(BoundArgs),
    /// Monte Carlo sum-rate sweep and DoF slope.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    /// Number of users K (>= 3).
    #[arg(long)]
    pub users: usize,
    /// Use the searched decodable pattern instead of the canonical one.
    #[arg(long)]
    pub decodable: bool,
    /// Scheme JSON whose `pairs` (and `tilde`, if present) override the
    /// generated ones.
    #[arg(long, value_name = "FILE")]
    pub pair_map: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exact arithmetic: rational channels, fraction-free elimination.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub users: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub users: usize,
    #[arg(long)]
    pub decodable: bool,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// SNR point in dB; repeat for a sweep. Defaults to 30, 40, 50.
    #[arg(long = "snr", value_name = "DB", allow_negative_numbers = true)]
    pub snr: Vec<f64>,
    #[arg(long, value_name = "FILE")]
    pub pair_map: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "bia-sim")]
    pub out: PathBuf,
}

fn load_scheme(users: usize, decodable: bool, pair_map: Option<&Path>) -> Result<Scheme> {
    match pair_map {
        None if decodable => Scheme::generate_decodable(users),
        None => Scheme::generate(users),
        Some(path) => {
            let mut doc: SchemeDoc = serde_json::from_str(&fs::read_to_string(path)?)?;
            if doc.users != users {
                return Err(crate::Error::InvalidPairMap(format!(
                    "{} is for K = {}, not {users}",
                    path.display(),
                    doc.users
                )));
            }
            if decodable && doc.tilde.is_none() {
                let pattern = PatternMatrix::generate_decodable(&SchemeConfig::new(users)?)?;
                doc.tilde = Some(pattern.tilde().to_vec());
            }
            doc.into_scheme()
        }
    }
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn with_newline(mut s: String) -> Vec<u8> {
    s.push('\n');
    s.into_bytes()
}

/// Runs one invocation, writing results to `stdout` or the requested files
/// and diagnostics to `stderr`. Returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Generate(a) => {
            let scheme = load_scheme(a.users, a.decodable, a.pair_map.as_deref())?;
            emit(a.out.as_deref(), stdout, &with_newline(scheme.to_json()?))?;
            Ok(EXIT_OK)
        }
        Command::Verify(a) => {
            let scheme = load_scheme(a.scheme.users, a.scheme.decodable, a.scheme.pair_map.as_deref())?;
            let arithmetic = if a.exact { Arithmetic::Exact } else { Arithmetic::Float };
            let run = verify_draws(&scheme, a.trials, a.seed, arithmetic)?;
            let counting = check_counting(&scheme.config, &scheme.beams);
            let bytes = match a.format {
                Format::Json => with_newline(run.to_json()?),
                Format::Csv => {
                    let mut buf = Vec::new();
                    run.write_csv(&mut buf)?;
                    buf
                }
            };
            emit(a.scheme.out.as_deref(), stdout, &bytes)?;
            let failures = run.failures();
            let separation: Vec<String> =
                (0..scheme.config.users).map(|rx| scheme.pattern.separation_rank(rx).to_string()).collect();
            writeln!(
                stderr,
                "K={} draws={} receiver checks={} failures={} counting={} separation ranks=[{}] of m={}",
                scheme.config.users,
                run.draws,
                run.rows.len(),
                failures,
                if counting.per_user_holds && counting.per_receiver_holds { "ok" } else { "FAILED" },
                separation.join(","),
                scheme.config.channel_uses
            )?;
            let ok = failures == 0 && counting.per_user_holds && counting.per_receiver_holds;
            Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Bound(a) => {
            let report = dof::sweep(a.users)?;
            let bytes = match a.format {
                Format::Json => with_newline(report.to_json()?),
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    buf
                }
            };
            emit(a.out.as_deref(), stdout, &bytes)?;
            Ok(EXIT_OK)
        }
        Command::Simulate(a) => {
            let scheme = load_scheme(a.users, a.decodable, a.pair_map.as_deref())?;
            let mut cfg = SimConfig { trials: a.trials, seed: a.seed, ..SimConfig::new(a.users) };
            if !a.snr.is_empty() {
                cfg.snr_db = a.snr;
            }
            let result = estimate_dof(&scheme, &cfg)?;
            fs::create_dir_all(&a.out)?;
            result.write_results_csv(fs::File::create(a.out.join("results.csv"))?)?;
            result.write_summary_csv(fs::File::create(a.out.join("summary.csv"))?)?;
            fs::write(a.out.join("summary.json"), with_newline(result.summary_json()?))?;
            fs::write(a.out.join("plot_summary.py"), plot_script("summary.csv", "summary.png"))?;
            writeln!(
                stdout,
                "K={} slope={:.4} target={} ({:.4}) deviation={:+.2}% tdma_slope={:.4} excluded={}",
                result.users,
                result.fitted_slope,
                dof::display(&result.target_dof),
                dof::to_f64(&result.target_dof),
                100.0 * result.relative_deviation(),
                result.tdma_slope,
                result.excluded
            )?;
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("bia").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["bound", "--users", "four"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["bound", "--users", "2"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn bound_csv() {
        let (code, out, _) = run_capture(&["bound", "--users", "4"]);
        assert_eq!(code, 0);
        assert_eq!(out, "K,l,bound_numerator,bound_denominator\n4,2,4,3\n4,3,24,23\n4,4,1,1\n");
    }

    #[test]
    fn generate_json() {
        let (code, out, _) = run_capture(&["generate", "--users", "3"]);
        assert_eq!(code, 0);
        let s = Scheme::from_json(&out).unwrap();
        assert_eq!(s, Scheme::generate(3).unwrap());
    }

    #[test]
    fn verify_small() {
        let (code, out, err) = run_capture(&["verify", "--users", "3", "--trials", "5", "--format", "csv"]);
        assert_eq!(code, EXIT_VERIFY_FAILED, "{err}");
        assert_eq!(out.lines().count(), 1 + 15);
        assert!(out.lines().nth(1).unwrap().ends_with(",2,3,4,false"));
        assert!(err.contains("separation ranks=[4,5,5] of m=5"), "{err}");
        let (code, _, err) = run_capture(&["verify", "--users", "3", "--decodable", "--trials", "5"]);
        assert_eq!(code, EXIT_OK, "{err}");
        let (code, _, _) = run_capture(&["verify", "--users", "4", "--decodable", "--trials", "2", "--exact"]);
        assert_eq!(code, EXIT_OK);
        let (code, _, err) = run_capture(&["verify", "--users", "5", "--decodable"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("no decodable switching pattern exists for K = 5"));
    }
}
