//! Command-line front end: problem and plan files, subcommands, exit codes.
//!
//! Files are UTF-8 JSON. Users, virtual users and tree nodes are numbered
//! from 1 in files and in printed output. Floats are written with 17
//! significant digits so every binary64 value survives a round trip.
//!
//! Exit codes: 0 success, 1 semantic failure (input not on the dominant
//! face, verification failed), 2 usage, I/O or parse error.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::allocation::{polymatroid_membership, vertex_rates, PairRelation, Permutation, RateAllocation};
use crate::combiner::{build_combination_tree, CombinationTree};
use crate::error::Error;
use crate::shannon::{Nis, Power, Rate, Tolerance};
use crate::splitter::{plan_from_tree, SplitPlan, VirtualUser};
use crate::verifier::{random_powers, sample_dominant_face, verify_plan, VerificationReport};
use crate::PlannerConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

/// Input to `check`, `vertex` and `split`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub powers: Vec<f64>,
    /// Required by every command except `vertex`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    pub noise: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ProblemFile {
    pub fn allocation(&self) -> Result<RateAllocation, CliError> {
        let rates = self.rates.clone().ok_or_else(|| CliError::Usage("problem file has no rates".into()))?;
        Ok(RateAllocation::new(self.powers.clone(), rates, self.noise)?)
    }

    /// The flag wins over the file; the file over the default.
    pub fn tolerance(&self, flag: Option<f64>) -> Result<Tolerance, CliError> {
        match flag.or(self.tolerance) {
            Some(t) => Ok(Tolerance::new(t)?),
            None => Ok(Tolerance::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirtualUserRecord {
    /// 1-based owning user.
    pub user: usize,
    pub power: f64,
    pub nis: f64,
    pub rate: f64,
    /// 1-based step at which the receiver decodes this piece.
    pub decode_position: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeNodeRecord {
    /// Leaves `1..=n` are the users; internal nodes follow in merge order.
    pub id: usize,
    pub members: Vec<usize>,
    pub power: f64,
    pub rate: f64,
    pub nis: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<PairRelation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDump {
    pub root: usize,
    pub merge_order: Vec<usize>,
    pub nodes: Vec<TreeNodeRecord>,
}

impl From<&CombinationTree> for TreeDump {
    fn from(tree: &CombinationTree) -> Self {
        let nodes = tree
            .nodes
            .iter()
            .map(|node| {
                let k = node.id.0;
                TreeNodeRecord {
                    id: k + 1,
                    members: node.members.iter().map(|u| u + 1).collect(),
                    power: node.power.get(),
                    rate: node.rate.get(),
                    nis: node.nis.get(),
                    children: tree.children[k].map(|(lo, hi)| [lo.0 + 1, hi.0 + 1]),
                    relation: tree.relation_at_merge[k],
                }
            })
            .collect();
        Self { root: tree.root.0 + 1, merge_order: tree.merge_order.iter().map(|id| id.0 + 1).collect(), nodes }
    }
}

/// Output of `split`, input of `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub problem: ProblemFile,
    pub epsilon: Vec<f64>,
    pub virtual_users: Vec<VirtualUserRecord>,
    /// 1-based indices into `virtual_users`, first decoded first.
    pub decode_order: Vec<usize>,
    pub verification: VerificationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeDump>,
}

impl PlanFile {
    pub fn new(problem: ProblemFile, plan: &SplitPlan, verification: VerificationReport) -> Self {
        let mut position = vec![0; plan.virtual_users.len()];
        for (step, &k) in plan.decode_order.iter().enumerate() {
            position[k] = step + 1;
        }
        let virtual_users = plan
            .virtual_users
            .iter()
            .zip(&position)
            .map(|(v, &decode_position)| VirtualUserRecord {
                user: v.parent_user + 1,
                power: v.power.get(),
                nis: v.nis.get(),
                rate: v.rate.get(),
                decode_position,
            })
            .collect();
        Self {
            problem,
            epsilon: plan.epsilon.clone(),
            virtual_users,
            decode_order: plan.decode_order.iter().map(|k| k + 1).collect(),
            verification,
            tree: None,
        }
    }

    /// Rebuilds the plan from the file, rejecting records that do not
    /// describe a plan at all. Stored rates are carried but never trusted.
    pub fn to_plan(&self) -> Result<SplitPlan, CliError> {
        let m = self.virtual_users.len();
        let mut virtual_users = Vec::with_capacity(m);
        for (k, r) in self.virtual_users.iter().enumerate() {
            if r.user == 0 {
                return Err(CliError::Usage(format!("virtual user {}: users are numbered from 1", k + 1)));
            }
            virtual_users.push(VirtualUser {
                parent_user: r.user - 1,
                power: Power::new(r.power)?,
                nis: Nis::new(r.nis)?,
                rate: Rate::new(r.rate)?,
            });
        }
        let decode_order = self
            .decode_order
            .iter()
            .map(|&k| match k {
                1.. if k <= m => Ok(k - 1),
                _ => Err(CliError::Usage(format!("decode order names virtual user {k} of {m}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (step, &k) in decode_order.iter().enumerate() {
            if self.virtual_users[k].decode_position != step + 1 {
                return Err(CliError::Usage(format!(
                    "virtual user {} has decode position {} but is decoded at step {}",
                    k + 1,
                    self.virtual_users[k].decode_position,
                    step + 1
                )));
            }
        }
        Ok(SplitPlan { epsilon: self.epsilon.clone(), virtual_users, decode_order })
    }
}

/// Pretty JSON with every float at 17 significant digits.
struct StableFormatter(PrettyFormatter<'static>);

impl Formatter for StableFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` in the file format, with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, StableFormatter(PrettyFormatter::new()));
    // only non-finite floats could fail, and every numeric type rejects those
    value.serialize(&mut ser).expect("file types serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.into(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

#[derive(Debug, Parser)]
#[command(name = "rsma", version, about = "Rate-splitting planner for the Gaussian multi-access channel")]
pub struct Cli {
    /// Numerical tolerance; overrides the problem file's value [default: 1e-9]
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the rate tuple against the capacity region
    Check { problem: PathBuf },
    /// Rates of the vertex for a decoding permutation
    Vertex {
        problem: PathBuf,
        /// 1-based permutation, e.g. `2,1,3`; the first user sees only noise
        #[arg(long, value_delimiter = ',')]
        perm: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Compute, verify and print a splitting plan
    Split {
        problem: PathBuf,
        /// Write the plan file here
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
        /// Include the combination tree in the plan file
        #[arg(long)]
        emit_tree: bool,
    },
    /// Re-check a plan file from its contents alone
    Verify {
        plan: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: OutputFormat,
    },
    /// Write a random problem on the dominant face
    Sample {
        #[arg(long)]
        users: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Vertices mixed into the point [default: users]
        #[arg(long)]
        vertices: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.1)]
        min_power: f64,
        #[arg(long, default_value_t = 10.0)]
        max_power: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit code. Normal output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let io_err = |source| CliError::Io { path: "<stdout>".into(), source };
    match &cli.command {
        Command::Check { problem } => {
            let file: ProblemFile = read_json(problem)?;
            let config = PlannerConfig::with_tolerance(file.tolerance(cli.tolerance)?);
            let verdict = polymatroid_membership(&file.allocation()?, &config)?;
            writeln!(out, "{}", verdict.summary()).map_err(io_err)?;
            Ok(if verdict.is_dominant_face() { 0 } else { 1 })
        }
        Command::Vertex { problem, perm, format } => {
            let file: ProblemFile = read_json(problem)?;
            let powers = file.powers.iter().map(|&p| Power::new(p)).collect::<Result<Vec<_>, _>>()?;
            let pi = match perm {
                Some(labels) => Permutation::from_one_based(labels)?,
                None => Permutation::identity(powers.len()),
            };
            let rates = vertex_rates(&powers, Nis::new(file.noise)?, &pi)?;
            let decode: Vec<usize> = pi.reversed().as_slice().iter().map(|u| u + 1).collect();
            let text = match format {
                OutputFormat::Json => {
                    let rates: Vec<f64> = rates.iter().map(|r| r.get()).collect();
                    to_json(&serde_json::json!({ "rates": rates, "decode_order": decode }))
                }
                OutputFormat::Text => vertex_text(&rates, &decode),
            };
            out.write_all(text.as_bytes()).map_err(io_err)?;
            Ok(0)
        }
        Command::Split { problem, output, format, emit_tree } => {
            let file: ProblemFile = read_json(problem)?;
            let tol = file.tolerance(cli.tolerance)?;
            let ra = file.allocation()?;
            let config = PlannerConfig::with_tolerance(tol);
            let tree = match build_combination_tree(&ra, &config) {
                Ok(tree) => tree,
                Err(Error::NotDominantFace(verdict)) => {
                    writeln!(out, "not on the dominant face: {}", verdict.summary()).map_err(io_err)?;
                    return Ok(1);
                }
                Err(e) => return Err(e.into()),
            };
            let plan = match plan_from_tree(&ra, &tree, tol) {
                Ok(trace) => trace.plan,
                Err(e) => {
                    writeln!(out, "splitting failed: {e}").map_err(io_err)?;
                    return Ok(1);
                }
            };
            let report = verify_plan(&plan, &ra, tol)?;
            let mut plan_file = PlanFile::new(file, &plan, report.clone());
            if *emit_tree {
                plan_file.tree = Some(TreeDump::from(&tree));
            }
            let json = to_json(&plan_file);
            if let Some(path) = output {
                write_file(path, &json)?;
            }
            let text = match format {
                OutputFormat::Json => json,
                OutputFormat::Text => format!("{}{}", stack_diagram(&plan, ra.noise().get()), report_text(&report, &plan)),
            };
            out.write_all(text.as_bytes()).map_err(io_err)?;
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Verify { plan, format } => {
            let file: PlanFile = read_json(plan)?;
            let tol = file.problem.tolerance(cli.tolerance)?;
            let ra = file.problem.allocation()?;
            let split = file.to_plan()?;
            let report = verify_plan(&split, &ra, tol)?;
            let text = match format {
                OutputFormat::Json => to_json(&report),
                OutputFormat::Text => report_text(&report, &split),
            };
            out.write_all(text.as_bytes()).map_err(io_err)?;
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Sample { users, seed, vertices, noise, min_power, max_power, output } => {
            if *users == 0 {
                return Err(CliError::Usage("--users must be at least 1".into()));
            }
            if !(0.0 < *min_power && min_power < max_power && max_power.is_finite()) {
                return Err(CliError::Usage("need 0 < --min-power < --max-power".into()));
            }
            let powers = random_powers(*users, *min_power, *max_power, *seed);
            let ra = sample_dominant_face(&powers, *noise, vertices.unwrap_or(*users), *seed)?;
            let file = ProblemFile {
                powers,
                rates: Some(ra.rates().iter().map(|r| r.get()).collect()),
                noise: *noise,
                tolerance: cli.tolerance,
            };
            let json = to_json(&file);
            match output {
                Some(path) => write_file(path, &json)?,
                None => out.write_all(json.as_bytes()).map_err(io_err)?,
            }
            Ok(0)
        }
    }
}

fn vertex_text(rates: &[Rate], decode: &[usize]) -> String {
    let mut s = String::from("user  rate\n");
    for (u, r) in rates.iter().enumerate() {
        s += &format!("{:<4}  {:.9}\n", u + 1, r.get());
    }
    let order: Vec<String> = decode.iter().map(|u| u.to_string()).collect();
    s += &format!("decode order: {}\n", order.join(" "));
    s
}

/// The power stack drawn top down, noise floor last.
pub fn stack_diagram(plan: &SplitPlan, noise: f64) -> String {
    let mut s = format!("{:>5}  {:<6}  {:>12}  {:>12}  {:>12}\n", "step", "piece", "nis", "power", "rate");
    for (step, &k) in plan.decode_order.iter().enumerate() {
        let v = &plan.virtual_users[k];
        s += &format!(
            "{:>5}  {:<6}  {:>12.6}  {:>12.6}  {:>12.9}\n",
            step + 1,
            plan.label(k),
            v.nis.get(),
            v.power.get(),
            v.rate.get()
        );
    }
    s += &format!("{:>5}  {:<6}  {:>12.6}\n", "", "noise", noise);
    let eps: Vec<String> = plan.epsilon.iter().enumerate().map(|(u, e)| format!("u{}={e:.6}", u + 1)).collect();
    s += &format!("epsilon: {}\n", eps.join(" "));
    s
}

fn report_text(report: &VerificationReport, plan: &SplitPlan) -> String {
    let verdict = |ok: bool| if ok { "ok" } else { "FAILED" };
    format!(
        "stacking: {} (max gap {:.3e})\nrates: {} (max error {:.3e}, power error {:.3e})\nvirtual users: {} for {} users, {}\nverification: {}\n",
        verdict(report.stacking_ok),
        report.max_stack_gap,
        verdict(report.rates_ok),
        report.max_rate_error(),
        report.max_power_error,
        report.virtual_count,
        plan.user_count(),
        verdict(report.cardinality_ok),
        if report.passed() { "PASS" } else { "FAIL" }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitter::compute_split_plan;

    fn three_user_file() -> PlanFile {
        let third = 7f64.log2() / 6.0;
        let problem = ProblemFile { powers: vec![2.0; 3], rates: Some(vec![third; 3]), noise: 1.0, tolerance: None };
        let ra = problem.allocation().unwrap();
        let plan = compute_split_plan(&ra, &PlannerConfig::default()).unwrap();
        let report = verify_plan(&plan, &ra, Tolerance::default()).unwrap();
        PlanFile::new(problem, &plan, report)
    }

    #[test]
    fn floats_round_trip_exactly() {
        let file = three_user_file();
        let json = to_json(&file);
        let back: PlanFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, file);
        assert_eq!(to_json(&back), json);
        assert!(json.contains("\"noise\": 1.0000000000000000e0"));
    }

    #[test]
    fn plan_survives_the_file() {
        let file = three_user_file();
        let plan = file.to_plan().unwrap();
        let again = PlanFile::new(file.problem.clone(), &plan, file.verification.clone());
        assert_eq!(again, file);
    }

    #[test]
    fn field_order_is_fixed() {
        let json = to_json(&three_user_file());
        let keys = ["\"problem\"", "\"epsilon\"", "\"virtual_users\"", "\"decode_order\"", "\"verification\""];
        let at: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(at.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn inconsistent_positions_rejected() {
        let mut file = three_user_file();
        file.virtual_users[0].decode_position += 1;
        assert!(matches!(file.to_plan(), Err(CliError::Usage(_))));
        let mut file = three_user_file();
        file.decode_order[0] = 99;
        assert!(matches!(file.to_plan(), Err(CliError::Usage(_))));
    }

    #[test]
    fn problem_tolerance_precedence() {
        let mut p = ProblemFile { powers: vec![1.0], rates: None, noise: 1.0, tolerance: Some(1e-6) };
        assert_eq!(p.tolerance(None).unwrap().get(), 1e-6);
        assert_eq!(p.tolerance(Some(1e-3)).unwrap().get(), 1e-3);
        p.tolerance = None;
        assert_eq!(p.tolerance(None).unwrap(), Tolerance::default());
        assert!(p.tolerance(Some(-1.0)).is_err());
        assert!(matches!(p.allocation(), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"{"powers": [1.0], "noise": 1.0, "extra": 3}"#;
        assert!(serde_json::from_str::<ProblemFile>(bad).is_err());
    }
}
