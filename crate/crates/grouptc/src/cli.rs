//! File-based command line interface.
//!
//! One executable, subcommands per pipeline stage. Every run prints a
//! single machine-parseable `key=value` summary line; exit codes are
//! 0 success, 1 validation error, 2 I/O error, 3 infeasible or
//! expected-failure. Identical invocations produce byte-identical outputs.

use crate::action::{
    cube_grid_action, regular_action, square_grid_action, DomainSignal,
    PermutationAction,
};
use crate::completeness::{
    completeness_scan, metamer_search, MetamerConfig, RestartOutcome, ScanFilter,
};
use crate::gconv::{g_convolve, max_g_pool, FilterBank};
use crate::group::{make_group, FiniteGroup, GroupKind};
use crate::io::{
    self, format_f64, group_from_json, group_to_json, signal_from_csv, signal_to_csv, IoError,
    CSV_VERSION_HEADER,
};
use crate::rng::Rng;
use crate::spectral::{
    builtin_irreps, gft, load_irreps, recover_signal, recovery_plan, IrrepTable, RecoveryError,
    SpectralContext,
};
use crate::tc::{symmetry_classes, triple_correlation_full, triple_correlation_reduced};
use crate::train::{
    load_model, loss_and_gradients, run_comparison, save_model, synth_dataset, train_model,
    Architecture, GridSpec, Model, ModelEnv, TrainConfig, Variant,
};
use crate::train::checkpoint::DatasetSpec;
use crate::train::compare::{evaluate, paired_architectures};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Outcome of one CLI invocation.
#[derive(Debug)]
pub struct CommandResult {
    pub exit_code: i32,
    pub summary: Vec<(String, String)>,
    pub written: Vec<String>,
}

impl CommandResult {
    pub fn summary_line(&self) -> String {
        self.summary
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Validation(String),
    Io(String),
    /// Expected failure; carries summary entries for the output line.
    Infeasible { message: String, summary: Summary },
}

impl CliError {
    fn infeasible(message: impl Into<String>) -> CliError {
        CliError::Infeasible { message: message.into(), summary: Vec::new() }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Infeasible { .. } => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Io(m) => m,
            CliError::Infeasible { message, .. } => message,
        }
    }

    fn summary(&self) -> Summary {
        let mut out = match self {
            CliError::Infeasible { summary, .. } => summary.clone(),
            _ => Vec::new(),
        };
        out.push(kv("error", self.message().replace(' ', "_")));
        out
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::File { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

macro_rules! validation_from {
    ($($ty:path),*) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Validation(e.to_string())
            }
        })*
    };
}

validation_from!(
    crate::group::GroupError,
    crate::action::ActionError,
    crate::gconv::ConvError,
    crate::tc::TcError,
    crate::spectral::IrrepError,
    crate::spectral::BispectrumError,
    crate::spectral::FourierError,
    crate::completeness::CompletenessError,
    crate::train::TrainError,
    crate::train::IdxError
);

impl From<RecoveryError> for CliError {
    fn from(e: RecoveryError) -> Self {
        match e {
            RecoveryError::InfeasiblePlan { .. } => CliError::infeasible(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

type Summary = Vec<(String, String)>;

fn kv(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

struct Flags {
    values: BTreeMap<String, String>,
}

impl Flags {
    fn parse(args: &[String]) -> Result<Flags, CliError> {
        let mut values = BTreeMap::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let name = arg
                .strip_prefix("--")
                .ok_or_else(|| CliError::Usage(format!("BadFlag: expected --flag, got {arg}")))?;
            // boolean flags take no value
            if matches!(name, "reduced") {
                values.insert(name.to_string(), "true".to_string());
                i += 1;
                continue;
            }
            let value = args
                .get(i + 1)
                .ok_or_else(|| CliError::Usage(format!("BadFlag: --{name} needs a value")))?;
            values.insert(name.to_string(), value.clone());
            i += 2;
        }
        Ok(Flags { values })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    fn require(&self, name: &str) -> Result<&str, CliError> {
        self.get(name)
            .ok_or_else(|| CliError::Usage(format!("BadFlag: missing required --{name}")))
    }

    fn parse_num<T: std::str::FromStr>(&self, name: &str, default: T) -> Result<T, CliError> {
        match self.get(name) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::Usage(format!("BadFlag: cannot parse --{name} {raw}"))),
        }
    }

    fn threads(&self) -> Result<usize, CliError> {
        let t: usize = self.parse_num("threads", 1)?;
        if t == 0 {
            return Err(CliError::Usage("BadFlag: --threads must be at least 1".into()));
        }
        Ok(t)
    }
}

/// Parse a group kind string: `c4`, `d16`, `klein`, `o`, `oh`,
/// `cyclic:N`, `dihedral:N`, `product:<a>*<b>`.
pub fn parse_group_kind(spec: &str) -> Option<GroupKind> {
    let s = spec.trim().to_ascii_lowercase();
    match s.as_str() {
        "klein" | "z2xz2" => return Some(GroupKind::Klein),
        "o" | "octahedral" => return Some(GroupKind::Octahedral),
        "oh" | "full-octahedral" | "full_octahedral" => return Some(GroupKind::FullOctahedral),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("cyclic:") {
        return rest.parse().ok().map(GroupKind::Cyclic);
    }
    if let Some(rest) = s.strip_prefix("dihedral:") {
        return rest.parse().ok().map(GroupKind::Dihedral);
    }
    if let Some(rest) = s.strip_prefix("product:") {
        let (a, b) = rest.split_once('*')?;
        return Some(GroupKind::DirectProduct(
            Box::new(parse_group_kind(a)?),
            Box::new(parse_group_kind(b)?),
        ));
    }
    if let Some(rest) = s.strip_prefix('c') {
        if let Ok(n) = rest.parse() {
            return Some(GroupKind::Cyclic(n));
        }
    }
    if let Some(rest) = s.strip_prefix('d') {
        if let Ok(n) = rest.parse() {
            return Some(GroupKind::Dihedral(n));
        }
    }
    None
}

fn kind_from_group_name(name: &str) -> Option<GroupKind> {
    parse_group_kind(name)
}

/// `--group` accepts a kind string or a JSON file path.
fn resolve_group(spec: &str) -> Result<(Arc<FiniteGroup>, Option<GroupKind>), CliError> {
    if let Some(kind) = parse_group_kind(spec) {
        let group = make_group(&kind)?;
        return Ok((group, Some(kind)));
    }
    let json = io::read_to_string(spec)?;
    let group = group_from_json(spec, &json)?;
    let kind = kind_from_group_name(group.name());
    Ok((group, kind))
}

fn resolve_irreps(
    flags: &Flags,
    group: &Arc<FiniteGroup>,
    kind: &Option<GroupKind>,
) -> Result<IrrepTable, CliError> {
    if let Some(path) = flags.get("irreps") {
        let json = io::read_to_string(path)?;
        return Ok(load_irreps(group, &json)?);
    }
    match kind {
        Some(k) => Ok(builtin_irreps(k)?),
        None => Err(CliError::Validation(
            "MissingIrreps: provide --irreps for groups without a built-in table".into(),
        )),
    }
}

fn resolve_action(
    flags: &Flags,
    group: &Arc<FiniteGroup>,
    kind: &Option<GroupKind>,
) -> Result<PermutationAction, CliError> {
    match flags.get("domain").unwrap_or("regular") {
        "regular" => Ok(regular_action(group)),
        spec if spec.starts_with("square:") => {
            let n: usize = spec[7..]
                .parse()
                .map_err(|_| CliError::Usage(format!("BadFlag: bad domain {spec}")))?;
            let kind = kind.clone().ok_or_else(|| {
                CliError::Validation("UnsupportedGroup: grid domains need a built-in kind".into())
            })?;
            Ok(square_grid_action(&kind, n)?)
        }
        spec if spec.starts_with("cube:") => {
            let n: usize = spec[5..]
                .parse()
                .map_err(|_| CliError::Usage(format!("BadFlag: bad domain {spec}")))?;
            let kind = kind.clone().ok_or_else(|| {
                CliError::Validation("UnsupportedGroup: grid domains need a built-in kind".into())
            })?;
            Ok(cube_grid_action(&kind, n)?)
        }
        other => Err(CliError::Usage(format!("BadFlag: unknown domain {other}"))),
    }
}

fn read_single_signal(path: &str, expected: usize) -> Result<Vec<f64>, CliError> {
    let text = io::read_to_string(path)?;
    let channels = signal_from_csv(path, &text)?;
    if channels.len() != 1 {
        return Err(CliError::Validation(format!(
            "LengthMismatch: expected a single-channel signal, got {} channels",
            channels.len()
        )));
    }
    let signal = channels.into_iter().next().unwrap();
    if signal.len() != expected {
        return Err(CliError::Validation(format!(
            "LengthMismatch: signal has {} values, expected {expected}",
            signal.len()
        )));
    }
    Ok(signal)
}

fn write_output(
    path: Option<&str>,
    content: &str,
    written: &mut Vec<String>,
) -> Result<(), CliError> {
    if let Some(path) = path {
        io::write_string(path, content)?;
        written.push(path.to_string());
    }
    Ok(())
}

/// Entry point used by the binary; maps every error onto an exit code and
/// an `error=` summary entry.
pub fn run(args: &[String]) -> CommandResult {
    match dispatch(args) {
        Ok((summary, written)) => CommandResult { exit_code: 0, summary, written },
        Err(e) => {
            eprintln!("error: {}", e.message());
            CommandResult {
                exit_code: e.exit_code(),
                summary: e.summary(),
                written: Vec::new(),
            }
        }
    }
}

fn dispatch(args: &[String]) -> Result<(Summary, Vec<String>), CliError> {
    let (command, rest) = args
        .split_first()
        .ok_or_else(|| CliError::Usage("UnknownCommand: no command given".into()))?;
    let (sub, rest) = rest
        .split_first()
        .ok_or_else(|| CliError::Usage(format!("UnknownCommand: {command} needs a subcommand")))?;
    let flags = Flags::parse(rest)?;
    flags.threads()?; // validated; execution is sequential and thread-count independent
    match (command.as_str(), sub.as_str()) {
        ("group", "make") => group_make(&flags),
        ("group", "validate") => group_validate(&flags),
        ("action", "dump") => action_dump(&flags),
        ("conv", "run") => conv_run(&flags),
        ("tc", "compute") => tc_compute(&flags),
        ("spectral", "gft") => spectral_gft(&flags),
        ("spectral", "bispectrum") => spectral_bispectrum(&flags),
        ("spectral", "kron-table") => spectral_kron_table(&flags),
        ("spectral", "plan") => spectral_plan(&flags),
        ("spectral", "recover") => spectral_recover(&flags),
        ("completeness", "scan") => completeness_scan_cmd(&flags),
        ("completeness", "metamer") => completeness_metamer(&flags),
        ("train", "run") => train_run(&flags),
        ("train", "compare") => train_compare(&flags),
        ("train", "gradcheck") => train_gradcheck(&flags),
        _ => Err(CliError::Usage(format!("UnknownCommand: {command} {sub}"))),
    }
}

fn group_make(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let kind = parse_group_kind(flags.require("kind")?)
        .ok_or_else(|| CliError::Usage("BadFlag: unrecognized --kind".into()))?;
    let group = make_group(&kind)?;
    let mut written = Vec::new();
    write_output(flags.get("out"), &group_to_json(&group), &mut written)?;
    let summary = vec![
        kv("name", group.name()),
        kv("order", group.order()),
        kv("commutative", group.is_commutative()),
        kv("classes", group.conjugacy_classes().len()),
    ];
    Ok((summary, written))
}

fn group_validate(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let path = flags.require("table")?;
    let json = io::read_to_string(path)?;
    let group = group_from_json(path, &json)?;
    let summary = vec![
        kv("name", group.name()),
        kv("order", group.order()),
        kv("identity", group.identity()),
        kv("commutative", group.is_commutative()),
        kv("classes", group.conjugacy_classes().len()),
    ];
    Ok((summary, Vec::new()))
}

fn action_dump(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (group, kind) = resolve_group(flags.require("group")?)?;
    let action = resolve_action(flags, &group, &kind)?;
    let mut csv = format!("{CSV_VERSION_HEADER}\nelement,domain_index,image_index\n");
    for g in 0..group.order() {
        for u in 0..action.domain_size() {
            csv.push_str(&format!("{g},{u},{}\n", action.apply_point(g, u)));
        }
    }
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let summary = vec![
        kv("group", group.name()),
        kv("domain_size", action.domain_size()),
        kv("elements", group.order()),
    ];
    Ok((summary, written))
}

fn conv_run(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (group, kind) = resolve_group(flags.require("group")?)?;
    let action = resolve_action(flags, &group, &kind)?;
    let signal_path = flags.require("signal")?;
    let signal = read_single_signal(signal_path, action.domain_size())?;
    let filters_path = flags.require("filters")?;
    let filters_text = io::read_to_string(filters_path)?;
    let filters = signal_from_csv(filters_path, &filters_text)?;
    let bank = FilterBank::new(filters);
    let f = DomainSignal::new(signal, action.shape().clone());
    let theta = g_convolve(&bank, &f, &action)?;
    let pooled = max_g_pool(&theta);
    let csv = signal_to_csv(&theta.values);
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let mut summary = vec![
        kv("group", group.name()),
        kv("channels", theta.channels()),
        kv("group_order", group.order()),
    ];
    summary.push(kv(
        "max_pool",
        pooled.iter().map(|v| format_f64(*v)).collect::<Vec<_>>().join(";"),
    ));
    Ok((summary, written))
}

fn tc_compute(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (group, _) = resolve_group(flags.require("group")?)?;
    let signal = read_single_signal(flags.require("signal")?, group.order())?;
    let reduced = flags.get("reduced").is_some();
    let mut written = Vec::new();
    let summary;
    if reduced {
        let classes = symmetry_classes(&group);
        let values = triple_correlation_reduced(&group, &classes, &signal)?;
        let mut csv = format!("{CSV_VERSION_HEADER}\nclass_rep_g1,class_rep_g2,value\n");
        for (&(g1, g2), v) in classes.representatives.iter().zip(&values) {
            csv.push_str(&format!("{g1},{g2},{}\n", format_f64(*v)));
        }
        write_output(flags.get("out"), &csv, &mut written)?;
        summary = vec![
            kv("group", group.name()),
            kv("classes", classes.class_count()),
            kv("reduced", true),
        ];
    } else {
        let tc = triple_correlation_full(&group, &signal)?;
        let mut csv = format!("{CSV_VERSION_HEADER}\ng1,g2,value\n");
        for g1 in 0..group.order() {
            for g2 in 0..group.order() {
                csv.push_str(&format!("{g1},{g2},{}\n", format_f64(tc.get(g1, g2))));
            }
        }
        write_output(flags.get("out"), &csv, &mut written)?;
        summary = vec![
            kv("group", group.name()),
            kv("pairs", group.order() * group.order()),
            kv("reduced", false),
        ];
    }
    Ok((summary, written))
}

fn spectral_gft(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (group, kind) = resolve_group(flags.require("group")?)?;
    let table = resolve_irreps(flags, &group, &kind)?;
    let signal = read_single_signal(flags.require("signal")?, group.order())?;
    let f = gft(&signal, &table)?;
    let mut csv = format!("{CSV_VERSION_HEADER}\nirrep,row,col,re,im\n");
    for (idx, block) in f.blocks.iter().enumerate() {
        for r in 0..block.rows {
            for c in 0..block.cols {
                let v = block[(r, c)];
                csv.push_str(&format!(
                    "{},{r},{c},{},{}\n",
                    table.irreps[idx].name,
                    format_f64(v.re),
                    format_f64(v.im)
                ));
            }
        }
    }
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let summary = vec![kv("group", group.name()), kv("irreps", table.len())];
    Ok((summary, written))
}

fn spectral_bispectrum(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (group, kind) = resolve_group(flags.require("group")?)?;
    let table = resolve_irreps(flags, &group, &kind)?;
    let signal = read_single_signal(flags.require("signal")?, group.order())?;
    let ctx = SpectralContext::new(table)?;
    let pairs = match flags.get("pairs").unwrap_or("all") {
        "all" => None,
        "planned" => Some(recovery_plan(&ctx).required_pairs()),
        other => return Err(CliError::Usage(format!("BadFlag: unknown pairs {other}"))),
    };
    let beta = ctx.bispectrum(&signal, pairs.as_deref())?;
    let mut csv = format!("{CSV_VERSION_HEADER}\ni,j,row,col,re,im\n");
    for (&(i, j), m) in beta.pairs.iter().zip(&beta.coefficients) {
        for r in 0..m.rows {
            for c in 0..m.cols {
                let v = m[(r, c)];
                csv.push_str(&format!(
                    "{i},{j},{r},{c},{},{}\n",
                    format_f64(v.re),
                    format_f64(v.im)
                ));
            }
        }
    }
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let summary = vec![kv("group", group.name()), kv("coefficients", beta.pairs.len())];
    Ok((summary, written))
}

fn spectral_kron_table(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (group, kind) = resolve_group(flags.require("group")?)?;
    let table = resolve_irreps(flags, &group, &kind)?;
    let ctx = SpectralContext::new(table)?;
    let names: Vec<&str> = ctx.table.irreps.iter().map(|r| r.name.as_str()).collect();
    let mut csv = format!("{CSV_VERSION_HEADER}\nirrep,{}\n", names.join(","));
    for (i, name) in names.iter().enumerate() {
        let mut row = vec![name.to_string()];
        for j in 0..names.len() {
            let cell = ctx
                .kron
                .row(i, j)
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            row.push(format!("\"({cell})\""));
        }
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let summary = vec![kv("group", group.name()), kv("irreps", names.len())];
    Ok((summary, written))
}

fn spectral_plan(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (group, kind) = resolve_group(flags.require("group")?)?;
    let table = resolve_irreps(flags, &group, &kind)?;
    let ctx = SpectralContext::new(table)?;
    let plan = recovery_plan(&ctx);
    let mut csv = format!("{CSV_VERSION_HEADER}\nposition,i,j,kind\n");
    for (pos, &(i, j)) in plan.coefficients.iter().enumerate() {
        let what = if pos == 0 {
            "dc"
        } else if j == 0 && plan.anchors.contains(&i) {
            "anchor"
        } else {
            "product"
        };
        csv.push_str(&format!("{pos},{i},{j},{what}\n"));
    }
    for &(i, j) in &plan.gauge_pairs {
        csv.push_str(&format!("-,{i},{j},closure\n"));
    }
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let summary = vec![
        kv("group", group.name()),
        kv("feasible", plan.feasible),
        kv("coefficients", plan.len()),
        kv("full_pairs", ctx.table.len() * ctx.table.len()),
    ];
    if !plan.feasible {
        let missing = plan
            .missing
            .iter()
            .map(|&k| ctx.table.irreps[k].name.clone())
            .collect::<Vec<_>>()
            .join(";");
        let mut summary = summary;
        summary.push(kv("missing", missing));
        return Err(CliError::Infeasible {
            message: "InfeasiblePlan".into(),
            summary,
        });
    }
    Ok((summary, written))
}

fn spectral_recover(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (group, kind) = resolve_group(flags.require("group")?)?;
    let table = resolve_irreps(flags, &group, &kind)?;
    let signal = read_single_signal(flags.require("signal")?, group.order())?;
    let ctx = SpectralContext::new(table)?;
    let plan = recovery_plan(&ctx);
    if !plan.feasible {
        return Err(CliError::Infeasible {
            message: "InfeasiblePlan".into(),
            summary: vec![kv("group", group.name()), kv("feasible", false)],
        });
    }
    let beta = ctx.bispectrum(&signal, Some(&plan.required_pairs()))?;
    let recovered = recover_signal(&beta, &plan, &ctx)?;
    let csv = signal_to_csv(&[recovered.theta.clone()]);
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let action = regular_action(&group);
    let aligned = orbit_distance(&action, &signal, &recovered.theta);
    let summary = vec![
        kv("group", group.name()),
        kv("coefficients", plan.len()),
        kv("beta_residual", format_f64(recovered.beta_residual)),
        kv("orbit_distance", format_f64(aligned)),
        kv("in_orbit", aligned <= 1e-8),
    ];
    Ok((summary, written))
}

fn orbit_distance(action: &PermutationAction, target: &[f64], candidate: &[f64]) -> f64 {
    let group = action.group();
    let scale = target.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    (0..group.order())
        .map(|h| {
            let hinv = group.inv(h);
            let p = action.perm(hinv);
            let d: f64 = (0..target.len())
                .map(|u| {
                    let diff = target[p[u]] - candidate[u];
                    diff * diff
                })
                .sum::<f64>()
                .sqrt();
            d / scale
        })
        .fold(f64::INFINITY, f64::min)
}

fn parse_values(spec: &str) -> Result<Vec<i64>, CliError> {
    let (lo, hi) = spec
        .split_once("..")
        .ok_or_else(|| CliError::Usage("BadFlag: --values expects lo..hi".into()))?;
    let lo: i64 =
        lo.parse().map_err(|_| CliError::Usage("BadFlag: bad --values lower bound".into()))?;
    let hi: i64 =
        hi.parse().map_err(|_| CliError::Usage("BadFlag: bad --values upper bound".into()))?;
    if hi < lo {
        return Err(CliError::Usage("BadFlag: --values upper bound below lower".into()));
    }
    Ok((lo..=hi).collect())
}

fn completeness_scan_cmd(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (group, kind) = resolve_group(flags.require("group")?)?;
    let table = resolve_irreps(flags, &group, &kind)?;
    let values = parse_values(flags.require("values")?)?;
    let filter = match flags.get("filter").unwrap_or("nonzero-fourier") {
        "all" => ScanFilter::All,
        "nonzero-fourier" => ScanFilter::NonzeroFourier,
        other => return Err(CliError::Usage(format!("BadFlag: unknown filter {other}"))),
    };
    let report = completeness_scan(&group, &table, &values, filter)?;
    let mut csv = format!("{CSV_VERSION_HEADER}\nfield,value\n");
    csv.push_str(&format!("group,{}\n", report.group_name));
    csv.push_str(&format!("signals_total,{}\n", report.signals_total));
    csv.push_str(&format!("signals_scanned,{}\n", report.signals_scanned));
    csv.push_str(&format!("fingerprints,{}\n", report.fingerprints));
    csv.push_str(&format!("same_orbit_pairs,{}\n", report.same_orbit_pairs));
    csv.push_str(&format!("cross_orbit_pairs,{}\n", report.cross_orbit_pairs));
    for (idx, w) in report.witnesses.iter().enumerate() {
        let fmt = |v: &[i64]| {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
        };
        csv.push_str(&format!("witness_{idx},{}|{}\n", fmt(&w.first), fmt(&w.second)));
    }
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let summary = vec![
        kv("group", report.group_name.as_str()),
        kv("signals", report.signals_total),
        kv("scanned", report.signals_scanned),
        kv("fingerprints", report.fingerprints),
        kv("same_orbit_pairs", report.same_orbit_pairs),
        kv("cross_orbit_pairs", report.cross_orbit_pairs),
    ];
    Ok((summary, written))
}

fn completeness_metamer(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let model_path = flags.require("model")?;
    let json = io::read_to_string(model_path)?;
    let loaded = load_model(&json)?;
    let (model, env) = (loaded.model, loaded.env);
    let spec = loaded.dataset.ok_or_else(|| {
        CliError::Validation("MissingDataset: checkpoint has no dataset section".into())
    })?;
    let dataset = synth_dataset(
        &spec.group,
        spec.n_classes,
        spec.n_per_class,
        spec.test_per_class,
        spec.grid.clone(),
        spec.seed,
    )?;
    let targets: usize = flags.parse_num("targets", 5)?;
    let restarts: usize = flags.parse_num("restarts", 10)?;
    let steps: usize = flags.parse_num("steps", 2000)?;
    let seed: u64 = flags.parse_num("seed", 0)?;
    let train_config = loaded.train_config.unwrap_or_default();
    let mut config = MetamerConfig::from_training(&train_config);
    config.restarts = restarts;
    config.steps = steps;
    config.seed = seed;
    let mut csv = format!(
        "{CSV_VERSION_HEADER}\ntarget,restart,outcome,rep_distance,aligned_distance,predicted_class\n"
    );
    let mut converged = 0usize;
    let mut in_orbit = 0usize;
    let mut metamers = 0usize;
    for t in 0..targets.min(dataset.test.len()) {
        let (input, _) = &dataset.test[t];
        let report = metamer_search(&model, &env, t, input, &config, false)?;
        for r in &report.restarts {
            let outcome = match r.outcome {
                RestartOutcome::InOrbit => {
                    converged += 1;
                    in_orbit += 1;
                    "in_orbit"
                }
                RestartOutcome::Metamer => {
                    converged += 1;
                    metamers += 1;
                    "metamer"
                }
                RestartOutcome::NonConvergence => "non_convergence",
            };
            csv.push_str(&format!(
                "{t},{},{outcome},{},{},{}\n",
                r.restart,
                format_f64(r.representation_distance),
                format_f64(r.aligned_input_distance),
                r.predicted_class
            ));
        }
    }
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let summary = vec![
        kv("variant", model.arch.variant),
        kv("targets", targets.min(dataset.test.len())),
        kv("restarts", restarts),
        kv("converged", converged),
        kv("in_orbit", in_orbit),
        kv("metamers", metamers),
    ];
    Ok((summary, written))
}

fn dataset_from_flags(flags: &Flags) -> Result<(crate::train::Dataset, DatasetSpec), CliError> {
    let kind = parse_group_kind(flags.require("group")?)
        .ok_or_else(|| CliError::Usage("BadFlag: --group must be a built-in kind".into()))?;
    let grid_n: usize = flags.parse_num("grid", 5)?;
    let grid = match kind {
        GroupKind::Octahedral | GroupKind::FullOctahedral => GridSpec::Cube(grid_n.min(6)),
        _ => GridSpec::Square(grid_n),
    };
    let n_classes: usize = flags.parse_num("classes", 10)?;
    let n_per_class: usize = flags.parse_num("per-class", 24)?;
    let test_per_class: usize = flags.parse_num("test-per-class", 8)?;
    let data_seed: u64 = flags.parse_num("data-seed", 1)?;
    let dataset =
        synth_dataset(&kind, n_classes, n_per_class, test_per_class, grid.clone(), data_seed)?;
    let spec = DatasetSpec {
        group: kind,
        grid,
        n_classes,
        n_per_class,
        test_per_class,
        seed: data_seed,
    };
    Ok((dataset, spec))
}

fn config_from_flags(flags: &Flags) -> Result<TrainConfig, CliError> {
    let mut config = TrainConfig::default();
    config.learning_rate = flags.parse_num("lr", 1e-3)?;
    config.epochs = flags.parse_num("epochs", 20)?;
    config.batch_size = flags.parse_num("batch", 32)?;
    config.seed = flags.parse_num("seed", 0)?;
    config.weight_decay = flags.parse_num("weight-decay", config.weight_decay)?;
    config.min_learning_rate = flags.parse_num("min-lr", config.min_learning_rate)?;
    config.validate().map_err(CliError::Validation)?;
    Ok(config)
}

fn train_run(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (dataset, spec) = dataset_from_flags(flags)?;
    let config = config_from_flags(flags)?;
    let channels: usize = flags.parse_num("channels", 12)?;
    let hidden: usize = flags.parse_num("hidden", 64)?;
    let variant = match flags.get("variant").unwrap_or("tc") {
        "tc" => Variant::Tc,
        "max" => Variant::Max,
        other => return Err(CliError::Usage(format!("BadFlag: unknown variant {other}"))),
    };
    let (tc_arch, max_arch) = paired_architectures(&dataset, channels, hidden)?;
    let arch = match variant {
        Variant::Tc => tc_arch,
        Variant::Max => max_arch,
    };
    let env = ModelEnv::new(&arch)?;
    let mut rng = Rng::new(config.seed.wrapping_mul(0x9E37_79B9) ^ 0xC0FFEE);
    let mut model = Model::new(arch, &env, &mut rng);
    let log = train_model(&mut model, &env, &dataset, &config)?;
    let (test_loss, test_acc) = evaluate(&model, &env, &dataset.test)?;
    let mut written = Vec::new();
    if let Some(path) = flags.get("log") {
        let mut csv = format!("{CSV_VERSION_HEADER}\nepoch,split,loss,accuracy,lr\n");
        for row in &log {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                row.epoch,
                row.split,
                format_f64(row.loss),
                format_f64(row.accuracy),
                format_f64(row.learning_rate)
            ));
        }
        io::write_string(path, &csv)?;
        written.push(path.to_string());
    }
    write_output(
        flags.get("out"),
        &save_model(&model, Some(&spec), Some(&config)),
        &mut written,
    )?;
    let summary = vec![
        kv("variant", model.arch.variant),
        kv("params", model.param_count()),
        kv("test_loss", format_f64(test_loss)),
        kv("test_accuracy", format_f64(test_acc)),
    ];
    Ok((summary, written))
}

fn train_compare(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let (dataset, _) = dataset_from_flags(flags)?;
    let config = config_from_flags(flags)?;
    let channels: usize = flags.parse_num("channels", 12)?;
    let hidden: usize = flags.parse_num("hidden", 64)?;
    let seeds: Vec<u64> = flags
        .get("seeds")
        .unwrap_or("0,1,2,3")
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("BadFlag: bad seed {s}")))
        })
        .collect::<Result<_, _>>()?;
    let report = run_comparison(&dataset, &config, &seeds, channels, hidden)?;
    let mut csv = format!("{CSV_VERSION_HEADER}\nseed,tc_accuracy,max_accuracy\n");
    for r in &report.results {
        csv.push_str(&format!(
            "{},{},{}\n",
            r.seed,
            format_f64(r.tc_accuracy),
            format_f64(r.max_accuracy)
        ));
    }
    let mut written = Vec::new();
    write_output(flags.get("out"), &csv, &mut written)?;
    let summary = vec![
        kv("tc_mean", format_f64(report.tc_mean)),
        kv("tc_std", format_f64(report.tc_std)),
        kv("max_mean", format_f64(report.max_mean)),
        kv("max_std", format_f64(report.max_std)),
        kv("tc_params", report.tc_params),
        kv("max_params", report.max_params),
        kv("param_diff_pct", format_f64(report.param_diff_percent)),
        kv("tc_ge_max", report.tc_mean >= report.max_mean),
    ];
    Ok((summary, written))
}

fn train_gradcheck(flags: &Flags) -> Result<(Summary, Vec<String>), CliError> {
    let variant = match flags.get("variant").unwrap_or("tc") {
        "tc" => Variant::Tc,
        "max" => Variant::Max,
        other => return Err(CliError::Usage(format!("BadFlag: unknown variant {other}"))),
    };
    let seed: u64 = flags.parse_num("seed", 0)?;
    let configs: usize = flags.parse_num("configs", 5)?;
    let worst = gradient_check(variant, seed, configs)?;
    let summary = vec![
        kv("variant", variant),
        kv("configs", configs),
        kv("max_rel_error", format_f64(worst)),
    ];
    if worst > 1e-4 {
        return Err(CliError::Validation(format!(
            "GradientMismatch: max relative error {worst:.3e} exceeds 1e-4"
        )));
    }
    Ok((summary, Vec::new()))
}

/// Central-difference check of the full model gradient on random
/// configurations; returns the worst relative error seen.
fn gradient_check(variant: Variant, seed: u64, configs: usize) -> Result<f64, CliError> {
    let arch = Architecture {
        variant,
        group: GroupKind::Dihedral(4),
        grid: GridSpec::Square(3),
        channels: 2,
        hidden: [8, 8, 8],
        n_classes: 3,
    };
    let env = ModelEnv::new(&arch)?;
    let mut worst = 0.0f64;
    for c in 0..configs {
        let mut rng = Rng::new(seed.wrapping_add(c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut model = Model::new(arch.clone(), &env, &mut rng);
        let inputs: Vec<Vec<f64>> =
            (0..3).map(|_| (0..9).map(|_| rng.uniform(0.0, 1.0)).collect()).collect();
        let labels = vec![0usize, 1, 2];
        let (_, grads, _) = loss_and_gradients(&model, &env, &inputs, &labels)?;
        let eps = 1e-5;
        let total = model.param_count();
        let step = (total / 40).max(1);
        for p in (0..total).step_by(step) {
            let orig = model.params[p];
            model.params[p] = orig + eps;
            let (lp, _, _) = loss_and_gradients(&model, &env, &inputs, &labels)?;
            model.params[p] = orig - eps;
            let (lm, _, _) = loss_and_gradients(&model, &env, &inputs, &labels)?;
            model.params[p] = orig;
            let fd = (lp - lm) / (2.0 * eps);
            let rel = (grads[p] - fd).abs() / grads[p].abs().max(fd.abs()).max(1e-4);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
