//! Flat CSV plot data extracted from reports.

use serde_json::Value;

use crate::tasks::num;
use crate::CliError;

pub const KINDS: [&str; 3] = ["indicatrix", "curvature", "convergence"];

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        v => v.to_string(),
    }
}

fn header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn arr(v: &Value) -> &[Value] {
    v.as_array().map_or(&[], Vec::as_slice)
}

/// `dir_1,...,dir_n,F` from a task carrying an `indicatrix`.
pub fn indicatrix_csv(task: &Value) -> Option<String> {
    let ind = task.get("indicatrix")?;
    let dirs = arr(&ind["directions"]);
    let values = arr(&ind["values"]);
    let n = dirs.first().map_or(0, |d| arr(d).len());
    let mut cols = header("dir", n);
    cols.push("F".into());
    let mut out = cols.join(",") + "\n";
    for (d, f) in dirs.iter().zip(values) {
        let mut row: Vec<String> = arr(d).iter().map(cell).collect();
        row.push(cell(f));
        out += &(row.join(",") + "\n");
    }
    Some(out)
}

/// `x_*,y_*,v_*,K,Ric,residual` per sampled flag.
pub fn curvature_csv(task: &Value) -> Option<String> {
    if task["kind"] != "curvature" {
        return None;
    }
    let flags = arr(&task["flags"]);
    let n = flags.first().map_or(0, |f| arr(&f["x"]).len());
    let mut cols = header("x", n);
    cols.extend(header("y", n));
    cols.extend(header("v", n));
    cols.extend(["K", "Ric", "residual"].map(String::from));
    let mut out = cols.join(",") + "\n";
    for f in flags {
        let mut row: Vec<String> = ["x", "y", "v"].iter().flat_map(|k| arr(&f[*k]).iter().map(cell)).collect();
        row.extend(["K", "Ric", "residual"].iter().map(|k| cell(&f[*k])));
        out += &(row.join(",") + "\n");
    }
    Some(out)
}

/// `bin_lo,bin_hi,count` over the sampled flag curvatures.
pub fn histogram_csv(task: &Value, bins: usize) -> Option<String> {
    if task["kind"] != "curvature" || bins == 0 {
        return None;
    }
    let ks: Vec<f64> = arr(&task["flags"]).iter().filter_map(|f| f["K"].as_f64()).collect();
    let lo = ks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0usize; bins];
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    for k in &ks {
        let i = (((k - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let mut out = String::from("bin_lo,bin_hi,count\n");
    if ks.is_empty() {
        return Some(out);
    }
    for (i, c) in counts.iter().enumerate() {
        let a = lo + width * i as f64;
        out += &format!("{},{},{c}\n", cell(&num(a)), cell(&num(a + width)));
    }
    Some(out)
}

/// `stage,epsilon,sup_gap` from smoothing or converge tasks.
pub fn convergence_csv(task: &Value) -> Option<String> {
    let stages = task.get("stages")?;
    let mut out = String::from("stage,epsilon,sup_gap\n");
    for (i, s) in arr(stages).iter().enumerate() {
        out += &format!("{i},{},{}\n", cell(&s["epsilon"]), cell(&s["sup_gap"]));
    }
    Some(out)
}

fn submersion_csv(task: &Value) -> String {
    let mut out = String::from("sample,k_total,k_base\n");
    for (i, s) in arr(&task["flags"]).iter().enumerate() {
        out += &format!("{i},{},{}\n", cell(&s["k_total"]), cell(&s["k_base"]));
    }
    out
}

fn fp_csv(task: &Value) -> String {
    let mut out = String::from("plane,max_k\n");
    for (i, k) in arr(&task["plane_max"]).iter().enumerate() {
        out += &format!("{i},{}\n", cell(k));
    }
    out
}

/// The natural CSV of a task, if it has tabular data.
pub fn task_csv(task: &Value) -> Option<String> {
    match task["kind"].as_str()? {
        "curvature" => curvature_csv(task),
        "chebyshev" => indicatrix_csv(task),
        "smoothing" | "converge" => convergence_csv(task),
        "submersion" => Some(submersion_csv(task)),
        "fp" => Some(fp_csv(task)),
        _ => None,
    }
}

/// Plot data of the first task in `report` that provides `kind`.
pub fn plot(report: &Value, kind: &str, bins: usize) -> Result<String, CliError> {
    if !KINDS.contains(&kind) {
        return Err(CliError::Parse(format!("unknown plot kind '{kind}' (expected one of {})", KINDS.join(", "))));
    }
    let tasks = report
        .get("tasks")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Parse("not a finslerlab report: no 'tasks' array".into()))?;
    tasks
        .iter()
        .find_map(|t| match kind {
            "indicatrix" => indicatrix_csv(t),
            "curvature" => histogram_csv(t, bins),
            _ => convergence_csv(t),
        })
        .ok_or_else(|| CliError::Parse(format!("report has no task with {kind} data")))
}
