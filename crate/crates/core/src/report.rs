//! Reading assembly artifacts back, warp and length histograms, summary tables
//! and side-by-side comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::read_text;
use crate::model::Dataset;
use crate::pipeline::{ACTIONS, LAYOUT, REJECTED};
use crate::scaffold::{parse_layout, LayoutHeader, LayoutRow};
use crate::sim::{score_assembly, GroundTruth, Metrics};

pub const WARP_LABELS: [&str; 6] = ["<=1.5", "1.5 - 1.8", "1.8 - 2.0", "2.0 - 5.0", "5.0 - 10.0", ">10.0"];
const WARP_UPPER: [f64; 5] = [1.5, 1.8, 2.0, 5.0, 10.0];

pub const LENGTH_LABELS: [&str; 8] = [
    "250K - 300K",
    "300K - 500K",
    "500K - 800K",
    "800K - 1M",
    "1M - 2M",
    "2M - 3M",
    "3M - 10M",
    "10M - 20M",
];
const LENGTH_EDGES: [i64; 9] = [
    250_000, 300_000, 500_000, 800_000, 1_000_000, 2_000_000, 3_000_000, 10_000_000, 20_000_000,
];

/// Bucket of a warp value; each bucket includes its upper boundary.
pub fn warp_bucket(warp: f64) -> usize {
    WARP_UPPER.iter().position(|&u| warp <= u).unwrap_or(WARP_UPPER.len())
}

/// Bucket of an assembled length, or `None` outside 250K to 20M.
pub fn length_bucket(span: i64) -> Option<usize> {
    (0..LENGTH_LABELS.len()).find(|&i| span > LENGTH_EDGES[i] && span <= LENGTH_EDGES[i + 1])
}

/// One parsed action-log line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionRecord {
    pub kind: String,
    pub args: Vec<String>,
    pub reason: String,
}

/// Assembly artifacts as read from an output directory.
#[derive(Debug, Clone, Default)]
pub struct AssemblyView {
    pub headers: Vec<LayoutHeader>,
    pub rows: Vec<LayoutRow>,
    pub actions: Vec<ActionRecord>,
    /// (frag_a, frag_b, reason) from the rejected-overlap list.
    pub rejected: Vec<(String, String, String)>,
}

fn required(dir: &Path, name: &str) -> Result<String> {
    let p = dir.join(name);
    if !p.exists() {
        return Err(Error::MissingArtifact(p));
    }
    read_text(&p)
}

pub fn parse_actions(text: &str) -> Vec<ActionRecord> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut args = Vec::new();
            let mut reason = String::new();
            let mut toks = l.split('\t');
            let kind = toks.next().unwrap_or_default().to_string();
            for t in toks {
                match t.strip_prefix("reason=") {
                    Some(r) => reason = r.to_string(),
                    None => args.push(t.to_string()),
                }
            }
            ActionRecord { kind, args, reason }
        })
        .collect()
}

impl AssemblyView {
    pub fn load(dir: &Path) -> Result<AssemblyView> {
        let (headers, rows) = parse_layout(&required(dir, LAYOUT)?)?;
        let actions = parse_actions(&required(dir, ACTIONS)?);
        let rejected = match std::fs::read_to_string(dir.join(REJECTED)) {
            Ok(t) => t
                .lines()
                .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
                .filter_map(|l| {
                    let t: Vec<&str> = l.split('\t').collect();
                    (t.len() == 3).then(|| (t[0].to_string(), t[1].to_string(), t[2].to_string()))
                })
                .collect(),
            Err(_) => Vec::new(),
        };
        Ok(AssemblyView { headers, rows, actions, rejected })
    }

    pub fn from_texts(layout: &str, actions: &str, rejected: &str) -> Result<AssemblyView> {
        let (headers, rows) = parse_layout(layout)?;
        let rejected = rejected
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .filter_map(|l| {
                let t: Vec<&str> = l.split('\t').collect();
                (t.len() == 3).then(|| (t[0].to_string(), t[1].to_string(), t[2].to_string()))
            })
            .collect();
        Ok(AssemblyView { headers, rows, actions: parse_actions(actions), rejected })
    }

    /// Clones removed by the repair ladder, with the logged reason.
    pub fn removed(&self) -> BTreeMap<String, String> {
        self.actions
            .iter()
            .filter(|a| a.kind == "remove_vertex" || a.kind == "sideline")
            .filter_map(|a| a.args.first().map(|c| (c.clone(), a.reason.clone())))
            .collect()
    }

    /// Greatest per-contig span of each clone's fragments.
    pub fn clone_spans(&self, ds: &Dataset) -> Result<BTreeMap<String, i64>> {
        let mut ext: BTreeMap<(&str, u32), (i64, i64)> = BTreeMap::new();
        for r in &self.rows {
            let f = ds
                .frag_id(&r.frag)
                .ok_or_else(|| Error::IdMismatch(format!("layout fragment {} not in clone table", r.frag)))?;
            let e = ext.entry((r.clone.as_str(), r.contig)).or_insert((i64::MAX, i64::MIN));
            e.0 = e.0.min(r.start);
            e.1 = e.1.max(r.start + ds.len(f));
        }
        let mut out: BTreeMap<String, i64> = BTreeMap::new();
        for ((c, _), (lo, hi)) in ext {
            let s = out.entry(c.to_string()).or_insert(0);
            *s = (*s).max(hi - lo);
        }
        Ok(out)
    }

    /// (clone, span, warp) for clones with a positive estimated length.
    pub fn warps(&self, ds: &Dataset) -> Result<Vec<(String, i64, f64)>> {
        let mut out = Vec::new();
        for (c, span) in self.clone_spans(ds)? {
            let id = ds
                .clone_id(&c)
                .ok_or_else(|| Error::IdMismatch(format!("layout clone {c} not in clone table")))?;
            let est = ds.clone(id).estimated_length;
            if est > 0 {
                out.push((c, span, span as f64 / est as f64));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WarpHistogram {
    pub warp: [usize; 6],
    /// Assembled-length buckets over clones with warp above 1.5.
    pub length: [usize; 8],
    /// Clones with warp above 1.5 and length outside the length buckets.
    pub length_other: usize,
    /// (clone, span) with span above the long-clone flag.
    pub long_clones: Vec<(String, i64)>,
}

pub fn warp_histogram(warps: &[(String, i64, f64)], long_flag: i64) -> WarpHistogram {
    let mut h = WarpHistogram::default();
    for (c, span, w) in warps {
        h.warp[warp_bucket(*w)] += 1;
        if *w > 1.5 {
            match length_bucket(*span) {
                Some(b) => h.length[b] += 1,
                None => h.length_other += 1,
            }
        }
        if *span > long_flag {
            h.long_clones.push((c.clone(), *span));
        }
    }
    h.long_clones.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    h
}

/// Warp histogram TSV; the header names the buckets.
pub fn warp_tsv(columns: &[(&str, &WarpHistogram)]) -> String {
    let mut out = format!("#assembly\t{}\n", WARP_LABELS.join("\t"));
    for (name, h) in columns {
        let cells: Vec<String> = h.warp.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(out, "{name}\t{}", cells.join("\t"));
    }
    out
}

pub fn length_tsv(columns: &[(&str, &WarpHistogram)]) -> String {
    let mut out = format!("#assembly\t{}\tTotal\n", LENGTH_LABELS.join("\t"));
    for (name, h) in columns {
        let cells: Vec<String> = h.length.iter().map(|n| n.to_string()).collect();
        let total: usize = h.length.iter().sum();
        let _ = writeln!(out, "{name}\t{}\t{total}", cells.join("\t"));
    }
    out
}

fn table_text(title: &str, labels: &[&str], columns: &[(&str, Vec<usize>)]) -> String {
    let mut out = format!("{title:<14}");
    for (name, _) in columns {
        let _ = write!(out, "{name:>14}");
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        let _ = write!(out, "{l:<14}");
        for (_, v) in columns {
            let _ = write!(out, "{:>14}", v[i]);
        }
        out.push('\n');
    }
    out
}

/// One row of the assembly summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SummaryRow {
    pub bacs: usize,
    pub fragments_used: usize,
    pub fragments: usize,
    pub contigs: usize,
    pub length: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Summary {
    pub singletons: SummaryRow,
    pub non_singletons: SummaryRow,
}

impl Summary {
    pub fn total(&self) -> SummaryRow {
        let (a, b) = (self.singletons, self.non_singletons);
        SummaryRow {
            bacs: a.bacs + b.bacs,
            fragments_used: a.fragments_used + b.fragments_used,
            fragments: a.fragments + b.fragments,
            contigs: a.contigs + b.contigs,
            length: a.length + b.length,
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("#row\tBACs\tFragments Used/Fragments\tContigs\tLength\n");
        for (name, r) in [("singletons", self.singletons), ("non-singletons", self.non_singletons), ("total", self.total())] {
            let _ = writeln!(out, "{name}\t{}\t{}/{}\t{}\t{}", r.bacs, r.fragments_used, r.fragments, r.contigs, r.length);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<16}{:>8}{:>28}{:>10}{:>16}\n", "", "BACs", "Fragments Used/Fragments", "Contigs", "Length (bp)");
        for (name, r) in [("singletons", self.singletons), ("non-singletons", self.non_singletons), ("total", self.total())] {
            let _ = writeln!(
                out,
                "{name:<16}{:>8}{:>28}{:>10}{:>16}",
                r.bacs,
                format!("{}/{}", r.fragments_used, r.fragments),
                r.contigs,
                r.length
            );
        }
        out
    }
}

/// Summary split by contigs holding one BAC versus several.
pub fn summarize(view: &AssemblyView, ds: &Dataset) -> Summary {
    let mut clones: BTreeMap<u32, BTreeSet<&str>> = BTreeMap::new();
    let mut used: BTreeMap<u32, usize> = BTreeMap::new();
    for r in &view.rows {
        clones.entry(r.contig).or_default().insert(r.clone.as_str());
        *used.entry(r.contig).or_default() += 1;
    }
    let mut s = Summary::default();
    for h in &view.headers {
        let Some(cs) = clones.get(&h.contig) else { continue };
        let row = if cs.len() == 1 { &mut s.singletons } else { &mut s.non_singletons };
        row.bacs += cs.len();
        row.contigs += 1;
        row.length += h.length;
        row.fragments_used += used[&h.contig];
        row.fragments += cs
            .iter()
            .filter_map(|c| ds.clone_id(c))
            .map(|c| ds.clone(c).fragments.len())
            .sum::<usize>();
    }
    s
}

/// Plain-text and TSV report for one assembly.
pub struct Report {
    pub text: String,
    pub warp_tsv: String,
    pub length_tsv: String,
    pub summary_tsv: String,
}

pub fn report(view: &AssemblyView, ds: &Dataset, long_flag: i64) -> Result<Report> {
    let warps = view.warps(ds)?;
    let h = warp_histogram(&warps, long_flag);
    let summary = summarize(view, ds);
    let mut text = String::from("Assembly summary\n");
    text.push_str(&summary.to_text());
    text.push_str("\nWarp\n");
    text.push_str(&table_text("warp", &WARP_LABELS, &[("assembly", h.warp.to_vec())]));
    text.push_str("\nAssembled BAC length, warp > 1.5\n");
    text.push_str(&table_text("length", &LENGTH_LABELS, &[("assembly", h.length.to_vec())]));
    let _ = writeln!(text, "{:<14}{:>14}", "Total", h.length.iter().sum::<usize>());
    let _ = writeln!(text, "\nLong BACs (span > {long_flag} bp): {}", h.long_clones.len());
    for (c, span) in &h.long_clones {
        let _ = writeln!(text, "  {c}\t{span}");
    }
    Ok(Report {
        text,
        warp_tsv: warp_tsv(&[("assembly", &h)]),
        length_tsv: length_tsv(&[("assembly", &h)]),
        summary_tsv: summary.to_tsv(),
    })
}

pub struct Comparison {
    pub text: String,
    pub warnings: Vec<String>,
    pub metrics: Option<(Metrics, Metrics)>,
}

/// Compare two assemblies over the clones both of them place.
pub fn compare(
    a: &AssemblyView,
    b: &AssemblyView,
    ds: &Dataset,
    truth: Option<&GroundTruth>,
    long_flag: i64,
) -> Result<Comparison> {
    let ca: BTreeSet<&str> = a.rows.iter().map(|r| r.clone.as_str()).collect();
    let cb: BTreeSet<&str> = b.rows.iter().map(|r| r.clone.as_str()).collect();
    let common: BTreeSet<&str> = ca.intersection(&cb).copied().collect();
    let mut warnings = Vec::new();
    if ca != cb {
        warnings.push(format!(
            "clone sets differ: {} only in A, {} only in B, {} shared",
            ca.difference(&cb).count(),
            cb.difference(&ca).count(),
            common.len()
        ));
    }
    if common.is_empty() {
        warnings.push("no shared clones; comparison is empty".to_string());
    }
    let keep = |w: Vec<(String, i64, f64)>| -> Vec<(String, i64, f64)> {
        w.into_iter().filter(|(c, _, _)| common.contains(c.as_str())).collect()
    };
    let ha = warp_histogram(&keep(a.warps(ds)?), long_flag);
    let hb = warp_histogram(&keep(b.warps(ds)?), long_flag);
    let mut text = String::new();
    for w in &warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    text.push_str(&table_text("warp", &WARP_LABELS, &[("A", ha.warp.to_vec()), ("B", hb.warp.to_vec())]));
    text.push('\n');
    text.push_str(&table_text("length", &LENGTH_LABELS, &[("A", ha.length.to_vec()), ("B", hb.length.to_vec())]));
    let sa = summarize(a, ds).total();
    let sb = summarize(b, ds).total();
    let _ = writeln!(text, "\n{:<14}{:>14}{:>14}", "", "A", "B");
    let _ = writeln!(text, "{:<14}{:>14}{:>14}", "fragments", sa.fragments_used, sb.fragments_used);
    let _ = writeln!(text, "{:<14}{:>14}{:>14}", "contigs", sa.contigs, sb.contigs);
    let metrics = match truth {
        Some(t) => {
            let ma = score_assembly(a, t, ds)?;
            let mb = score_assembly(b, t, ds)?;
            let _ = writeln!(
                text,
                "{:<14}{:>13.2}%{:>13.2}%",
                "order",
                100.0 * ma.order_agreement(),
                100.0 * mb.order_agreement()
            );
            Some((ma, mb))
        }
        None => None,
    };
    Ok(Comparison { text, warnings, metrics })
}
