//! CSV and table rendering for run results.
//!
//! Output schema is fixed: the records CSV carries
//! `flow,seq,t_tx_ns,t_rx_ns,delay_ns`; per-flow series files carry
//! `t_ns,delay_ns` for plotting. Table values are microseconds rendered to
//! 0.01 us.

use crate::scenario::{RunOutput, SweepPoint};
use std::fmt::Write as _;

pub fn us(ns: f64) -> String {
    format!("{:.2}", ns / 1_000.0)
}

/// All delivered records, one line per frame, flows in scenario order.
pub fn records_csv(out: &RunOutput) -> String {
    let mut s = String::from("flow,seq,t_tx_ns,t_rx_ns,delay_ns\n");
    for flow in &out.flows {
        for r in &flow.records {
            writeln!(
                s,
                "{},{},{},{},{}",
                flow.name, r.seq, r.tx_ns, r.rx_ns, r.delay_ns
            )
            .unwrap();
        }
    }
    s
}

/// Time series of one flow for plotting: emission time vs delay.
pub fn series_csv(out: &RunOutput, flow: &str) -> Option<String> {
    let f = out.flow(flow)?;
    let mut s = String::from("t_ns,delay_ns\n");
    for r in &f.records {
        writeln!(s, "{},{}", r.tx_ns, r.delay_ns).unwrap();
    }
    Some(s)
}

pub fn summary_csv(rows: &[crate::scenario::SummaryRow]) -> String {
    let mut s = String::from(
        "flow,source,queue,policy,load,count,min_us,max_us,mean_us,std_us,max_minus_min_us\n",
    );
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.flow,
            r.source,
            r.queue,
            r.policy,
            r.load,
            r.stats.count,
            us(r.stats.min_ns as f64),
            us(r.stats.max_ns as f64),
            us(r.stats.mean_ns),
            us(r.stats.std_ns),
            us(r.stats.max_minus_min_ns() as f64),
        )
        .unwrap();
    }
    s
}

pub fn summary_markdown(title: &str, rows: &[crate::scenario::SummaryRow]) -> String {
    let mut s = format!("### {title}\n\n");
    s.push_str("| Flow | Source | Queue | QoS | Network load | Min(us) | Max(us) | Mean(us) | Std(us) | Max-Min(us) |\n");
    s.push_str("|---|---|---|---|---|---:|---:|---:|---:|---:|\n");
    for r in rows {
        writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.flow,
            r.source,
            r.queue,
            r.policy,
            r.load,
            us(r.stats.min_ns as f64),
            us(r.stats.max_ns as f64),
            us(r.stats.mean_ns),
            us(r.stats.std_ns),
            us(r.stats.max_minus_min_ns() as f64),
        )
        .unwrap();
    }
    s
}

pub fn drops_csv(out: &RunOutput) -> String {
    let mut s = String::from("node,toward,queue,drops\n");
    for d in &out.drops {
        writeln!(s, "{},{},{},{}", d.node, d.toward, d.queue, d.drops).unwrap();
    }
    s
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s =
        String::from("value,flow,count,min_us,max_us,mean_us,std_us,max_minus_min_us,drops\n");
    for p in points {
        for r in &p.rows {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                p.value,
                r.flow,
                r.stats.count,
                us(r.stats.min_ns as f64),
                us(r.stats.max_ns as f64),
                us(r.stats.mean_ns),
                us(r.stats.std_ns),
                us(r.stats.max_minus_min_ns() as f64),
                p.total_drops,
            )
            .unwrap();
        }
    }
    s
}

/// A gnuplot script plotting every measured flow's series file.
pub fn gnuplot_script(out: &RunOutput) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset xlabel 'time (s)'\nset ylabel 'delay (us)'\nset key outside\nplot \\\n",
    );
    let measured: Vec<&str> = out
        .flows
        .iter()
        .filter(|f| f.measure)
        .map(|f| f.name.as_str())
        .collect();
    for (i, name) in measured.iter().enumerate() {
        let sep = if i + 1 == measured.len() { "" } else { ", \\" };
        writeln!(
            s,
            "  'series_{name}.csv' every ::1 using ($1/1e9):($2/1e3) with points pt 7 ps 0.3 title '{name}'{sep}"
        )
        .unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::scenario::run_scenario;

    #[test]
    fn csv_columns_are_stable() {
        let mut cfg = presets::preset("exp2_100m_noload").unwrap();
        cfg.duration_ns = 5_000_000;
        let out = run_scenario(&cfg).unwrap();
        let records = records_csv(&out);
        assert!(records.starts_with("flow,seq,t_tx_ns,t_rx_ns,delay_ns\n"));
        assert!(records.lines().count() > 1);
        let series = series_csv(&out, "f_a1").unwrap();
        assert!(series.starts_with("t_ns,delay_ns\n"));
        let summary = summary_csv(&out.rows);
        assert!(summary.contains("f_a1"));
        assert!(summary.contains("3.83"));
    }
}
