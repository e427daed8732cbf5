//! A reduced-scale randomized self-check, runnable from the command line.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::flow::Digraph;
use crate::graph::{from_weighted, WeightedEdge, WeightedGraph};
use crate::matroid::gammoid_rep;
use crate::partition::{build_network, Config, Mode};
use crate::rng;
use crate::verify::{gammoid_oracle_check, tc_equivalent};

#[derive(Clone, Debug)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Instances per suite; zero runs nothing and passes.
    pub trials: usize,
    pub field: Field,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            seed: 0,
            trials: 20,
            field: Field::default(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SelftestReport {
    pub entries: Vec<(String, String)>,
    pub passed: bool,
}

impl SelftestReport {
    fn put(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k}={v}").unwrap();
        }
        writeln!(out, "status={}", if self.passed { "pass" } else { "fail" }).unwrap();
        out
    }
}

/// A random multigraph instance: `n <= max_n`, `m <= max_m` weighted edges,
/// `k <= max_k` terminals.
pub fn random_instance(
    seed: u64,
    max_n: usize,
    max_m: usize,
    max_k: usize,
    max_w: i64,
) -> WeightedGraph {
    let mut r = rng::rng(seed);
    let n = r.gen_range(2..=max_n);
    let m = r.gen_range(1..=max_m);
    let edges = (0..m)
        .filter_map(|_| {
            let (u, v) = (r.gen_range(1..=n), r.gen_range(1..=n));
            (u != v).then(|| WeightedEdge {
                u,
                v,
                w: r.gen_range(1..=max_w),
            })
        })
        .collect();
    let mut terminals: Vec<usize> = (1..=n).collect();
    terminals.shuffle(&mut r);
    terminals.truncate(r.gen_range(1..=max_k.min(n)));
    WeightedGraph {
        n,
        edges,
        terminals,
    }
}

pub fn random_digraph(seed: u64, max_n: usize) -> (Digraph, Vec<usize>) {
    let mut r = rng::rng(seed);
    let n = r.gen_range(1..=max_n);
    let mut d = Digraph::new(n);
    for _ in 0..r.gen_range(0..=3 * n) {
        let (u, v) = (r.gen_range(0..n), r.gen_range(0..n));
        if u != v {
            d.add_arc(u, v);
        }
    }
    let mut sources: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.35)).collect();
    if sources.is_empty() {
        sources.push(0);
    }
    (d, sources)
}

/// Runs the gammoid, pipeline and determinism suites. Randomized-construction
/// failures are reported and counted; they only fail the run when the field
/// is the default one, where they should never happen.
pub fn run(config: &SelftestConfig) -> Result<SelftestReport> {
    let mut report = SelftestReport {
        passed: true,
        ..Default::default()
    };
    let default_field = config.field == Field::default();
    report.put("seed", config.seed);
    report.put("trials", config.trials);
    report.put("prime", config.field.modulus());

    let (mut queries, mut disagreements, mut rerandomized, mut reported) = (0, 0, 0, 0);
    for i in 0..config.trials {
        let s = rng::derive2(config.seed, 1, i as u64);
        let (d, sources) = random_digraph(s, 15);
        match gammoid_rep(&d, &sources, config.field, s) {
            Ok(g) => {
                rerandomized += g.attempts - 1;
                disagreements += gammoid_oracle_check(&g.rep, &d, &sources, 50, s)?;
                queries += 50;
            }
            Err(Error::RandomizedFailure { .. }) => reported += 1,
            Err(e) => return Err(e),
        }
    }
    report.put("gammoid.queries", queries);
    report.put("gammoid.disagreements", disagreements);
    report.put("gammoid.rerandomizations", rerandomized);
    report.put("gammoid.reported_failures", reported);
    if rerandomized > 0 {
        log::info!("{rerandomized} gammoid re-randomizations over F_{}", config.field.modulus());
    }
    report.passed &= disagreements == 0 && (reported == 0 || !default_field);

    let (mut runs, mut equivalent, mut pipeline_reported, mut deterministic) = (0, 0, 0, 0);
    for i in 0..config.trials {
        let s = rng::derive2(config.seed, 2, i as u64);
        let input = random_instance(s, 12, 24, 5, 4);
        let c = 1 + (s % 3) as usize;
        let g = from_weighted(&input, c)?;
        for mode in [Mode::Existence, Mode::Expander] {
            let cfg = Config {
                mode,
                seed: s,
                field: config.field,
                ..Config::default()
            };
            runs += 1;
            let net = match build_network(&input, c, &cfg) {
                Ok(net) => net,
                Err(e) if matches!(e.root(), Error::RandomizedFailure { .. }) => {
                    pipeline_reported += 1;
                    continue;
                }
                Err(e) if matches!(e.root(), Error::Input(_)) && !default_field => {
                    // the field can be too small for the uniform matroid
                    pipeline_reported += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if tc_equivalent(&g, &net.graph, &net.terminals, c)?.equivalent {
                equivalent += 1;
            }
            let again = build_network(&input, c, &cfg)?;
            if again.graph == net.graph && again.stats == net.stats {
                deterministic += 1;
            }
        }
    }
    let completed = runs - pipeline_reported;
    report.put("pipeline.runs", runs);
    report.put("pipeline.equivalent", equivalent);
    report.put("pipeline.reported_failures", pipeline_reported);
    report.put("pipeline.deterministic", deterministic);
    report.passed &= equivalent == completed
        && deterministic == completed
        && (pipeline_reported == 0 || !default_field);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_pass_vacuously() {
        let r = run(&SelftestConfig {
            trials: 0,
            ..Default::default()
        })
        .unwrap();
        assert!(r.passed);
        assert!(r.render().ends_with("status=pass\n"));
    }

    #[test]
    fn small_default_run_passes() {
        let r = run(&SelftestConfig {
            trials: 3,
            ..Default::default()
        })
        .unwrap();
        assert!(r.passed, "{}", r.render());
    }
}
