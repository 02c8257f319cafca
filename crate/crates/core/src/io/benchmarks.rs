//! Built-in benchmark models and controllers.
//!
//! Observation rows left unspecified by a model description (for example
//! movement actions, or anything observed in an absorbing terminal state) are
//! deterministic on the model's default observation and therefore carry no
//! perturbation parameters.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fsc::Fsc;
use crate::pomdp::Pomdp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    ToyRover,
    RoverNav,
    Cancer,
    PartQcPolicy1,
    PartQcPolicy2,
    Tiger,
    Baby,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 7] = [
        BenchmarkId::ToyRover,
        BenchmarkId::RoverNav,
        BenchmarkId::Cancer,
        BenchmarkId::PartQcPolicy1,
        BenchmarkId::PartQcPolicy2,
        BenchmarkId::Tiger,
        BenchmarkId::Baby,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkId::ToyRover => "toy-rover",
            BenchmarkId::RoverNav => "rover-nav",
            BenchmarkId::Cancer => "cancer",
            BenchmarkId::PartQcPolicy1 => "part-qc-policy1",
            BenchmarkId::PartQcPolicy2 => "part-qc-policy2",
            BenchmarkId::Tiger => "tiger",
            BenchmarkId::Baby => "baby",
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownBenchmark(s.to_string()))
    }
}

/// Returns the benchmark model and its controller.
pub fn builtin(id: BenchmarkId) -> (Pomdp, Fsc) {
    let (m, pi) = match id {
        BenchmarkId::ToyRover => toy_rover(),
        BenchmarkId::RoverNav => rover_nav(),
        BenchmarkId::Cancer => cancer(),
        BenchmarkId::PartQcPolicy1 => part_qc(0.99, part_qc_policy1),
        BenchmarkId::PartQcPolicy2 => part_qc(0.90234, part_qc_policy2),
        BenchmarkId::Tiger => tiger(),
        BenchmarkId::Baby => baby(),
    };
    let m = m.checked().expect("built-in model is valid");
    (m, pi)
}

/// Looks a benchmark up by name.
pub fn builtin_by_name(name: &str) -> Result<(Pomdp, Fsc)> {
    Ok(builtin(name.parse()?))
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Makes every empty observation row deterministic on observation `o`.
fn fill_default_observation(m: &mut Pomdp, o: usize) {
    for a in 0..m.n_actions() {
        for s2 in 0..m.n_states() {
            if m.observation_row(a, s2).iter().all(|&p| p == 0.0) {
                m.set_z(a, s2, o, 1.0);
            }
        }
    }
}

/// Controller builder keyed by node, action and observation names.
struct FscBuilder<'a> {
    m: &'a Pomdp,
    nodes: Vec<(String, usize)>,
    edges: Vec<(String, String, String)>,
}

impl<'a> FscBuilder<'a> {
    fn new(m: &'a Pomdp) -> Self {
        FscBuilder { m, nodes: Vec::new(), edges: Vec::new() }
    }

    fn node(&mut self, name: &str, action: &str) -> &mut Self {
        let a = self.m.action_index(action).unwrap_or_else(|| panic!("unknown action {action}"));
        self.nodes.push((name.to_string(), a));
        self
    }

    fn on(&mut self, from: &str, obs: &str, to: &str) -> &mut Self {
        self.edges.push((from.to_string(), obs.to_string(), to.to_string()));
        self
    }

    /// Same successor for every observation.
    fn always(&mut self, from: &str, to: &str) -> &mut Self {
        for o in self.m.observations.clone() {
            self.on(from, &o, to);
        }
        self
    }

    fn build(&self) -> Fsc {
        let names: Vec<String> = self.nodes.iter().map(|n| n.0.clone()).collect();
        let idx = |n: &str| names.iter().position(|x| x == n).unwrap_or_else(|| panic!("unknown node {n}"));
        let mut next = vec![vec![None; self.m.n_observations()]; names.len()];
        for (from, obs, to) in &self.edges {
            let o = self.m.observation_index(obs).unwrap_or_else(|| panic!("unknown observation {obs}"));
            next[idx(from)][o] = Some(idx(to));
        }
        Fsc { nodes: names, initial: 0, action: self.nodes.iter().map(|n| n.1).collect(), next }
    }
}

const SANDS: [&str; 4] = ["large-smooth", "large-angular", "small-smooth", "small-angular"];

fn sand_is_large(i: usize) -> bool {
    i < 2
}
fn sand_is_smooth(i: usize) -> bool {
    i % 2 == 0
}
/// Sand the rover can cross.
fn sand_traversable(i: usize) -> bool {
    i == 0 || i == 3
}

fn set_sand_observations(m: &mut Pomdp, s2: usize, sand: usize) {
    let (size, texture) = (0, 1);
    let (t, f) = (0, 1);
    let large = if sand_is_large(sand) { 0.99 } else { 0.01 };
    m.set_z(size, s2, t, large);
    m.set_z(size, s2, f, 1.0 - large);
    let smooth = if sand_is_smooth(sand) { 0.99 } else { 0.01 };
    m.set_z(texture, s2, t, smooth);
    m.set_z(texture, s2, f, 1.0 - smooth);
}

fn toy_rover() -> (Pomdp, Fsc) {
    let mut states = vec!["terminal"];
    states.extend(SANDS);
    let mut m = Pomdp::zeros(
        strings(&states),
        strings(&["measure-size", "measure-texture", "go-through", "go-around"]),
        strings(&["true", "false"]),
        0.99,
    );
    for s in 0..5 {
        for a in 0..4 {
            let s2 = if s == 0 || a >= 2 { 0 } else { s };
            m.set_t(s, a, s2, 1.0);
        }
    }
    for sand in 0..4 {
        set_sand_observations(&mut m, sand + 1, sand);
    }
    fill_default_observation(&mut m, 0);
    for sand in 0..4 {
        if sand_traversable(sand) {
            m.set_r(sand + 1, 2, 1.0);
        }
        m.set_r(sand + 1, 3, 0.9);
    }
    m.initial = vec![0.0, 0.25, 0.25, 0.25, 0.25];

    let mut b = FscBuilder::new(&m);
    b.node("N1", "measure-size")
        .node("N2", "measure-texture")
        .node("N3", "measure-texture")
        .node("N4", "go-through")
        .node("N5", "go-around")
        .node("N6", "go-around")
        .node("N7", "go-through");
    b.on("N1", "true", "N2").on("N1", "false", "N3");
    b.on("N2", "true", "N4").on("N2", "false", "N5");
    b.on("N3", "true", "N6").on("N3", "false", "N7");
    for n in ["N4", "N5", "N6", "N7"] {
        b.always(n, n);
    }
    let pi = b.build();
    (m, pi)
}

/// Grid columns 1..=3, rows 1..=5.
const GRID_W: i32 = 3;
const GRID_H: i32 = 5;
/// Corridor cells where non-traversable sand stops the rover.
const SAND_CELLS: [(i32, i32); 2] = [(3, 3), (3, 4)];
const GOAL: (i32, i32) = (3, 5);

fn rover_nav() -> (Pomdp, Fsc) {
    let actions = ["measure-size", "measure-texture", "up", "down", "left", "right"];
    let mut states = vec!["terminal".to_string()];
    let cell = |x: i32, y: i32| ((x - 1) * GRID_H + (y - 1)) as usize;
    let n_cells = (GRID_W * GRID_H) as usize;
    for sand in SANDS {
        for x in 1..=GRID_W {
            for y in 1..=GRID_H {
                states.push(format!("{sand}-{x}-{y}"));
            }
        }
    }
    let sid = |sand: usize, x: i32, y: i32| 1 + sand * n_cells + cell(x, y);
    let mut m = Pomdp::zeros(states, strings(&actions), strings(&["true", "false"]), 0.99);
    for a in 0..actions.len() {
        m.set_t(0, a, 0, 1.0);
    }
    for sand in 0..4 {
        for x in 1..=GRID_W {
            for y in 1..=GRID_H {
                let s = sid(sand, x, y);
                for a in 0..actions.len() {
                    let stuck = SAND_CELLS.contains(&(x, y)) && !sand_traversable(sand);
                    if (x, y) == GOAL || stuck {
                        m.set_t(s, a, 0, 1.0);
                        continue;
                    }
                    let (dx, dy) = match actions[a] {
                        "up" => (0, 1),
                        "down" => (0, -1),
                        "left" => (-1, 0),
                        "right" => (1, 0),
                        _ => (0, 0),
                    };
                    let (nx, ny) = (x + dx, y + dy);
                    let (nx, ny) = if (1..=GRID_W).contains(&nx) && (1..=GRID_H).contains(&ny) { (nx, ny) } else { (x, y) };
                    m.set_t(s, a, sid(sand, nx, ny), 1.0);
                }
                set_sand_observations(&mut m, s, sand);
                for a in 0..actions.len() {
                    let r = if (x, y) == GOAL {
                        1.0
                    } else if actions[a] == "left" {
                        -0.1
                    } else {
                        0.0
                    };
                    m.set_r(s, a, r);
                }
            }
        }
    }
    fill_default_observation(&mut m, 0);
    let mut b0 = vec![0.0; m.n_states()];
    for sand in 0..4 {
        b0[sid(sand, 3, 1)] = 0.25;
    }
    m.initial = b0;

    let mut b = FscBuilder::new(&m);
    b.node("size", "measure-size").node("texture-large", "measure-texture").node("texture-small", "measure-texture");
    let short = ["short-1", "short-2", "short-3", "short-4"];
    let long = ["long-1", "long-2", "long-3", "long-4", "long-5", "long-6", "long-7", "long-8"];
    let long_actions = ["left", "left", "up", "up", "up", "up", "right", "right"];
    for n in short {
        b.node(n, "up");
    }
    for (n, a) in long.iter().zip(long_actions) {
        b.node(n, a);
    }
    b.node("goal", "up");
    b.on("size", "true", "texture-large").on("size", "false", "texture-small");
    b.on("texture-large", "true", "short-1").on("texture-large", "false", "long-1");
    b.on("texture-small", "true", "long-1").on("texture-small", "false", "short-1");
    for w in short.windows(2) {
        b.always(w[0], w[1]);
    }
    b.always("short-4", "goal");
    for w in long.windows(2) {
        b.always(w[0], w[1]);
    }
    b.always("long-8", "goal").always("goal", "goal");
    let pi = b.build();
    (m, pi)
}

fn cancer() -> (Pomdp, Fsc) {
    let mut m = Pomdp::zeros(
        strings(&["healthy", "in-situ", "invasive", "death"]),
        strings(&["wait", "test", "treat"]),
        strings(&["positive", "negative", "dead"]),
        0.999,
    );
    let (h, is, iv, d) = (0, 1, 2, 3);
    let (wait, test, treat) = (0, 1, 2);
    let (pos, neg, dead) = (0, 1, 2);
    for a in 0..3 {
        m.set_t(h, a, is, 0.02);
        m.set_t(h, a, h, 0.98);
        m.set_t(d, a, d, 1.0);
    }
    for a in [wait, test] {
        m.set_t(is, a, iv, 0.1);
        m.set_t(is, a, is, 0.9);
        m.set_t(iv, a, d, 0.6);
        m.set_t(iv, a, iv, 0.4);
    }
    m.set_t(is, treat, is, 0.4);
    m.set_t(is, treat, h, 0.6);
    m.set_t(iv, treat, h, 0.2);
    m.set_t(iv, treat, d, 0.2);
    m.set_t(iv, treat, iv, 0.6);

    for s2 in [h, is, iv] {
        m.set_z(wait, s2, neg, 1.0);
    }
    m.set_z(test, h, pos, 0.05);
    m.set_z(test, h, neg, 0.95);
    m.set_z(test, is, pos, 0.8);
    m.set_z(test, is, neg, 0.2);
    m.set_z(test, iv, pos, 1.0);
    m.set_z(treat, h, neg, 1.0);
    m.set_z(treat, is, pos, 1.0);
    m.set_z(treat, iv, pos, 1.0);
    for a in 0..3 {
        m.set_z(a, d, dead, 1.0);
    }
    for s in [h, is, iv] {
        m.set_r(s, wait, 1.0);
        m.set_r(s, test, 0.8);
        m.set_r(s, treat, 0.1);
    }
    m.initial = vec![1.0, 0.0, 0.0, 0.0];

    let mut b = FscBuilder::new(&m);
    for n in ["wait-1", "wait-2", "wait-3", "wait-4"] {
        b.node(n, "wait");
    }
    b.node("test", "test").node("test-pos", "test").node("test-neg", "test").node("treat", "treat");
    for w in ["wait-1", "wait-2", "wait-3", "wait-4"].windows(2) {
        b.on(w[0], "negative", w[1]);
    }
    b.on("wait-4", "negative", "test");
    b.on("test", "positive", "test-pos").on("test", "negative", "test-neg");
    // A mismatched pair restarts the test sequence.
    b.on("test-pos", "positive", "treat").on("test-pos", "negative", "test");
    b.on("test-neg", "negative", "wait-1").on("test-neg", "positive", "test");
    b.on("treat", "positive", "wait-1").on("treat", "negative", "wait-1");
    // Death is absorbing with zero reward; the controller idles in place.
    for n in ["wait-1", "wait-2", "wait-3", "wait-4", "test", "test-pos", "test-neg", "treat"] {
        b.on(n, "dead", n);
    }
    let pi = b.build();
    (m, pi)
}

fn part_qc(ac: f64, policy: fn(&Pomdp) -> Fsc) -> (Pomdp, Fsc) {
    let mut m = Pomdp::zeros(
        strings(&["terminal", "passing", "failing"]),
        strings(&["measure", "accept", "reject"]),
        strings(&["pass", "fail"]),
        1.0,
    );
    let (term, passing, failing) = (0, 1, 2);
    let (measure, accept, reject) = (0, 1, 2);
    for s in 0..3 {
        m.set_t(s, measure, s, 1.0);
        m.set_t(s, accept, term, 1.0);
        m.set_t(s, reject, term, 1.0);
    }
    m.set_z(measure, passing, 0, ac);
    m.set_z(measure, passing, 1, 1.0 - ac);
    m.set_z(measure, failing, 1, ac);
    m.set_z(measure, failing, 0, 1.0 - ac);
    fill_default_observation(&mut m, 0);
    m.set_r(failing, accept, -1.0);
    m.initial = vec![0.0, 0.5, 0.5];
    let pi = policy(&m);
    (m, pi)
}

fn part_qc_policy1(m: &Pomdp) -> Fsc {
    let mut b = FscBuilder::new(m);
    b.node("measure-1", "measure").node("measure-2", "measure").node("accept", "accept").node("reject", "reject");
    b.on("measure-1", "pass", "accept").on("measure-1", "fail", "measure-2");
    b.on("measure-2", "pass", "accept").on("measure-2", "fail", "reject");
    b.always("accept", "measure-1").always("reject", "measure-1");
    b.build()
}

fn part_qc_policy2(m: &Pomdp) -> Fsc {
    let mut b = FscBuilder::new(m);
    b.node("measure", "measure")
        .node("measure-pass", "measure")
        .node("measure-fail", "measure")
        .node("accept", "accept")
        .node("reject", "reject");
    b.on("measure", "pass", "measure-pass").on("measure", "fail", "measure-fail");
    b.on("measure-pass", "pass", "accept").on("measure-pass", "fail", "measure-fail");
    b.on("measure-fail", "fail", "reject").on("measure-fail", "pass", "measure-pass");
    b.always("accept", "measure").always("reject", "measure");
    b.build()
}

fn tiger() -> (Pomdp, Fsc) {
    let mut m = Pomdp::zeros(
        strings(&["tiger-left", "tiger-right"]),
        strings(&["listen", "open-left", "open-right"]),
        strings(&["hear-left", "hear-right"]),
        0.95,
    );
    for s in 0..2 {
        m.set_t(s, 0, s, 1.0);
        for a in 1..3 {
            m.set_t(s, a, 0, 0.5);
            m.set_t(s, a, 1, 0.5);
            m.set_z(a, s, 0, 0.5);
            m.set_z(a, s, 1, 0.5);
        }
        m.set_z(0, s, s, 0.85);
        m.set_z(0, s, 1 - s, 0.15);
        m.set_r(s, 0, -1.0);
    }
    m.set_r(0, 1, -100.0);
    m.set_r(0, 2, 10.0);
    m.set_r(1, 1, 10.0);
    m.set_r(1, 2, -100.0);
    m.initial = vec![0.5, 0.5];

    let mut b = FscBuilder::new(&m);
    b.node("listen", "listen")
        .node("heard-left", "listen")
        .node("heard-right", "listen")
        .node("open-right", "open-right")
        .node("open-left", "open-left");
    b.on("listen", "hear-left", "heard-left").on("listen", "hear-right", "heard-right");
    b.on("heard-left", "hear-left", "open-right").on("heard-left", "hear-right", "listen");
    b.on("heard-right", "hear-right", "open-left").on("heard-right", "hear-left", "listen");
    b.always("open-right", "listen").always("open-left", "listen");
    let pi = b.build();
    (m, pi)
}

fn baby() -> (Pomdp, Fsc) {
    let mut m = Pomdp::zeros(strings(&["hungry", "sated"]), strings(&["feed", "ignore"]), strings(&["crying", "quiet"]), 0.9);
    let (hungry, sated) = (0, 1);
    let (feed, ignore) = (0, 1);
    for s in 0..2 {
        m.set_t(s, feed, sated, 1.0);
    }
    m.set_t(hungry, ignore, hungry, 1.0);
    m.set_t(sated, ignore, hungry, 0.1);
    m.set_t(sated, ignore, sated, 0.9);
    for a in 0..2 {
        m.set_z(a, hungry, 0, 0.8);
        m.set_z(a, hungry, 1, 0.2);
        m.set_z(a, sated, 0, 0.1);
        m.set_z(a, sated, 1, 0.9);
    }
    m.set_r(hungry, feed, -15.0);
    m.set_r(hungry, ignore, -10.0);
    m.set_r(sated, feed, -5.0);
    m.initial = vec![0.0, 1.0];

    let mut b = FscBuilder::new(&m);
    b.node("ignore", "ignore").node("feed", "feed");
    b.on("ignore", "crying", "feed").on("ignore", "quiet", "ignore");
    b.always("feed", "ignore");
    let pi = b.build();
    (m, pi)
}
