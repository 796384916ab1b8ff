use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Dataset, TemporalGraph, Trajectory};

/// The six starting patterns, as (row, column) offsets of live cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    Blinker,
    Beacon,
    Toad,
    Block,
    Glider,
    BlockAndGlider,
}

impl Pattern {
    pub const ALL: [Pattern; 6] = [
        Pattern::Blinker,
        Pattern::Beacon,
        Pattern::Toad,
        Pattern::Block,
        Pattern::Glider,
        Pattern::BlockAndGlider,
    ];

    pub fn cells(self) -> &'static [(usize, usize)] {
        match self {
            Pattern::Blinker => &[(0, 0), (0, 1), (0, 2)],
            Pattern::Beacon => &[(0, 0), (0, 1), (1, 0), (2, 3), (3, 2), (3, 3)],
            Pattern::Toad => &[(0, 1), (0, 2), (0, 3), (1, 0), (1, 1), (1, 2)],
            Pattern::Block => &[(0, 0), (0, 1), (1, 0), (1, 1)],
            Pattern::Glider => &[(0, 1), (1, 2), (2, 0), (2, 1), (2, 2)],
            // Methuselah that settles into a block and a glider at generation 106.
            Pattern::BlockAndGlider => &[(0, 0), (0, 1), (1, 0), (1, 2), (2, 2), (2, 3)],
        }
    }

    /// (rows, columns) of the bounding box.
    pub fn extent(self) -> (usize, usize) {
        let cells = self.cells();
        let rows = cells.iter().map(|c| c.0).max().unwrap() + 1;
        let cols = cells.iter().map(|c| c.1).max().unwrap() + 1;
        (rows, cols)
    }

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Blinker => "blinker",
            Pattern::Beacon => "beacon",
            Pattern::Toad => "toad",
            Pattern::Block => "block",
            Pattern::Glider => "glider",
            Pattern::BlockAndGlider => "block_and_glider",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown pattern {s:?}")))
    }
}

/// Binary cell states, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl Grid {
    pub fn dead(width: usize, height: usize) -> Self {
        Grid {
            width,
            height,
            cells: vec![false; width * height],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, alive: bool) {
        self.cells[row * self.width + col] = alive;
    }

    pub fn population(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    fn live_neighbors(&self, row: usize, col: usize) -> usize {
        let mut n = 0;
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (r, c) = (row as i64 + dr, col as i64 + dc);
                if r >= 0
                    && c >= 0
                    && (r as usize) < self.height
                    && (c as usize) < self.width
                    && self.get(r as usize, c as usize)
                {
                    n += 1;
                }
            }
        }
        n
    }
}

/// One synchronous update: a cell lives iff `own + 2 * neighbors` lies in
/// [5, 7]. Cells beyond the border are dead.
pub fn gol_step(g: &Grid) -> Grid {
    let mut next = Grid::dead(g.width, g.height);
    for row in 0..g.height {
        for col in 0..g.width {
            let score = g.get(row, col) as usize + 2 * g.live_neighbors(row, col);
            next.set(row, col, (5..=7).contains(&score));
        }
    }
    next
}

/// Live cells become nodes (id = row * width + col); 8-adjacent live cells
/// are joined by an edge.
pub fn grid_to_graph(g: &Grid) -> TemporalGraph {
    let id = |r: usize, c: usize| (r * g.width + c).to_string();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for row in 0..g.height {
        for col in 0..g.width {
            if !g.get(row, col) {
                continue;
            }
            nodes.push(id(row, col));
            // Forward half of the neighborhood so each pair is emitted once.
            let forward = [(0i64, 1i64), (1, -1), (1, 0), (1, 1)];
            for (dr, dc) in forward {
                let (r, c) = (row as i64 + dr, col as i64 + dc);
                if c >= 0 && (c as usize) < g.width && (r as usize) < g.height && g.get(r as usize, c as usize) {
                    edges.push((id(row, col), id(r as usize, c as usize)));
                }
            }
        }
    }
    TemporalGraph::new(nodes, edges)
}

/// Whether noise cells take part in the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// The noisy grid is recorded and also evolved.
    #[default]
    Feedback,
    /// Noise is added to the recorded snapshot only; the pattern evolves
    /// undisturbed.
    Observational,
}

impl NoiseMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "feedback" => Ok(NoiseMode::Feedback),
            "observational" => Ok(NoiseMode::Observational),
            _ => Err(Error::arg(format!(
                "unknown noise mode {s:?}; expected feedback or observational"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::Feedback => "feedback",
            NoiseMode::Observational => "observational",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GolParams {
    pub width: usize,
    pub height: usize,
    pub pattern: Pattern,
    pub steps: usize,
    pub noise_rate: f64,
    pub noise_mode: NoiseMode,
    pub seed: u64,
}

impl GolParams {
    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = self.pattern.extent();
        if rows > self.height || cols > self.width {
            return Err(Error::arg(format!(
                "pattern {} ({rows}x{cols}) does not fit a {}x{} grid",
                self.pattern.name(),
                self.height,
                self.width
            )));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(Error::arg(format!("noise rate {} outside [0, 1]", self.noise_rate)));
        }
        if self.steps < 1 {
            return Err(Error::arg("steps must be >= 1"));
        }
        Ok(())
    }
}

/// Initial placement plus `steps` noisy updates, i.e. `steps + 1` snapshots.
///
/// After each rule update every dead cell is switched on with probability
/// `noise_rate`. Under [`NoiseMode::Feedback`] the noisy grid is also the
/// input of the next update.
pub fn generate_gol_trajectory(p: &GolParams) -> Result<Trajectory> {
    let snapshots = simulate(p)?.iter().map(grid_to_graph).collect();
    Ok(Trajectory {
        id: format!("gol-{}-{}", p.pattern.name(), p.seed),
        snapshots,
    })
}

pub(crate) fn simulate(p: &GolParams) -> Result<Vec<Grid>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (rows, cols) = p.pattern.extent();
    let top = rng.random_range(0..=p.height - rows);
    let left = rng.random_range(0..=p.width - cols);
    let mut grid = Grid::dead(p.width, p.height);
    for &(r, c) in p.pattern.cells() {
        grid.set(top + r, left + c, true);
    }
    let mut states = vec![grid.clone()];
    for _ in 0..p.steps {
        grid = gol_step(&grid);
        let mut noisy = grid.clone();
        for cell in noisy.cells.iter_mut() {
            if !*cell && rng.random_bool(p.noise_rate) {
                *cell = true;
            }
        }
        if p.noise_mode == NoiseMode::Feedback {
            grid = noisy.clone();
        }
        states.push(noisy);
    }
    Ok(states)
}

/// `count` trajectories cycling through `patterns`. With `drop_initial` the
/// placement snapshot is omitted, leaving `steps` snapshots per trajectory.
pub fn generate_gol_dataset(p: &GolParams, patterns: &[Pattern], count: usize, drop_initial: bool) -> Result<Dataset> {
    if patterns.is_empty() {
        return Err(Error::arg("at least one pattern required"));
    }
    if drop_initial && p.steps < 2 {
        return Err(Error::arg("--drop-initial needs at least 2 steps"));
    }
    let trajectories = super::child_seeds(p.seed, count)
        .into_iter()
        .enumerate()
        .map(|(j, seed)| {
            let pattern = patterns[j % patterns.len()];
            let mut t = generate_gol_trajectory(&GolParams { pattern, seed, ..*p })?;
            if drop_initial {
                t.snapshots.remove(0);
            }
            t.id = format!("gol-{j:03}-{}", pattern.name());
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<&str> = patterns.iter().map(|p| p.name()).collect();
    Ok(Dataset::new(trajectories)
        .with_meta("generator", "game_of_life")
        .with_meta("width", p.width)
        .with_meta("height", p.height)
        .with_meta("steps", p.steps)
        .with_meta("noise_rate", p.noise_rate)
        .with_meta("noise_mode", p.noise_mode.name())
        .with_meta("patterns", names.join(","))
        .with_meta("drop_initial", drop_initial)
        .with_meta("seed", p.seed)
        .with_meta("trajectories", count))
}
