use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::DomainError;
use crate::mdp::{Mdp, MdpBuilder, StateId};

/// Layout shipped with the crate.
pub const DEFAULT_LAYOUT: &str = include_str!("../../data/dst_default.txt");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Water,
    Wall,
    Treasure(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DstLayout {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Cell>,
    pub start: (usize, usize),
}

impl DstLayout {
    pub fn cell(&self, r: usize, c: usize) -> Cell {
        self.cells[r * self.cols + c]
    }

    /// Parses the text layout format:
    ///
    /// ```text
    /// # comment
    /// grid:
    /// S..
    /// A#.
    /// treasures:
    /// A 120
    /// ```
    ///
    /// `.` is water, `#` is a wall, `S` the (water) start cell, and an
    /// uppercase letter a treasure whose value is given under `treasures:`.
    pub fn parse(text: &str) -> Result<Self, DomainError> {
        enum Section {
            None,
            Grid,
            Treasures,
        }
        let mut section = Section::None;
        let mut grid: Vec<(usize, Vec<char>)> = Vec::new();
        let mut values: HashMap<char, f64> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') && !matches!(section, Section::Grid) {
                continue;
            }
            match line {
                "grid:" => {
                    section = Section::Grid;
                    continue;
                }
                "treasures:" => {
                    section = Section::Treasures;
                    continue;
                }
                _ => {}
            }
            match section {
                Section::None => {
                    return Err(DomainError::Parse {
                        line: line_no,
                        message: format!("expected `grid:` or `treasures:`, found `{line}`"),
                    })
                }
                Section::Grid => grid.push((line_no, line.chars().collect())),
                Section::Treasures => {
                    let mut parts = line.split_whitespace();
                    let (Some(key), Some(val), None) = (parts.next(), parts.next(), parts.next())
                    else {
                        return Err(DomainError::Parse {
                            line: line_no,
                            message: "treasure lines are `<letter> <value>`".into(),
                        });
                    };
                    let mut chars = key.chars();
                    let (Some(k), None) = (chars.next(), chars.next()) else {
                        return Err(DomainError::Parse {
                            line: line_no,
                            message: format!("treasure key `{key}` must be one letter"),
                        });
                    };
                    let v: f64 = val.parse().map_err(|_| DomainError::Parse {
                        line: line_no,
                        message: format!("bad treasure value `{val}`"),
                    })?;
                    values.insert(k, v);
                }
            }
        }
        if grid.is_empty() {
            return Err(DomainError::InvalidLayout("empty grid".into()));
        }
        let cols = grid[0].1.len();
        let mut cells = Vec::with_capacity(grid.len() * cols);
        let mut start = None;
        for (r, (line_no, row)) in grid.iter().enumerate() {
            if row.len() != cols {
                return Err(DomainError::Parse {
                    line: *line_no,
                    message: format!("row has {} cells, expected {cols}", row.len()),
                });
            }
            for (c, ch) in row.iter().enumerate() {
                cells.push(match ch {
                    '.' => Cell::Water,
                    '#' => Cell::Wall,
                    'S' => {
                        start = Some((r, c));
                        Cell::Water
                    }
                    k if k.is_ascii_uppercase() => match values.get(k) {
                        Some(&v) => Cell::Treasure(v),
                        None => {
                            return Err(DomainError::Parse {
                                line: *line_no,
                                message: format!("treasure `{k}` has no value"),
                            })
                        }
                    },
                    other => {
                        return Err(DomainError::Parse {
                            line: *line_no,
                            message: format!("unknown cell glyph `{other}`"),
                        })
                    }
                });
            }
        }
        let start = start.ok_or_else(|| DomainError::InvalidLayout("no start cell `S`".into()))?;
        Ok(DstLayout {
            rows: grid.len(),
            cols,
            cells,
            start,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DstConfig {
    pub layout: DstLayout,
    pub horizon: u32,
    pub step_cost: f64,
    pub terminal_base: f64,
    pub p_success: f64,
    /// Probability of drifting to each of the two directions 45° off.
    pub p_slip: f64,
}

impl Default for DstConfig {
    fn default() -> Self {
        DstConfig {
            layout: DstLayout::parse(DEFAULT_LAYOUT).expect("shipped layout parses"),
            horizon: 15,
            step_cost: 5.0,
            terminal_base: 500.0,
            p_success: 0.6,
            p_slip: 0.2,
        }
    }
}

impl DstConfig {
    fn validate(&self) -> Result<(), DomainError> {
        if (self.p_success + 2.0 * self.p_slip - 1.0).abs() > 1e-9
            || self.p_success < 0.0
            || self.p_slip < 0.0
        {
            return Err(DomainError::InvalidParams(
                "move probabilities must satisfy success + 2 slip = 1".into(),
            ));
        }
        if self.step_cost < 0.0 {
            return Err(DomainError::InvalidParams("negative step cost".into()));
        }
        for cell in &self.layout.cells {
            if let Cell::Treasure(r) = *cell {
                if !(r > 0.0 && r <= self.terminal_base) {
                    return Err(DomainError::InvalidLayout(format!(
                        "treasure value {r} outside (0, {}]",
                        self.terminal_base
                    )));
                }
            }
        }
        let (r, c) = self.layout.start;
        if self.layout.cell(r, c) != Cell::Water {
            return Err(DomainError::InvalidLayout("start must be water".into()));
        }
        Ok(())
    }
}

/// Compass directions clockwise from north, as (row, col) offsets.
pub const DIRECTIONS: [(&str, i64, i64); 8] = [
    ("N", -1, 0),
    ("NE", -1, 1),
    ("E", 0, 1),
    ("SE", 1, 1),
    ("S", 1, 0),
    ("SW", 1, -1),
    ("W", 0, -1),
    ("NW", -1, -1),
];

pub fn dst_state_name(r: usize, c: usize, t: u32) -> String {
    format!("r{r}c{c}_t{t}")
}

/// Deep-sea-treasure gridworld over (cell, timestep).
///
/// Each compass move costs `step_cost`; the intended direction succeeds
/// with `p_success` and drifts 45° either way with `p_slip` each. Moves into
/// walls or off the grid stay in place. Reaching a treasure worth `r` leads
/// to a `collect` action costing `terminal_base - r`; running out of time
/// leads to `timeout` costing `terminal_base`.
pub fn build_deep_sea_treasure(cfg: &DstConfig) -> Result<Mdp, DomainError> {
    cfg.validate()?;
    let lay = &cfg.layout;
    let mut b = MdpBuilder::new();
    let goal = b.add_state("goal")?;
    b.mark_goal(goal)?;
    let mut ids: HashMap<(usize, usize, u32), StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |b: &mut MdpBuilder, q: &mut VecDeque<_>, key: (usize, usize, u32)| {
        *ids.entry(key).or_insert_with(|| {
            q.push_back(key);
            b.state(&dst_state_name(key.0, key.1, key.2))
        })
    };
    let start = intern(&mut b, &mut queue, (lay.start.0, lay.start.1, 0));
    b.set_initial(start)?;

    let target = |r: usize, c: usize, dir: usize| -> (usize, usize) {
        let (_, dr, dc) = DIRECTIONS[dir % 8];
        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
        if nr < 0 || nc < 0 || nr >= lay.rows as i64 || nc >= lay.cols as i64 {
            return (r, c);
        }
        let (nr, nc) = (nr as usize, nc as usize);
        match lay.cell(nr, nc) {
            Cell::Wall => (r, c),
            _ => (nr, nc),
        }
    };

    while let Some((r, c, t)) = queue.pop_front() {
        let here = intern(&mut b, &mut queue, (r, c, t));
        match lay.cell(r, c) {
            Cell::Treasure(v) => {
                b.add_action(here, "collect", cfg.terminal_base - v, vec![(goal, 1.0)])?;
            }
            _ if t >= cfg.horizon => {
                b.add_action(here, "timeout", cfg.terminal_base, vec![(goal, 1.0)])?;
            }
            _ => {
                for (dir, (label, _, _)) in DIRECTIONS.iter().enumerate() {
                    let mut succ = Vec::with_capacity(3);
                    for (d, p) in [
                        (dir, cfg.p_success),
                        (dir + 1, cfg.p_slip),
                        (dir + 7, cfg.p_slip),
                    ] {
                        if p > 0.0 {
                            let (nr, nc) = target(r, c, d);
                            succ.push((intern(&mut b, &mut queue, (nr, nc, t + 1)), p));
                        }
                    }
                    b.add_action(here, *label, cfg.step_cost, succ)?;
                }
            }
        }
    }
    Ok(b.build()?)
}
