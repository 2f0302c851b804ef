use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Explored,
    Obstacle,
}

/// Exploration state over a regular grid. Cells only ever leave `Unknown`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    resolution: f64,
    origin: Point2,
    cols: usize,
    rows: usize,
    cells: Vec<CellState>,
}

/// Grid cell coordinates `(col, row)`.
pub type Cell = (usize, usize);

impl OccupancyGrid {
    /// A grid of `cols × rows` unknown cells. Panics if `resolution` is not
    /// positive or either dimension is zero.
    pub fn new(origin: Point2, resolution: f64, cols: usize, rows: usize) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        assert!(cols > 0 && rows > 0, "grid must have at least one cell");
        Self {
            resolution,
            origin,
            cols,
            rows,
            cells: vec![CellState::Unknown; cols * rows],
        }
    }

    /// Builds a grid from rows of cells, `rows[r][c]`.
    pub fn from_rows(resolution: f64, rows: &[Vec<CellState>]) -> Self {
        let mut grid = Self::new(Point2::default(), resolution, rows[0].len(), rows.len());
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), grid.cols, "ragged grid rows");
            for (c, &state) in row.iter().enumerate() {
                grid.cells[r * grid.cols + c] = state;
            }
        }
        grid
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn get(&self, (c, r): Cell) -> CellState {
        self.cells[r * self.cols + c]
    }

    /// Marks an unknown cell. Known cells are left untouched so the state
    /// transitions stay monotone. Returns true if the cell changed.
    pub fn reveal(&mut self, (c, r): Cell, state: CellState) -> bool {
        let slot = &mut self.cells[r * self.cols + c];
        if *slot == CellState::Unknown && state != CellState::Unknown {
            *slot = state;
            true
        } else {
            false
        }
    }

    pub fn center(&self, (c, r): Cell) -> Point2 {
        Point2::new(
            self.origin.x + (c as f64 + 0.5) * self.resolution,
            self.origin.y + (r as f64 + 0.5) * self.resolution,
        )
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }

    pub fn cells(&self) -> impl Iterator<Item = (Cell, CellState)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, &s)| ((i % self.cols, i / self.cols), s))
    }

    pub fn neighbors4(&self, (c, r): Cell) -> impl Iterator<Item = Cell> {
        super::scene::neighbors4(c, r, self.cols, self.rows)
    }

    /// An explored cell with at least one unknown four-connected neighbor.
    pub fn is_frontier(&self, cell: Cell) -> bool {
        self.get(cell) == CellState::Explored
            && self
                .neighbors4(cell)
                .any(|n| self.get(n) == CellState::Unknown)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reveal_is_monotone() {
        let mut g = OccupancyGrid::new(Point2::default(), 1.0, 3, 2);
        assert!(g.reveal((1, 1), CellState::Explored));
        assert!(!g.reveal((1, 1), CellState::Obstacle));
        assert!(!g.reveal((1, 1), CellState::Unknown));
        assert_eq!(g.get((1, 1)), CellState::Explored);
        assert_eq!(g.count(CellState::Unknown), 5);
        assert_eq!(g.center((2, 1)), Point2::new(2.5, 1.5));
    }
}
